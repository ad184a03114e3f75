#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lifg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data: bad JSON lines, missing fields,
/// unknown concepts, cycles in a hierarchy, missing support.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

/// A JSON-lines record that could not be parsed. `line()` is 1-based.
class FormatError : public DataError {
 public:
  FormatError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A cross-lingual experiment whose language sets violate its declared setup.
class SetupError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied parameter outside its documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace lifg
