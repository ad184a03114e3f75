#pragma once

#include <fstream>
#include <string>

#include "lifg/error.hpp"

namespace lifg {

template <class Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(number, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) throw FormatError(number, "expected a JSON object");
    fn(record, number);
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
}

}  // namespace lifg
