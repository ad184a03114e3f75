#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lifg {

/// Normalized terms of a text, in reading order. Every token is nonempty,
/// case-folded, NFC and free of whitespace.
struct TokenStream {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  friend bool operator==(const TokenStream&, const TokenStream&) = default;
};

/// Unicode word segmentation (ICU word boundaries for `language`), NFC,
/// full case folding. Segments without a single letter (punctuation, digits,
/// symbols) are dropped. Diacritics are kept, no stemming.
TokenStream tokenize(std::string_view text, std::string_view language);

std::string join(const TokenStream& stream, char separator = ' ');

/// Tokenizer with optional per-language stopword lists. Without stopwords it
/// behaves exactly like the free tokenize().
class Tokenizer {
 public:
  Tokenizer() = default;

  /// Stopword file: UTF-8, one entry per line; entries are normalized the same
  /// way as document text.
  void load_stopwords(const std::string& language, const std::filesystem::path& path);
  void add_stopwords(const std::string& language, const std::vector<std::string>& words);

  TokenStream operator()(std::string_view text, std::string_view language) const;

  bool has_stopwords(std::string_view language) const;

 private:
  std::map<std::string, std::unordered_set<std::string>, std::less<>> stopwords_;
};

using TermCounts = std::unordered_map<std::string, std::uint64_t>;

/// Adds `weight` for every token occurrence in `stream`.
void accumulate_counts(TermCounts& counts, const TokenStream& stream, std::uint64_t weight = 1);

}  // namespace lifg
