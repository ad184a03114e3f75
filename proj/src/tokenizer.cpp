#include "lifg/tokenizer.hpp"

#include <fstream>
#include <memory>

#include <unicode/brkiter.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "lifg/error.hpp"

namespace lifg {

namespace {

const icu::Normalizer2& nfc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error(std::string("ICU NFC unavailable: ") + u_errorName(status));
    return n;
  }();
  return *instance;
}

// BreakIterator construction loads rule data; keep one per thread and language.
icu::BreakIterator& word_breaker(std::string_view language) {
  thread_local std::map<std::string, std::unique_ptr<icu::BreakIterator>, std::less<>> cache;
  if (auto it = cache.find(language); it != cache.end()) return *it->second;
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> bi(
      icu::BreakIterator::createWordInstance(icu::Locale(std::string(language).c_str()), status));
  if (U_FAILURE(status) || !bi)
    throw Error(std::string("ICU word break iterator unavailable: ") + u_errorName(status));
  auto& slot = cache[std::string(language)];
  slot = std::move(bi);
  return *slot;
}

bool has_letter(const icu::UnicodeString& s) {
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    if (u_isalpha(c)) return true;
    i += U16_LENGTH(c);
  }
  return false;
}

bool has_space(const icu::UnicodeString& s) {
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    if (u_isUWhiteSpace(c)) return true;
    i += U16_LENGTH(c);
  }
  return false;
}

}  // namespace

TokenStream tokenize(std::string_view text, std::string_view language) {
  TokenStream out;
  if (text.empty()) return out;
  UErrorCode status = U_ZERO_ERROR;
  const icu::UnicodeString raw =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString normalized = nfc().normalize(raw, status);
  if (U_FAILURE(status)) throw Error(std::string("NFC normalization failed: ") + u_errorName(status));

  icu::BreakIterator& bi = word_breaker(language);
  bi.setText(normalized);
  int32_t start = bi.first();
  for (int32_t end = bi.next(); end != icu::BreakIterator::DONE; start = end, end = bi.next()) {
    icu::UnicodeString piece(normalized, start, end - start);
    if (!has_letter(piece) || has_space(piece)) continue;
    piece.foldCase();
    piece = nfc().normalize(piece, status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
    std::string token;
    piece.toUTF8String(token);
    out.tokens.push_back(std::move(token));
  }
  return out;
}

std::string join(const TokenStream& stream, char separator) {
  std::string joined;
  for (const auto& t : stream.tokens) {
    if (!joined.empty()) joined += separator;
    joined += t;
  }
  return joined;
}

void Tokenizer::load_stopwords(const std::string& language, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open stopword file " + path.string());
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) words.push_back(line);
  add_stopwords(language, words);
}

void Tokenizer::add_stopwords(const std::string& language, const std::vector<std::string>& words) {
  auto& set = stopwords_[language];
  for (const auto& w : words)
    for (auto& t : tokenize(w, language).tokens) set.insert(std::move(t));
}

TokenStream Tokenizer::operator()(std::string_view text, std::string_view language) const {
  TokenStream stream = tokenize(text, language);
  auto it = stopwords_.find(language);
  if (it == stopwords_.end() || it->second.empty()) return stream;
  std::erase_if(stream.tokens, [&](const std::string& t) { return it->second.contains(t); });
  return stream;
}

bool Tokenizer::has_stopwords(std::string_view language) const {
  auto it = stopwords_.find(language);
  return it != stopwords_.end() && !it->second.empty();
}

void accumulate_counts(TermCounts& counts, const TokenStream& stream, std::uint64_t weight) {
  for (const auto& t : stream.tokens) counts[t] += weight;
}

}  // namespace lifg
