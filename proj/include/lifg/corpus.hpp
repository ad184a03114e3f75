#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lifg {

enum class ArticleFlag { disambiguation, redirect, catalog };

std::string_view to_string(ArticleFlag flag);
/// Throws DataError for names outside the flag vocabulary.
ArticleFlag parse_flag(std::string_view name);

/// One support text s(c,l) for a basic concept in one language. A concept may
/// own several articles in the same language.
struct SupportArticle {
  std::string concept_id;
  std::string language;
  std::string title;
  std::string text;
  std::uint64_t links_in = 0;
  std::uint64_t links_out = 0;
  std::set<ArticleFlag> flags;

  friend bool operator==(const SupportArticle&, const SupportArticle&) = default;
};

struct LabeledDocument {
  std::string doc_id;
  std::string language;
  std::string text;
  std::optional<std::string> label;

  friend bool operator==(const LabeledDocument&, const LabeledDocument&) = default;
};

struct FilterConfig {
  std::uint64_t min_chars = 500;
  std::uint64_t min_links_in = 5;
  std::uint64_t min_links_out = 5;
  std::set<ArticleFlag> drop_flags{ArticleFlag::disambiguation, ArticleFlag::redirect,
                                   ArticleFlag::catalog};

  /// Thresholds all zero, nothing dropped.
  static FilterConfig keep_all() { return {0, 0, 0, {}}; }
};

// JSON-lines record codecs. `line` is only used for error messages.
SupportArticle parse_support_article(const nlohmann::json& record, std::size_t line);
LabeledDocument parse_labeled_document(const nlohmann::json& record, std::size_t line);
nlohmann::json to_json(const SupportArticle& article);
nlohmann::json to_json(const LabeledDocument& doc);

std::vector<SupportArticle> load_support_corpus(const std::filesystem::path& path);
/// Rejects duplicate doc_ids.
std::vector<LabeledDocument> load_labeled_dataset(const std::filesystem::path& path);
void write_support_corpus(const std::filesystem::path& path,
                          const std::vector<SupportArticle>& articles);
void write_labeled_dataset(const std::filesystem::path& path,
                           const std::vector<LabeledDocument>& docs);

/// Keeps articles with at least `min_chars` code points of text, enough
/// inbound/outbound links and no flag in `drop_flags`. Order is preserved.
std::vector<SupportArticle> filter_articles(const std::vector<SupportArticle>& articles,
                                            const FilterConfig& cfg);

nlohmann::json to_json(const FilterConfig& cfg);
FilterConfig filter_config_from_json(const nlohmann::json& j);

/// Calls fn(record, line_number) for every non-blank line of a JSON-lines
/// file. Parse failures raise FormatError carrying the line number.
template <class Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn);

}  // namespace lifg

#include "lifg/detail/jsonl.hpp"
