#include "lifg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "lifg/error.hpp"

namespace lifg {

namespace {

using nlohmann::json;

const json& require(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null())
    throw FormatError(line, std::string("missing required field \"") + field + "\"");
  return *it;
}

std::string require_string(const json& record, const char* field, std::size_t line) {
  const json& value = require(record, field, line);
  if (!value.is_string())
    throw FormatError(line, std::string("field \"") + field + "\" must be a string");
  return value.get<std::string>();
}

std::string require_nonempty(const json& record, const char* field, std::size_t line) {
  std::string value = require_string(record, field, line);
  if (value.empty()) throw FormatError(line, std::string("field \"") + field + "\" is empty");
  return value;
}

std::uint64_t require_count(const json& record, const char* field, std::size_t line) {
  const json& value = require(record, field, line);
  if (!value.is_number_unsigned() &&
      !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
    throw FormatError(line, std::string("field \"") + field + "\" must be a nonnegative integer");
  return value.get<std::uint64_t>();
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(
      std::count_if(text.begin(), text.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string_view to_string(ArticleFlag flag) {
  switch (flag) {
    case ArticleFlag::disambiguation:
      return "disambiguation";
    case ArticleFlag::redirect:
      return "redirect";
    case ArticleFlag::catalog:
      return "catalog";
  }
  return "?";
}

ArticleFlag parse_flag(std::string_view name) {
  if (name == "disambiguation") return ArticleFlag::disambiguation;
  if (name == "redirect") return ArticleFlag::redirect;
  if (name == "catalog") return ArticleFlag::catalog;
  throw DataError("unknown article flag \"" + std::string(name) + "\"");
}

SupportArticle parse_support_article(const json& record, std::size_t line) {
  SupportArticle a;
  a.concept_id = require_nonempty(record, "concept_id", line);
  a.language = require_nonempty(record, "language", line);
  a.title = require_string(record, "title", line);
  a.text = require_string(record, "text", line);
  a.links_in = require_count(record, "links_in", line);
  a.links_out = require_count(record, "links_out", line);
  const json& flags = require(record, "flags", line);
  if (!flags.is_array()) throw FormatError(line, "field \"flags\" must be an array");
  for (const json& f : flags) {
    if (!f.is_string()) throw FormatError(line, "flag entries must be strings");
    try {
      a.flags.insert(parse_flag(f.get<std::string>()));
    } catch (const DataError& e) {
      throw FormatError(line, e.what());
    }
  }
  return a;
}

LabeledDocument parse_labeled_document(const json& record, std::size_t line) {
  LabeledDocument d;
  d.doc_id = require_nonempty(record, "doc_id", line);
  d.language = require_nonempty(record, "language", line);
  d.text = require_string(record, "text", line);
  if (auto it = record.find("label"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw FormatError(line, "field \"label\" must be a string");
    d.label = it->get<std::string>();
  }
  return d;
}

json to_json(const SupportArticle& a) {
  json flags = json::array();
  for (ArticleFlag f : a.flags) flags.push_back(to_string(f));
  return {{"concept_id", a.concept_id}, {"language", a.language}, {"title", a.title},
          {"text", a.text},             {"links_in", a.links_in}, {"links_out", a.links_out},
          {"flags", flags}};
}

json to_json(const LabeledDocument& d) {
  json j = {{"doc_id", d.doc_id}, {"language", d.language}, {"text", d.text}};
  if (d.label) j["label"] = *d.label;
  return j;
}

std::vector<SupportArticle> load_support_corpus(const std::filesystem::path& path) {
  std::vector<SupportArticle> articles;
  for_each_json_line(path, [&](const json& record, std::size_t line) {
    articles.push_back(parse_support_article(record, line));
  });
  return articles;
}

std::vector<LabeledDocument> load_labeled_dataset(const std::filesystem::path& path) {
  std::vector<LabeledDocument> docs;
  std::unordered_set<std::string> seen;
  for_each_json_line(path, [&](const json& record, std::size_t line) {
    LabeledDocument d = parse_labeled_document(record, line);
    if (!seen.insert(d.doc_id).second)
      throw FormatError(line, "duplicate doc_id \"" + d.doc_id + "\"");
    docs.push_back(std::move(d));
  });
  return docs;
}

void write_support_corpus(const std::filesystem::path& path,
                          const std::vector<SupportArticle>& articles) {
  auto out = open_for_write(path);
  for (const auto& a : articles) out << to_json(a).dump() << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

void write_labeled_dataset(const std::filesystem::path& path,
                           const std::vector<LabeledDocument>& docs) {
  auto out = open_for_write(path);
  for (const auto& d : docs) out << to_json(d).dump() << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<SupportArticle> filter_articles(const std::vector<SupportArticle>& articles,
                                            const FilterConfig& cfg) {
  std::vector<SupportArticle> kept;
  for (const auto& a : articles) {
    if (utf8_length(a.text) < cfg.min_chars) continue;
    if (a.links_in < cfg.min_links_in || a.links_out < cfg.min_links_out) continue;
    if (std::any_of(a.flags.begin(), a.flags.end(),
                    [&](ArticleFlag f) { return cfg.drop_flags.contains(f); }))
      continue;
    kept.push_back(a);
  }
  return kept;
}

json to_json(const FilterConfig& cfg) {
  json flags = json::array();
  for (ArticleFlag f : cfg.drop_flags) flags.push_back(to_string(f));
  return {{"min_chars", cfg.min_chars},
          {"min_links_in", cfg.min_links_in},
          {"min_links_out", cfg.min_links_out},
          {"drop_flags", flags}};
}

FilterConfig filter_config_from_json(const json& j) {
  FilterConfig cfg;
  auto count = [&](const char* key, std::uint64_t& field) {
    if (auto it = j.find(key); it != j.end()) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
        throw InvalidArgument(std::string("filter.") + key + " must be a nonnegative integer");
      field = it->get<std::uint64_t>();
    }
  };
  count("min_chars", cfg.min_chars);
  count("min_links_in", cfg.min_links_in);
  count("min_links_out", cfg.min_links_out);
  if (auto it = j.find("drop_flags"); it != j.end()) {
    cfg.drop_flags.clear();
    for (const auto& f : *it) cfg.drop_flags.insert(parse_flag(f.get<std::string>()));
  }
  return cfg;
}

}  // namespace lifg
