#include "lifg/virtual_docs.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "lifg/parallel.hpp"

namespace lifg {

namespace {

using nlohmann::json;

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max()
                                                           : a + b;
}

}  // namespace

unsigned find_ancestor_depth(const Hierarchy& h, std::span<const std::uint64_t> sizes, NodeId c,
                             std::uint64_t p) {
  if (p < 1) throw InvalidArgument("p must be at least 1");
  std::unordered_set<NodeId> seen{c};
  std::vector<NodeId> frontier{c};
  std::uint64_t total = 0;
  for (unsigned depth = 1;; ++depth) {
    std::vector<NodeId> next;
    for (NodeId n : frontier)
      for (NodeId parent : h.parents(n))
        if (seen.insert(parent).second) {
          next.push_back(parent);
          total = saturating_add(total, sizes[parent]);
        }
    if (next.empty()) throw InsufficientSupport(h.concepts().id(c), total, p);
    if (total >= p) return depth;
    frontier = std::move(next);
  }
}

unsigned find_ancestor_depth(const Hierarchy& h, const SupportIndex& idx, NodeId c,
                             const std::string& language, std::uint64_t p) {
  if (idx.has_real_support(c, language))
    throw InvalidArgument("concept \"" + h.concepts().id(c) + "\" already has support in " +
                          language);
  const auto sizes = support_sizes(h, idx, language);
  return find_ancestor_depth(h, sizes, c, p);
}

RankedTerms prominent_terms(std::span<const WeightedArticle> docs, std::size_t t,
                            const std::string& language, const Tokenizer& tokenizer) {
  if (docs.empty()) throw InvalidArgument("prominent_terms of an empty document multiset");
  if (t < 1) throw InvalidArgument("t must be at least 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& d : docs)
    for (const auto& token : tokenizer(d.article->text, language).tokens)
      counts[token] = saturating_add(counts[token], d.multiplicity);

  RankedTerms ranked(counts.begin(), counts.end());
  const std::size_t k = std::min(t, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });
  ranked.resize(k);
  return ranked;
}

VirtualDocumentBuilder::VirtualDocumentBuilder(const Hierarchy& h, const SupportIndex& idx,
                                               std::string language, VirtualDocParams params,
                                               const Tokenizer& tokenizer)
    : h_(h),
      idx_(idx),
      language_(std::move(language)),
      params_(params),
      tokenizer_(tokenizer),
      sizes_(support_sizes(h, idx, language_)) {
  if (params_.p < 1) throw InvalidArgument("p must be at least 1");
  if (params_.t < 1) throw InvalidArgument("t must be at least 1");
}

unsigned VirtualDocumentBuilder::depth(NodeId c) const {
  if (idx_.has_real_support(c, language_))
    throw InvalidArgument("concept \"" + h_.concepts().id(c) + "\" already has support in " +
                          language_);
  return find_ancestor_depth(h_, sizes_, c, params_.p);
}

const RankedTerms& VirtualDocumentBuilder::ancestor_terms(NodeId ancestor) const {
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(ancestor); it != cache_.end()) return it->second;
  }
  const auto multiset = support_multiset(h_, idx_, ancestor, language_);
  RankedTerms terms = prominent_terms(multiset, params_.t, language_, tokenizer_);
  std::lock_guard lock(cache_mutex_);
  // unordered_map references stay valid across rehashing.
  return cache_.emplace(ancestor, std::move(terms)).first->second;
}

TermCountTable VirtualDocumentBuilder::construct(NodeId c) const {
  const unsigned j = depth(c);
  TermCountTable table;
  for (NodeId a : ancestors(h_, c, j)) {
    if (sizes_[a] == 0) continue;
    for (const auto& [term, count] : ancestor_terms(a))
      table.terms[term] = saturating_add(table.terms[term], count);
    table.provenance.push_back(h_.concepts().id(a));
  }
  std::sort(table.provenance.begin(), table.provenance.end());
  if (table.terms.empty())
    throw DataError("virtual document for \"" + h_.concepts().id(c) + "\" in " + language_ +
                    " has no terms");
  return table;
}

TermCountTable construct_virtual_document(const Hierarchy& h, const SupportIndex& idx, NodeId c,
                                          const std::string& language, VirtualDocParams params,
                                          const Tokenizer& tokenizer) {
  return VirtualDocumentBuilder(h, idx, language, params, tokenizer).construct(c);
}

VirtualDocOutcome add_virtual_documents(const Hierarchy& h, SupportIndex& idx,
                                        const std::string& language,
                                        std::span<const NodeId> targets, VirtualDocParams params,
                                        const Tokenizer& tokenizer, unsigned workers) {
  std::vector<NodeId> missing;
  for (NodeId n : targets)
    if (!idx.has_real_support(n, language)) missing.push_back(n);

  std::vector<std::optional<TermCountTable>> tables(missing.size());
  std::vector<std::string> errors(missing.size());
  {
    const VirtualDocumentBuilder builder(h, idx, language, params, tokenizer);
    parallel_for(missing.size(), workers, [&](std::size_t i) {
      try {
        tables[i] = builder.construct(missing[i]);
      } catch (const DataError& e) {
        errors[i] = e.what();
      }
    });
  }

  VirtualDocOutcome outcome;
  for (std::size_t i = 0; i < missing.size(); ++i) {
    const std::string& id = h.concepts().id(missing[i]);
    if (!tables[i]) {
      outcome.failed.emplace_back(id, errors[i]);
      continue;
    }
    idx.set_virtual_document(missing[i], language, *tables[i]);
    outcome.constructed.push_back({id, language, std::move(*tables[i])});
  }
  return outcome;
}

void write_virtual_documents(const std::filesystem::path& path,
                             const std::vector<VirtualDocRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    json terms = json::object();
    for (const auto& [term, count] : r.table.terms) terms[term] = count;
    out << json{{"concept_id", r.concept_id},
                {"language", r.language},
                {"terms", terms},
                {"provenance", r.table.provenance},
                {"virtual", r.table.is_virtual}}
               .dump()
        << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<VirtualDocRecord> load_virtual_documents(const std::filesystem::path& path) {
  std::vector<VirtualDocRecord> records;
  for_each_json_line(path, [&](const json& j, std::size_t line) {
    try {
      VirtualDocRecord r;
      r.concept_id = j.at("concept_id").get<std::string>();
      r.language = j.at("language").get<std::string>();
      for (const auto& [term, count] : j.at("terms").items()) {
        const auto c = count.get<std::uint64_t>();
        if (c == 0) throw FormatError(line, "term counts must be positive");
        r.table.terms[term] = c;
      }
      r.table.provenance = j.value("provenance", std::vector<std::string>{});
      r.table.is_virtual = j.value("virtual", true);
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(line, e.what());
    }
  });
  return records;
}

}  // namespace lifg
