#include "lifg/ontology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>

#include "lifg/error.hpp"

namespace lifg {

namespace {

using nlohmann::json;

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max()
                                                           : a + b;
}

std::string kind_name(ConceptKind k) { return k == ConceptKind::basic ? "basic" : "meta"; }

std::string describe_cycle(const std::vector<std::string>& cycle) {
  std::string s;
  for (const auto& id : cycle) s += id + " -> ";
  return s + cycle.front();
}

std::vector<std::pair<NodeId, NodeId>> resolve(const ConceptTable& concepts,
                                               std::span<const Edge> edges) {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.emplace_back(concepts.at(e.parent), concepts.at(e.child));
  return out;
}

// Iterative three-color DFS; returns the first back-edge cycle found when
// scanning roots and children in ascending NodeId order.
std::optional<std::vector<NodeId>> find_cycle(std::size_t n,
                                              const std::vector<std::vector<NodeId>>& children) {
  enum : std::uint8_t { white, grey, black };
  std::vector<std::uint8_t> color(n, white);
  std::vector<std::pair<NodeId, std::size_t>> stack;
  for (NodeId root = 0; root < n; ++root) {
    if (color[root] != white) continue;
    stack.push_back({root, 0});
    color[root] = grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next == children[node].size()) {
        color[node] = black;
        stack.pop_back();
        continue;
      }
      const NodeId child = children[node][next++];
      if (color[child] == grey) {
        std::vector<NodeId> cycle;
        auto it = std::find_if(stack.begin(), stack.end(),
                               [&](const auto& frame) { return frame.first == child; });
        for (; it != stack.end(); ++it) cycle.push_back(it->first);
        return cycle;
      }
      if (color[child] == white) {
        color[child] = grey;
        stack.push_back({child, 0});
      }
    }
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------- ConceptTable

NodeId ConceptTable::add(std::string id, ConceptKind kind) {
  if (id.empty()) throw DataError("concept id must be nonempty");
  if (index_.contains(id)) throw DataError("concept \"" + id + "\" declared twice");
  const auto n = static_cast<NodeId>(ids_.size());
  index_.emplace(id, n);
  ids_.push_back(std::move(id));
  kinds_.push_back(kind);
  return n;
}

std::optional<NodeId> ConceptTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId ConceptTable::at(std::string_view id) const {
  if (auto n = find(id)) return *n;
  throw DataError("unknown concept \"" + std::string(id) + "\"");
}

std::vector<NodeId> ConceptTable::basic_nodes() const {
  std::vector<NodeId> out;
  for (NodeId n = 0; n < ids_.size(); ++n)
    if (kinds_[n] == ConceptKind::basic) out.push_back(n);
  std::sort(out.begin(), out.end(), [&](NodeId a, NodeId b) { return ids_[a] < ids_[b]; });
  return out;
}

ConceptTable ConceptTable::load(const std::filesystem::path& path) {
  ConceptTable table;
  for_each_json_line(path, [&](const json& record, std::size_t line) {
    auto id = record.find("concept_id");
    auto kind = record.find("kind");
    if (id == record.end() || !id->is_string())
      throw FormatError(line, "missing required field \"concept_id\"");
    if (kind == record.end() || !kind->is_string())
      throw FormatError(line, "missing required field \"kind\"");
    const std::string k = kind->get<std::string>();
    if (k != "basic" && k != "meta")
      throw FormatError(line, "kind must be \"basic\" or \"meta\", got \"" + k + "\"");
    try {
      table.add(id->get<std::string>(), k == "basic" ? ConceptKind::basic : ConceptKind::meta);
    } catch (const DataError& e) {
      throw FormatError(line, e.what());
    }
  });
  return table;
}

void ConceptTable::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (NodeId n = 0; n < ids_.size(); ++n)
    out << json{{"concept_id", ids_[n]}, {"kind", kind_name(kinds_[n])}}.dump() << '\n';
}

// ------------------------------------------------------------ hierarchy files

LanguageEdges load_hierarchy_edges(const std::filesystem::path& path) {
  LanguageEdges edges;
  for_each_json_line(path, [&](const json& record, std::size_t line) {
    auto field = [&](const char* key) {
      auto it = record.find(key);
      if (it == record.end() || !it->is_string() || it->get<std::string>().empty())
        throw FormatError(line, std::string("missing required field \"") + key + "\"");
      return it->get<std::string>();
    };
    Edge e{field("parent"), field("child")};
    edges[field("language")].push_back(std::move(e));
  });
  return edges;
}

void write_hierarchy_edges(const std::filesystem::path& path, const LanguageEdges& edges) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [language, list] : edges)
    for (const auto& e : list)
      out << json{{"parent", e.parent}, {"child", e.child}, {"language", language}}.dump() << '\n';
}

std::optional<std::vector<std::string>> validate_dag(const ConceptTable& concepts,
                                                     std::span<const Edge> edges) {
  std::vector<std::vector<NodeId>> children(concepts.size());
  for (auto [p, c] : resolve(concepts, edges)) children[p].push_back(c);
  for (auto& list : children) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  auto cycle = find_cycle(concepts.size(), children);
  if (!cycle) return std::nullopt;
  std::vector<std::string> ids;
  for (NodeId n : *cycle) ids.push_back(concepts.id(n));
  return ids;
}

// ------------------------------------------------------------------ Hierarchy

Hierarchy::Hierarchy(ConceptTable concepts, std::span<const Edge> edges)
    : concepts_(std::move(concepts)),
      parents_(concepts_.size()),
      children_(concepts_.size()) {
  for (auto [p, c] : resolve(concepts_, edges)) {
    if (concepts_.kind(p) != ConceptKind::meta)
      throw DataError("edge " + concepts_.id(p) + " -> " + concepts_.id(c) +
                      ": parent is a basic concept");
    if (p == c) throw DataError("self-loop on \"" + concepts_.id(p) + "\"");
    children_[p].push_back(c);
  }
  for (auto& list : children_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  if (auto cycle = find_cycle(concepts_.size(), children_)) {
    std::vector<std::string> ids;
    for (NodeId n : *cycle) ids.push_back(concepts_.id(n));
    throw DataError("hierarchy is not a DAG, cycle: " + describe_cycle(ids));
  }
  for (NodeId p = 0; p < children_.size(); ++p)
    for (NodeId c : children_[p]) parents_[c].push_back(p);

  // Kahn's algorithm, ascending NodeId among ready nodes.
  std::vector<std::size_t> indegree(size());
  for (NodeId n = 0; n < size(); ++n) indegree[n] = parents_[n].size();
  std::deque<NodeId> ready;
  for (NodeId n = 0; n < size(); ++n)
    if (indegree[n] == 0) ready.push_back(n);
  topo_.reserve(size());
  while (!ready.empty()) {
    const NodeId n = ready.front();
    ready.pop_front();
    topo_.push_back(n);
    for (NodeId c : children_[n])
      if (--indegree[c] == 0) ready.push_back(c);
  }
}

std::vector<Edge> Hierarchy::edges() const {
  std::vector<Edge> out;
  for (NodeId p = 0; p < size(); ++p)
    for (NodeId c : children_[p]) out.push_back({concepts_.id(p), concepts_.id(c)});
  std::sort(out.begin(), out.end());
  return out;
}

Hierarchy merge_hierarchies(ConceptTable concepts, const LanguageEdges& per_language_edges) {
  std::set<Edge> merged;
  for (const auto& [language, edges] : per_language_edges) {
    for (const auto& e : edges) {
      const NodeId p = concepts.at(e.parent);
      concepts.at(e.child);
      if (concepts.kind(p) != ConceptKind::meta)
        throw DataError("edge " + e.parent + " -> " + e.child + " (" + language +
                        "): parent is a basic concept");
      merged.insert(e);
    }
  }
  std::vector<Edge> edges(merged.begin(), merged.end());
  return Hierarchy(std::move(concepts), edges);
}

// ------------------------------------------------------------------ ancestors

std::vector<std::pair<NodeId, unsigned>> ancestors_with_distance(const Hierarchy& h, NodeId node,
                                                                 unsigned depth) {
  std::vector<std::pair<NodeId, unsigned>> out;
  if (depth == 0) return out;
  std::vector<NodeId> frontier{node};
  std::unordered_map<NodeId, unsigned> seen{{node, 0}};
  for (unsigned d = 1; d <= depth && !frontier.empty(); ++d) {
    std::vector<NodeId> next;
    for (NodeId n : frontier)
      for (NodeId p : h.parents(n))
        if (seen.emplace(p, d).second) {
          next.push_back(p);
          out.emplace_back(p, d);
        }
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> ancestors(const Hierarchy& h, NodeId node, unsigned depth) {
  std::vector<NodeId> out;
  for (auto [n, d] : ancestors_with_distance(h, node, depth)) out.push_back(n);
  return out;
}

std::set<std::string> ancestors(const Hierarchy& h, std::string_view concept_id, unsigned depth) {
  std::set<std::string> out;
  for (NodeId n : ancestors(h, h.concepts().at(concept_id), depth)) out.insert(h.concepts().id(n));
  return out;
}

// --------------------------------------------------------------- SupportIndex

std::uint64_t TermCountTable::total() const {
  std::uint64_t sum = 0;
  for (const auto& [term, count] : terms) sum += count;
  return sum;
}

SupportIndex::SupportIndex(const ConceptTable& concepts, std::vector<SupportArticle> articles)
    : node_count_(concepts.size()), basic_(concepts.basic_nodes()) {
  for (auto& a : articles) {
    const auto n = concepts.find(a.concept_id);
    if (!n) throw DataError("support article for undeclared concept \"" + a.concept_id + "\"");
    if (concepts.kind(*n) != ConceptKind::basic)
      throw DataError("support article for meta concept \"" + a.concept_id + "\"");
    std::string language = a.language;
    slots(language).articles[*n].push_back(std::move(a));
  }
}

SupportIndex::LanguageSlots& SupportIndex::slots(const std::string& language) {
  auto it = by_language_.find(language);
  if (it == by_language_.end()) {
    LanguageSlots s;
    s.articles.resize(node_count_);
    s.virtual_docs.resize(node_count_);
    it = by_language_.emplace(language, std::move(s)).first;
  }
  return it->second;
}

const SupportIndex::LanguageSlots* SupportIndex::find_slots(std::string_view language) const {
  auto it = by_language_.find(language);
  return it == by_language_.end() ? nullptr : &it->second;
}

std::vector<std::string> SupportIndex::languages() const {
  std::vector<std::string> out;
  for (const auto& [language, s] : by_language_)
    if (std::any_of(s.articles.begin(), s.articles.end(), [](const auto& v) { return !v.empty(); }))
      out.push_back(language);
  return out;
}

std::span<const SupportArticle> SupportIndex::articles(NodeId n, std::string_view language) const {
  const auto* s = find_slots(language);
  if (!s) return {};
  return s->articles.at(n);
}

const TermCountTable* SupportIndex::virtual_document(NodeId n, std::string_view language) const {
  const auto* s = find_slots(language);
  if (!s || !s->virtual_docs.at(n)) return nullptr;
  return &*s->virtual_docs[n];
}

bool SupportIndex::has_real_support(NodeId n, std::string_view language) const {
  return !articles(n, language).empty();
}

bool SupportIndex::has_support(NodeId n, std::string_view language) const {
  return has_real_support(n, language) || virtual_document(n, language) != nullptr;
}

void SupportIndex::set_virtual_document(NodeId n, const std::string& language,
                                        TermCountTable table) {
  if (n >= node_count_) throw InvalidArgument("node out of range");
  slots(language).virtual_docs[n] = std::move(table);
}

void SupportIndex::remove_support(NodeId n, std::string_view language) {
  auto it = by_language_.find(language);
  if (it == by_language_.end()) return;
  it->second.articles.at(n).clear();
  it->second.virtual_docs.at(n).reset();
}

void SupportIndex::remove_concept(NodeId n) {
  for (auto& [language, s] : by_language_) {
    s.articles.at(n).clear();
    s.virtual_docs.at(n).reset();
  }
}

// ---------------------------------------------------------- S(c,l) multisets

std::vector<std::uint64_t> path_counts(const Hierarchy& h, NodeId from) {
  std::vector<std::uint64_t> counts(h.size(), 0);
  // Reachable set, then relax along the global topological order.
  std::vector<char> reachable(h.size(), 0);
  std::vector<NodeId> stack{from};
  reachable[from] = 1;
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    for (NodeId c : h.children(n))
      if (!reachable[c]) {
        reachable[c] = 1;
        stack.push_back(c);
      }
  }
  counts[from] = 1;
  for (NodeId n : h.topological_order()) {
    if (!reachable[n] || counts[n] == 0) continue;
    for (NodeId c : h.children(n)) counts[c] = saturating_add(counts[c], counts[n]);
  }
  return counts;
}

std::vector<WeightedArticle> support_multiset(const Hierarchy& h, const SupportIndex& idx, NodeId c,
                                              std::string_view language) {
  std::vector<WeightedArticle> out;
  if (h.concepts().kind(c) == ConceptKind::basic) {
    for (const auto& a : idx.articles(c, language)) out.push_back({&a, c, 1});
    return out;
  }
  const auto counts = path_counts(h, c);
  for (NodeId n = 0; n < h.size(); ++n) {
    if (counts[n] == 0 || n == c || h.concepts().kind(n) != ConceptKind::basic) continue;
    for (const auto& a : idx.articles(n, language)) out.push_back({&a, n, counts[n]});
  }
  return out;
}

std::vector<WeightedArticle> support_multiset(const Hierarchy& h, const SupportIndex& idx,
                                              std::string_view concept_id,
                                              std::string_view language) {
  return support_multiset(h, idx, h.concepts().at(concept_id), language);
}

std::vector<std::uint64_t> support_sizes(const Hierarchy& h, const SupportIndex& idx,
                                         std::string_view language) {
  std::vector<std::uint64_t> sizes(h.size(), 0);
  const auto order = h.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId n = *it;
    if (h.concepts().kind(n) == ConceptKind::basic) {
      sizes[n] = idx.articles(n, language).size();
    } else {
      for (NodeId c : h.children(n)) sizes[n] = saturating_add(sizes[n], sizes[c]);
    }
  }
  return sizes;
}

std::vector<NodeId> retained_concepts(const ConceptTable& concepts, const SupportIndex& idx,
                                      const std::set<std::string>& languages) {
  std::vector<NodeId> out;
  for (NodeId n : concepts.basic_nodes())
    if (std::all_of(languages.begin(), languages.end(),
                    [&](const std::string& l) { return idx.has_support(n, l); }))
      out.push_back(n);
  return out;
}

}  // namespace lifg
