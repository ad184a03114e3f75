#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lifg/corpus.hpp"
#include "lifg/tokenizer.hpp"

namespace lifg {

enum class ConceptKind { basic, meta };

/// Dense handle for a concept inside one ConceptTable.
using NodeId = std::uint32_t;

/// Declared concepts, basic and meta, with ids unique across both kinds.
class ConceptTable {
 public:
  /// Throws DataError if `id` is empty or already declared.
  NodeId add(std::string id, ConceptKind kind);

  std::optional<NodeId> find(std::string_view id) const;
  /// Throws DataError naming the unknown id.
  NodeId at(std::string_view id) const;

  const std::string& id(NodeId n) const { return ids_[n]; }
  ConceptKind kind(NodeId n) const { return kinds_[n]; }
  std::size_t size() const noexcept { return ids_.size(); }

  /// Basic concepts in ascending id order.
  std::vector<NodeId> basic_nodes() const;

  static ConceptTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> ids_;
  std::vector<ConceptKind> kinds_;
  std::unordered_map<std::string, NodeId> index_;
};

struct Edge {
  std::string parent;
  std::string child;

  auto operator<=>(const Edge&) const = default;
};

/// Per-language edge sets as read from a hierarchy file.
using LanguageEdges = std::map<std::string, std::vector<Edge>>;

LanguageEdges load_hierarchy_edges(const std::filesystem::path& path);
void write_hierarchy_edges(const std::filesystem::path& path, const LanguageEdges& edges);

/// Returns one directed cycle (as a node id sequence, first node not repeated)
/// or nullopt when the edge set is acyclic. Unknown ids raise DataError.
std::optional<std::vector<std::string>> validate_dag(const ConceptTable& concepts,
                                                     std::span<const Edge> edges);

/// Immutable is-a DAG over a ConceptTable. Parents are always meta concepts;
/// basic concepts never have children.
class Hierarchy {
 public:
  /// Deduplicates edges; throws DataError on self-loops, cycles, unknown ids
  /// or basic-kind parents.
  Hierarchy(ConceptTable concepts, std::span<const Edge> edges);

  /// Flat ontology: every concept a root.
  explicit Hierarchy(ConceptTable concepts) : Hierarchy(std::move(concepts), {}) {}

  const ConceptTable& concepts() const noexcept { return concepts_; }
  std::size_t size() const noexcept { return concepts_.size(); }

  std::span<const NodeId> parents(NodeId n) const { return parents_[n]; }
  std::span<const NodeId> children(NodeId n) const { return children_[n]; }

  /// Nodes ordered so that every parent precedes all of its children.
  std::span<const NodeId> topological_order() const { return topo_; }

  std::vector<Edge> edges() const;

 private:
  ConceptTable concepts_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> topo_;
};

/// Union of per-language edge sets ("an edge exists in at least one language").
Hierarchy merge_hierarchies(ConceptTable concepts, const LanguageEdges& per_language_edges);

/// Nodes reachable from `node` through 1..depth child-to-parent edges, in
/// ascending NodeId order. depth 0 gives the empty set.
std::vector<NodeId> ancestors(const Hierarchy& h, NodeId node, unsigned depth);
std::set<std::string> ancestors(const Hierarchy& h, std::string_view concept_id, unsigned depth);

/// Same, paired with the edge distance of each ancestor (shortest path).
std::vector<std::pair<NodeId, unsigned>> ancestors_with_distance(const Hierarchy& h, NodeId node,
                                                                 unsigned depth);

/// Count table standing in for a missing support text s(c,l).
struct TermCountTable {
  std::map<std::string, std::uint64_t> terms;
  std::vector<std::string> provenance;
  bool is_virtual = true;

  std::uint64_t total() const;
  friend bool operator==(const TermCountTable&, const TermCountTable&) = default;
};

/// s(c,l) for every basic concept and language: real articles plus, where
/// constructed, a virtual count table. Both count as support.
class SupportIndex {
 public:
  /// Throws DataError if an article names an undeclared or meta concept.
  SupportIndex(const ConceptTable& concepts, std::vector<SupportArticle> articles);

  std::size_t node_count() const noexcept { return node_count_; }
  const std::vector<NodeId>& basic_nodes() const noexcept { return basic_; }
  /// Languages that have at least one real article.
  std::vector<std::string> languages() const;

  std::span<const SupportArticle> articles(NodeId n, std::string_view language) const;
  const TermCountTable* virtual_document(NodeId n, std::string_view language) const;
  bool has_support(NodeId n, std::string_view language) const;
  bool has_real_support(NodeId n, std::string_view language) const;

  void set_virtual_document(NodeId n, const std::string& language, TermCountTable table);
  /// Drops real and virtual support of `n` in `language`.
  void remove_support(NodeId n, std::string_view language);
  /// Drops all support of `n` in every language.
  void remove_concept(NodeId n);

 private:
  struct LanguageSlots {
    std::vector<std::vector<SupportArticle>> articles;
    std::vector<std::optional<TermCountTable>> virtual_docs;
  };
  LanguageSlots& slots(const std::string& language);
  const LanguageSlots* find_slots(std::string_view language) const;

  std::size_t node_count_ = 0;
  std::vector<NodeId> basic_;
  std::map<std::string, LanguageSlots, std::less<>> by_language_;
};

/// One distinct article of S(c,l) with its multiplicity.
struct WeightedArticle {
  const SupportArticle* article;
  NodeId holder;
  std::uint64_t multiplicity;
};

/// Number of distinct directed paths from `from` to every node (index =
/// NodeId); zero for unreachable nodes, one for `from` itself. Saturates at
/// UINT64_MAX.
std::vector<std::uint64_t> path_counts(const Hierarchy& h, NodeId from);

/// S(c,l): real articles of every basic descendant of `c` (or of `c` itself),
/// each with multiplicity equal to the number of paths from `c` to its holder.
std::vector<WeightedArticle> support_multiset(const Hierarchy& h, const SupportIndex& idx,
                                              NodeId c, std::string_view language);
std::vector<WeightedArticle> support_multiset(const Hierarchy& h, const SupportIndex& idx,
                                              std::string_view concept_id,
                                              std::string_view language);

/// |S(c,l)| with multiplicity for every node, counting real articles only.
std::vector<std::uint64_t> support_sizes(const Hierarchy& h, const SupportIndex& idx,
                                         std::string_view language);

/// Basic concepts with (real or virtual) support in every language of
/// `languages`, ascending by id. An empty language set retains all.
std::vector<NodeId> retained_concepts(const ConceptTable& concepts, const SupportIndex& idx,
                                      const std::set<std::string>& languages);

}  // namespace lifg
