#include <doctest.h>

#include "lifg/error.hpp"
#include "lifg/ontology.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace lifg;
using lifg::test::article;
using lifg::test::table;

namespace {

Hierarchy diamond() {
  std::vector<Edge> e{{"T", "A"}, {"T", "B"}, {"A", "C"}, {"B", "C"}};
  return Hierarchy(table({"C"}, {"T", "A", "B"}), e);
}

std::map<std::string, std::uint64_t> multiplicities(const std::vector<WeightedArticle>& s) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& w : s) out[w.article->title] += w.multiplicity;
  return out;
}

}  // namespace

TEST_CASE("concept table: ids are unique across kinds") {
  ConceptTable t;
  t.add("x", ConceptKind::basic);
  CHECK_THROWS_AS(t.add("x", ConceptKind::meta), DataError);
  CHECK_THROWS_AS(t.add("", ConceptKind::meta), DataError);
  CHECK_THROWS_AS(t.at("nope"), DataError);
  CHECK_FALSE(t.find("nope").has_value());
}

TEST_CASE("concept table: file round trip") {
  lifg::test::TempDir dir;
  const ConceptTable t = table({"b2", "b1"}, {"m1"});
  t.save(dir / "concepts.jsonl");
  const ConceptTable back = ConceptTable::load(dir / "concepts.jsonl");
  REQUIRE(back.size() == 3);
  CHECK(back.kind(back.at("m1")) == ConceptKind::meta);
  CHECK(back.id(back.basic_nodes()[0]) == "b1");
}

TEST_CASE("merge: union of per-language edges") {
  LanguageEdges e{{"en", {{"M", "A"}}}, {"fr", {{"M", "B"}}}};
  const Hierarchy h = merge_hierarchies(table({"A", "B"}, {"M"}), e);
  CHECK(h.edges() == std::vector<Edge>{{"M", "A"}, {"M", "B"}});
}

TEST_CASE("merge: an edge present in two languages appears once") {
  LanguageEdges e{{"en", {{"M", "A"}}}, {"fr", {{"M", "A"}}}};
  const Hierarchy h = merge_hierarchies(table({"A"}, {"M"}), e);
  CHECK(h.edges().size() == 1);
  CHECK(h.parents(h.concepts().at("A")).size() == 1);
}

TEST_CASE("merge: opposite edges across languages form a cycle") {
  LanguageEdges e{{"en", {{"M1", "M2"}}}, {"fr", {{"M2", "M1"}}}};
  CHECK_THROWS_AS(merge_hierarchies(table({}, {"M1", "M2"}), e), DataError);
}

TEST_CASE("hierarchy: invalid edges rejected") {
  const std::vector<Edge> self{{"M", "M"}};
  CHECK_THROWS_AS(Hierarchy(table({}, {"M"}), self), DataError);
  const std::vector<Edge> basic_parent{{"A", "B"}};
  CHECK_THROWS_AS(Hierarchy(table({"A", "B"}, {}), basic_parent), DataError);
  const std::vector<Edge> unknown{{"M", "Z"}};
  CHECK_THROWS_AS(Hierarchy(table({}, {"M"}), unknown), DataError);
}

TEST_CASE("hierarchy: topological order puts parents first") {
  const Hierarchy h = diamond();
  std::map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < h.topological_order().size(); ++i) pos[h.topological_order()[i]] = i;
  for (const auto& e : h.edges())
    CHECK(pos[h.concepts().at(e.parent)] < pos[h.concepts().at(e.child)]);
}

TEST_CASE("validate_dag: empty, cycle and generated hierarchy") {
  const ConceptTable t = table({}, {"A", "B"});
  CHECK_FALSE(validate_dag(t, {}).has_value());
  const std::vector<Edge> cyc{{"A", "B"}, {"B", "A"}};
  const auto cycle = validate_dag(t, cyc);
  REQUIRE(cycle.has_value());
  CHECK(std::set<std::string>(cycle->begin(), cycle->end()) == std::set<std::string>{"A", "B"});
  CHECK(cycle->size() == 2);

  Rng rng(5);
  auto dag = oracle::random_dag(rng, 1000, 300, 0.01);
  CHECK_FALSE(validate_dag(dag.concepts, dag.edges).has_value());
}

TEST_CASE("hierarchy edges file round trip") {
  lifg::test::TempDir dir;
  LanguageEdges e{{"en", {{"M", "A"}, {"M", "B"}}}, {"fr", {{"M", "A"}}}};
  write_hierarchy_edges(dir / "h.jsonl", e);
  CHECK(load_hierarchy_edges(dir / "h.jsonl") == e);
}

TEST_CASE("ancestors: direct parents, zero depth, diamond") {
  const std::vector<Edge> e{{"A", "C"}, {"B", "C"}};
  const Hierarchy h(table({"C"}, {"A", "B"}), e);
  CHECK(ancestors(h, "C", 1) == std::set<std::string>{"A", "B"});
  CHECK(ancestors(h, "C", 0).empty());
  CHECK(ancestors(diamond(), "C", 2) == std::set<std::string>{"A", "B", "T"});
  CHECK(ancestors(diamond(), "C", 1) == std::set<std::string>{"A", "B"});
  CHECK_THROWS_AS(ancestors(h, "Q", 1), DataError);
}

TEST_CASE("ancestors: distance is the shortest path") {
  const std::vector<Edge> e{{"T", "A"}, {"A", "C"}, {"T", "C"}};
  const Hierarchy h(table({"C"}, {"T", "A"}), e);
  const auto d = ancestors_with_distance(h, h.concepts().at("C"), 5);
  for (const auto& [n, dist] : d) CHECK(dist == 1);
}

TEST_CASE("ancestors: monotone in depth and matches layered oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    auto dag = oracle::random_dag(rng, 30, 15, 0.15);
    const Hierarchy h(dag.concepts, dag.edges);
    for (NodeId c = 0; c < h.size(); ++c) {
      std::vector<NodeId> prev;
      for (unsigned i = 0; i <= 6; ++i) {
        const auto a = ancestors(h, c, i);
        const auto o = oracle::ancestors_by_layers(h, c, i);
        CHECK(std::vector<NodeId>(o.begin(), o.end()) == a);
        CHECK(std::includes(a.begin(), a.end(), prev.begin(), prev.end()));
        prev = a;
      }
    }
  }
}

TEST_CASE("support multiset: disjoint union, diamond, empty basic") {
  {
    const std::vector<Edge> e{{"M", "c1"}, {"M", "c2"}};
    const Hierarchy h(table({"c1", "c2"}, {"M"}), e);
    auto a1 = article("c1", "en", "x");
    a1.title = "d1";
    auto a2 = article("c2", "en", "y");
    a2.title = "d2";
    const SupportIndex idx(h.concepts(), {a1, a2});
    CHECK(multiplicities(support_multiset(h, idx, "M", "en")) ==
          std::map<std::string, std::uint64_t>{{"d1", 1}, {"d2", 1}});
  }
  {
    const std::vector<Edge> e{{"M", "A"}, {"M", "B"}, {"A", "c"}, {"B", "c"}};
    const Hierarchy h(table({"c"}, {"M", "A", "B"}), e);
    auto d = article("c", "en", "x");
    d.title = "d";
    const SupportIndex idx(h.concepts(), {d});
    CHECK(multiplicities(support_multiset(h, idx, "M", "en")) ==
          std::map<std::string, std::uint64_t>{{"d", 2}});
    CHECK(support_sizes(h, idx, "en")[h.concepts().at("M")] == 2);
    CHECK(support_multiset(h, idx, "c", "fr").empty());
  }
}

TEST_CASE("support multiset: multiplicities equal path counts on random DAGs") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto dag = oracle::random_dag(rng, 25, 12, 0.25);
    const Hierarchy h(dag.concepts, dag.edges);
    std::vector<SupportArticle> arts;
    for (NodeId b : h.concepts().basic_nodes())
      if (rng.bernoulli(0.7)) {
        auto a = article(h.concepts().id(b), "en", "t");
        a.title = h.concepts().id(b);
        arts.push_back(a);
      }
    const SupportIndex idx(h.concepts(), arts);
    const auto sizes = support_sizes(h, idx, "en");
    for (NodeId c = 0; c < h.size(); ++c) {
      const auto pc = path_counts(h, c);
      for (NodeId x = 0; x < h.size(); ++x) CHECK(pc[x] == oracle::enumerate_paths(h, c, x));
      std::uint64_t total = 0;
      for (const auto& w : support_multiset(h, idx, c, "en")) {
        CHECK(w.multiplicity == oracle::enumerate_paths(h, c, w.holder));
        CHECK(w.multiplicity > 0);
        total += w.multiplicity;
      }
      CHECK(total == sizes[c]);
      CHECK(total == oracle::support_size_by_paths(h, idx, c, "en"));
    }
  }
}

TEST_CASE("path counts saturate instead of overflowing") {
  // A ladder of 70 diamonds doubles the path count at every rung.
  ConceptTable t;
  std::vector<Edge> e;
  t.add("r0", ConceptKind::meta);
  for (int i = 0; i < 70; ++i) {
    const std::string r = "r" + std::to_string(i), a = "a" + std::to_string(i),
                      b = "b" + std::to_string(i), n = "r" + std::to_string(i + 1);
    t.add(a, ConceptKind::meta);
    t.add(b, ConceptKind::meta);
    t.add(n, ConceptKind::meta);
    e.insert(e.end(), {{r, a}, {r, b}, {a, n}, {b, n}});
  }
  const Hierarchy h(t, e);
  const auto pc = path_counts(h, h.concepts().at("r0"));
  CHECK(pc[h.concepts().at("r10")] == 1024);
  CHECK(pc[h.concepts().at("r70")] == UINT64_MAX);
}

TEST_CASE("support index: article validation and mutation") {
  const ConceptTable t = table({"b"}, {"m"});
  CHECK_THROWS_AS(SupportIndex(t, {article("m", "en", "x")}), DataError);
  CHECK_THROWS_AS(SupportIndex(t, {article("z", "en", "x")}), DataError);

  SupportIndex idx(t, {article("b", "en", "x"), article("b", "fr", "y")});
  const NodeId b = t.at("b");
  CHECK(idx.has_real_support(b, "en"));
  CHECK_FALSE(idx.has_support(b, "de"));
  TermCountTable v;
  v.terms = {{"q", 2}};
  idx.set_virtual_document(b, "de", v);
  CHECK(idx.has_support(b, "de"));
  CHECK_FALSE(idx.has_real_support(b, "de"));
  idx.remove_support(b, "en");
  CHECK_FALSE(idx.has_support(b, "en"));
  idx.remove_concept(b);
  CHECK_FALSE(idx.has_support(b, "fr"));
  CHECK_FALSE(idx.has_support(b, "de"));
}

TEST_CASE("retained concepts") {
  const ConceptTable t = table({"c1", "c2", "c3"}, {});
  const SupportIndex idx(t, {article("c1", "en", "x"), article("c1", "fr", "x"),
                             article("c2", "en", "x"), article("c3", "en", "x"),
                             article("c3", "fr", "x")});
  CHECK(retained_concepts(t, idx, {}).size() == 3);
  const auto r = retained_concepts(t, idx, {"en", "fr"});
  REQUIRE(r.size() == 2);
  CHECK(t.id(r[0]) == "c1");
  CHECK(t.id(r[1]) == "c3");

  const SupportIndex only_en(t, {article("c1", "en", "x")});
  CHECK(retained_concepts(t, only_en, {"en", "fr"}).empty());
}
