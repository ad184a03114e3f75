#include <doctest.h>

#include "lifg/error.hpp"
#include "lifg/virtual_docs.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace lifg;
using lifg::test::article;
using lifg::test::table;

namespace {

const Tokenizer kTk;

struct World {
  Hierarchy h;
  SupportIndex idx;
};

World world(const std::vector<std::string>& basic, const std::vector<std::string>& meta,
            const std::vector<Edge>& edges, const std::vector<SupportArticle>& arts) {
  Hierarchy h(table(basic, meta), edges);
  SupportIndex idx(h.concepts(), arts);
  return {std::move(h), std::move(idx)};
}

WeightedArticle weighted(const SupportArticle& a, std::uint64_t m) { return {&a, 0, m}; }

}  // namespace

TEST_CASE("depth: parents hold 2, grandparent adds 5, p=3 gives 2") {
  std::vector<Edge> e{{"P1", "c"}, {"P2", "c"}, {"P1", "b1"}, {"P2", "b2"}, {"G", "P1"}, {"G", "P2"}};
  std::vector<SupportArticle> arts{article("b1", "en", "x"), article("b2", "en", "x")};
  std::vector<std::string> basic{"c", "b1", "b2"};
  for (int i = 3; i <= 7; ++i) {
    basic.push_back("b" + std::to_string(i));
    e.push_back({"G", basic.back()});
    arts.push_back(article(basic.back(), "en", "x"));
  }
  const auto w = world(basic, {"P1", "P2", "G"}, e, arts);
  const NodeId c = w.h.concepts().at("c");
  CHECK(find_ancestor_depth(w.h, w.idx, c, "en", 3) == 2);
  CHECK(find_ancestor_depth(w.h, w.idx, c, "en", 2) == 1);
}

TEST_CASE("depth: parents hold 10, p=3 gives 1") {
  std::vector<Edge> e{{"P", "c"}};
  std::vector<SupportArticle> arts;
  std::vector<std::string> basic{"c"};
  for (int i = 0; i < 10; ++i) {
    basic.push_back("b" + std::to_string(i));
    e.push_back({"P", basic.back()});
    arts.push_back(article(basic.back(), "en", "x"));
  }
  const auto w = world(basic, {"P"}, e, arts);
  CHECK(find_ancestor_depth(w.h, w.idx, w.h.concepts().at("c"), "en", 3) == 1);
}

TEST_CASE("depth: isolated concept cannot reach p") {
  const auto w = world({"c"}, {}, {}, {});
  try {
    find_ancestor_depth(w.h, w.idx, w.h.concepts().at("c"), "en", 1);
    FAIL("expected InsufficientSupport");
  } catch (const InsufficientSupport& e) {
    CHECK(e.max_count() == 0);
  }
}

TEST_CASE("depth: minimal on random hierarchies (scan oracle)") {
  Rng rng(23);
  std::size_t checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    auto dag = oracle::random_dag(rng, 24, 12, 0.2);
    const Hierarchy h(dag.concepts, dag.edges);
    std::vector<SupportArticle> arts;
    for (NodeId b : h.concepts().basic_nodes())
      for (std::uint64_t k = rng.uniform_index(3); k > 0; --k) arts.push_back(article(h.concepts().id(b), "en", "x"));
    const SupportIndex idx(h.concepts(), arts);
    const std::uint64_t p = 1 + rng.uniform_index(8);
    for (NodeId c : h.concepts().basic_nodes()) {
      if (idx.has_real_support(c, "en")) continue;
      const auto scan = oracle::depth_scan(h, idx, c, "en", p);
      if (!scan.depth) {
        CHECK_THROWS_AS(find_ancestor_depth(h, idx, c, "en", p), InsufficientSupport);
        continue;
      }
      const unsigned j = find_ancestor_depth(h, idx, c, "en", p);
      CHECK(j == *scan.depth);
      CHECK(scan.counts[j] >= p);
      if (j > 0) CHECK(scan.counts[j - 1] < p);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("prominent terms: hand examples") {
  const SupportArticle aab = article("x", "en", "a a b");
  std::vector<WeightedArticle> one{weighted(aab, 1)};
  CHECK(prominent_terms(one, 1, "en", kTk) == RankedTerms{{"a", 2}});

  const SupportArticle x = article("x", "en", "x");
  std::vector<WeightedArticle> twice{weighted(x, 2)};
  CHECK(prominent_terms(twice, 5, "en", kTk) == RankedTerms{{"x", 2}});

  const SupportArticle abb = article("x", "en", "a b b"), bc = article("x", "en", "b c");
  std::vector<WeightedArticle> two{weighted(abb, 1), weighted(bc, 1)};
  CHECK(prominent_terms(two, 2, "en", kTk) == RankedTerms{{"b", 3}, {"a", 1}});
  CHECK(prominent_terms(two, 10, "en", kTk).size() == 3);
}

TEST_CASE("construct: single parent copies its top terms") {
  const auto w = world({"c", "s"}, {"P"}, {{"P", "c"}, {"P", "s"}}, {article("s", "en", "a a b")});
  const auto t = construct_virtual_document(w.h, w.idx, w.h.concepts().at("c"), "en", {1, 2}, kTk);
  CHECK(t.terms == std::map<std::string, std::uint64_t>{{"a", 2}, {"b", 1}});
  CHECK(t.provenance == std::vector<std::string>{"P"});
  CHECK(t.is_virtual);
}

TEST_CASE("construct: two parents merge their top-1 terms") {
  const auto w = world({"c", "s1", "s2"}, {"P1", "P2"},
                       {{"P1", "c"}, {"P2", "c"}, {"P1", "s1"}, {"P2", "s2"}},
                       {article("s1", "en", "a a"), article("s2", "en", "a b")});
  const auto t = construct_virtual_document(w.h, w.idx, w.h.concepts().at("c"), "en", {2, 1}, kTk);
  CHECK(t.terms == std::map<std::string, std::uint64_t>{{"a", 3}});
  CHECK(t.provenance == std::vector<std::string>{"P1", "P2"});
}

TEST_CASE("construct: concept with support is a precondition violation") {
  const auto w = world({"c"}, {"P"}, {{"P", "c"}}, {article("c", "en", "a")});
  CHECK_THROWS_AS(construct_virtual_document(w.h, w.idx, w.h.concepts().at("c"), "en", {1, 1}, kTk),
                  InvalidArgument);
}

TEST_CASE("add_virtual_documents: installs tables, reports failures, ignores order") {
  const auto w0 = world({"c1", "c2", "s", "lone"}, {"P"},
                        {{"P", "c1"}, {"P", "c2"}, {"P", "s"}},
                        {article("s", "en", "k k m"), article("c1", "fr", "z"),
                         article("c2", "fr", "z"), article("s", "fr", "z"),
                         article("lone", "fr", "z")});
  const ConceptTable& t = w0.h.concepts();
  const std::vector<NodeId> targets{t.at("c1"), t.at("c2"), t.at("s"), t.at("lone")};

  SupportIndex idx = w0.idx;
  const auto out = add_virtual_documents(w0.h, idx, "en", targets, {1, 5}, kTk, 1);
  REQUIRE(out.constructed.size() == 2);
  CHECK(out.constructed[0].concept_id == "c1");
  CHECK(out.constructed[1].table == out.constructed[0].table);
  REQUIRE(out.failed.size() == 1);
  CHECK(out.failed[0].first == "lone");
  CHECK(idx.has_support(t.at("c1"), "en"));
  CHECK_FALSE(idx.has_support(t.at("lone"), "en"));

  // Reversed targets and more workers give the same tables.
  SupportIndex idx2 = w0.idx;
  std::vector<NodeId> rev(targets.rbegin(), targets.rend());
  const auto out2 = add_virtual_documents(w0.h, idx2, "en", rev, {1, 5}, kTk, 3);
  REQUIRE(out2.constructed.size() == 2);
  CHECK(*idx2.virtual_document(t.at("c2"), "en") == *idx.virtual_document(t.at("c2"), "en"));

  lifg::test::TempDir dir;
  write_virtual_documents(dir / "v.jsonl", out.constructed);
  const auto back = load_virtual_documents(dir / "v.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].concept_id == "c1");
  CHECK(back[0].language == "en");
  CHECK(back[0].table == out.constructed[0].table);
}

TEST_CASE("virtual tables are built from real articles only") {
  // c2's table must not feed into c1's even though both hang below P.
  const auto w0 = world({"c1", "c2", "s"}, {"P"}, {{"P", "c1"}, {"P", "c2"}, {"P", "s"}},
                        {article("s", "en", "q")});
  const ConceptTable& t = w0.h.concepts();
  SupportIndex idx = w0.idx;
  const std::vector<NodeId> first{t.at("c2")};
  add_virtual_documents(w0.h, idx, "en", first, {1, 5}, kTk);
  const std::vector<NodeId> second{t.at("c1")};
  add_virtual_documents(w0.h, idx, "en", second, {1, 5}, kTk);
  CHECK(idx.virtual_document(t.at("c1"), "en")->terms == std::map<std::string, std::uint64_t>{{"q", 1}});
}
