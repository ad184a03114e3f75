#include <doctest.h>

#include <cmath>

#include "lifg/error.hpp"
#include "lifg/interpreter.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace lifg;

namespace {

ConceptDocument cdoc(std::string id, std::string_view text) {
  ConceptDocument d{std::move(id), {}};
  accumulate_counts(d.counts, tokenize(text, "en"));
  return d;
}

SemanticInterpreter fruit() {
  return SemanticInterpreter::build(
      "en", {cdoc("c1", "apple apple banana"), cdoc("c2", "banana cherry")}, 10);
}

SemanticVector vec(std::vector<std::pair<std::string, double>> e) { return {std::move(e)}; }

}  // namespace

TEST_CASE("build: hand TF.IDF example") {
  const auto si = fruit();
  CHECK(si.doc_count() == 2);
  CHECK(si.df("apple") == 1);
  CHECK(si.df("banana") == 2);
  CHECK(si.df("cherry") == 1);
  CHECK(si.postings("banana").empty());
  REQUIRE(si.postings("apple").size() == 1);
  CHECK(si.postings("apple")[0].weight == doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));
  CHECK(si.concept_universe()[si.postings("apple")[0].concept_index] == "c1");
}

TEST_CASE("build: single concept has no postings") {
  const auto si = SemanticInterpreter::build("en", {cdoc("only", "a b c a")}, 5);
  CHECK(si.indexed_terms() == 0);
  CHECK(si.vocabulary_size() == 3);
}

TEST_CASE("build: k_term prunes to the strongest concepts") {
  const auto si = SemanticInterpreter::build(
      "en", {cdoc("c1", "w"), cdoc("c2", "w w w"), cdoc("c3", "w w"), cdoc("c4", "z")}, 1);
  REQUIRE(si.postings("w").size() == 1);
  CHECK(si.concept_universe()[si.postings("w")[0].concept_index] == "c2");
}

TEST_CASE("build: postings sorted by weight then id") {
  const auto si = SemanticInterpreter::build(
      "en", {cdoc("b", "w w"), cdoc("a", "w w"), cdoc("c", "w x"), cdoc("d", "y")}, 10);
  const auto p = si.postings("w");
  REQUIRE(p.size() == 3);
  CHECK(si.concept_universe()[p[0].concept_index] == "a");
  CHECK(si.concept_universe()[p[1].concept_index] == "b");
  CHECK(si.concept_universe()[p[2].concept_index] == "c");
}

TEST_CASE("build: argument errors") {
  CHECK_THROWS_AS(SemanticInterpreter::build("en", {cdoc("c", "a")}, 0), InvalidArgument);
  CHECK_THROWS_AS(SemanticInterpreter::build("en", {cdoc("c", "a"), cdoc("c", "b")}, 3), DataError);
}

TEST_CASE("interpret: hand examples") {
  const auto si = fruit();
  const double ln2 = std::log(2.0);
  auto v = interpret(si, tokenize("apple", "en"));
  REQUIRE(v.entries.size() == 1);
  CHECK(v.weight("c1") == doctest::Approx(2 * ln2).epsilon(1e-15));

  CHECK(interpret(si, tokenize("zzz", "en")).empty());
  CHECK(interpret(si, TokenStream{}).empty());

  v = interpret(si, tokenize("apple cherry", "en"));
  CHECK(v.weight("c1") == doctest::Approx(ln2).epsilon(1e-15));
  CHECK(v.weight("c2") == doctest::Approx(ln2 / 2).epsilon(1e-15));

  // Unknown words still count in the denominator.
  v = interpret(si, tokenize("apple zzz", "en"));
  CHECK(v.weight("c1") == doctest::Approx(ln2).epsilon(1e-15));
}

TEST_CASE("interpret: matches the dense oracle on random corpora") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12), v = 1 + rng.uniform_index(40);
    std::vector<std::pair<std::string, std::vector<std::string>>> raw;
    std::vector<ConceptDocument> docs;
    for (std::size_t c = 0; c < n; ++c) {
      raw.push_back({"k" + std::to_string(c), {}});
      const std::size_t len = 1 + rng.uniform_index(30);
      for (std::size_t i = 0; i < len; ++i) raw.back().second.push_back("t" + std::to_string(rng.uniform_index(v)));
      ConceptDocument d{raw.back().first, {}};
      for (const auto& t : raw.back().second) ++d.counts[t];
      docs.push_back(std::move(d));
    }
    const auto si = SemanticInterpreter::build("xx", docs, n);
    std::vector<std::string> doc;
    for (std::size_t i = 0; i < 1 + rng.uniform_index(20); ++i)
      doc.push_back("t" + std::to_string(rng.uniform_index(v + 5)));
    const auto expected = oracle::dense_esa(raw, doc);
    const auto got = interpret(si, TokenStream{doc});
    for (const auto& [c, w] : got.entries) CHECK(w == doctest::Approx(expected.at(c)).epsilon(1e-12));
    CHECK(got.entries.size() == expected.size());
  }
}

TEST_CASE("top_k_features: ordering and ties") {
  CHECK(top_k_features(vec({{"c1", 0.9}, {"c2", 0.5}, {"c3", 0.1}}), 2, "en").concepts ==
        std::set<std::string>{"c1", "c2"});
  CHECK(top_k_features(vec({{"c1", 0.5}, {"c2", 0.5}}), 1, "en").concepts ==
        std::set<std::string>{"c1"});
  CHECK(top_k_features(vec({}), 5, "en").concepts.empty());
  CHECK(top_k_features(vec({{"c1", 0.5}}), 5, "en").source_language == "en");
}

TEST_CASE("generate_basic_features: dispatch by language") {
  InterpreterSet set;
  set.emplace("en", fruit());
  const Tokenizer tk;
  LabeledDocument d{"d", "en", "I like apple pie", std::nullopt};
  const auto f = generate_basic_features(set, d, 5, tk);
  CHECK(f.concepts == std::set<std::string>{"c1"});
  CHECK(f.source_language == "en");

  LabeledDocument same{"e", "en", "pie apple like I", std::nullopt};
  CHECK(generate_basic_features(set, same, 5, tk) == f);

  LabeledDocument fr{"f", "fr", "pomme", std::nullopt};
  try {
    generate_basic_features(set, fr, 5, tk);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("no interpreter for fr") != std::string::npos);
  }
}

TEST_CASE("interpreter persistence round trip") {
  lifg::test::TempDir dir;
  Rng rng(2);
  std::vector<ConceptDocument> docs;
  for (int c = 0; c < 15; ++c) {
    ConceptDocument d{"k" + std::to_string(c), {}};
    for (int i = 0; i < 40; ++i) ++d.counts["w" + std::to_string(rng.uniform_index(60))];
    docs.push_back(std::move(d));
  }
  const auto si = SemanticInterpreter::build("xx", docs, 4);
  si.save(dir / "si.lsi");
  const auto back = SemanticInterpreter::load(dir / "si.lsi");
  CHECK(back.language() == "xx");
  CHECK(back.k_term() == 4);
  CHECK(back.doc_count() == si.doc_count());
  for (int w = 0; w < 60; ++w) {
    const std::string t = "w" + std::to_string(w);
    CHECK(back.df(t) == si.df(t));
    CHECK(std::equal(back.postings(t).begin(), back.postings(t).end(), si.postings(t).begin(),
                     si.postings(t).end()));
  }
  TokenStream q{{"w1", "w2", "w3", "w3", "nope"}};
  CHECK(interpret(back, q) == interpret(si, q));

  lifg::test::write_text(dir / "junk.lsi", "not an interpreter");
  CHECK_THROWS_AS(SemanticInterpreter::load(dir / "junk.lsi"), DataError);
}

TEST_CASE("build_interpreter uses virtual tables for concepts without articles") {
  const ConceptTable t = lifg::test::table({"a", "b", "c"}, {});
  SupportIndex idx(t, {lifg::test::article("a", "en", "red red"), lifg::test::article("b", "en", "blue")});
  TermCountTable v;
  v.terms = {{"green", 3}};
  idx.set_virtual_document(t.at("c"), "en", v);
  const std::vector<NodeId> retained{t.at("a"), t.at("b"), t.at("c")};
  const Tokenizer tk;
  const auto si = build_interpreter(t, idx, "en", retained, 10, tk);
  REQUIRE(si.postings("green").size() == 1);
  CHECK(si.postings("green")[0].weight == doctest::Approx(3 * std::log(3.0)));

  SupportIndex missing(t, {lifg::test::article("a", "en", "red")});
  CHECK_THROWS_AS(build_interpreter(t, missing, "en", retained, 10, tk), DataError);
}
