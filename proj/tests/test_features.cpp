#include <doctest.h>

#include <cmath>

#include "lifg/error.hpp"
#include "lifg/features.hpp"
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

ConceptFeatureSet basic(std::set<std::string> c) { return {std::move(c), "en"}; }

BinaryFeatureVector bv(std::vector<std::uint32_t> a) { return {std::move(a)}; }

std::vector<bool> column(std::span<const BinaryFeatureVector> v, std::uint32_t f) {
  std::vector<bool> out;
  for (const auto& x : v) out.push_back(x.contains(f));
  return out;
}

}  // namespace

TEST_CASE("enrich: m=0 is the identity") {
  CHECK(enrich_with_meta(diamond(), basic({"C"}), 0) == std::set<std::string>{"C"});
}

TEST_CASE("enrich: diamond up to m=3") {
  CHECK(enrich_with_meta(diamond(), basic({"C"}), 3) == std::set<std::string>{"A", "B", "C", "T"});
  CHECK(enrich_with_meta(diamond(), basic({"C"}), 1) == std::set<std::string>{"A", "B", "C"});
}

TEST_CASE("filter: meta features need two basic descendants") {
  const std::vector<Edge> e{{"M", "x"}, {"M", "y"}, {"N", "x"}};
  const Hierarchy h(table({"x", "y"}, {"M", "N"}), e);
  const auto b = basic({"x", "y"});
  const auto enriched = enrich_with_meta(h, b, 2);
  CHECK(enriched == std::set<std::string>{"M", "N", "x", "y"});
  CHECK(filter_meta_features(h, enriched, b, 2) == std::set<std::string>{"M", "x", "y"});
}

TEST_CASE("filter: basic features always survive") {
  const Hierarchy h = diamond();
  const auto b = basic({"C"});
  CHECK(filter_meta_features(h, enrich_with_meta(h, b, 3), b, 3) == std::set<std::string>{"C"});
}

TEST_CASE("feature space: first-appearance order and union") {
  const std::vector<std::set<std::string>> one{{"c1", "c2"}};
  auto fs = assemble_feature_space(one, {});
  CHECK(fs.space.ids() == std::vector<std::string>{"c1", "c2"});
  CHECK(fs.vectors[0] == bv({0, 1}));

  const std::vector<std::set<std::string>> disjoint{{"z", "y"}, {"b", "a", "c"}};
  fs = assemble_feature_space(disjoint, {});
  CHECK(fs.space.size() == 5);
  CHECK(fs.space.ids() == std::vector<std::string>{"y", "z", "a", "b", "c"});
  CHECK(fs.vectors[1] == bv({2, 3, 4}));

  const std::vector<std::set<std::string>> twice{{"c1", "c2"}, {"c1", "c2"}};
  CHECK(assemble_feature_space(twice, {}).space == assemble_feature_space(one, {}).space);
}

TEST_CASE("feature space: project, duplicates, persistence") {
  FeatureSpace s({"a", "b", "c"}, {});
  CHECK(s.project({"c", "a", "zz"}) == bv({0, 2}));
  CHECK_THROWS_AS(FeatureSpace({"a", "a"}, {}), DataError);

  lifg::test::TempDir dir;
  FeatureOptions o;
  o.k_doc = 7;
  o.meta_features = false;
  FeatureSpace t({"q", "p"}, o);
  t.save(dir / "fs.json");
  const auto back = FeatureSpace::load(dir / "fs.json");
  CHECK(back == t);
  CHECK(back.options().k_doc == 7);
  CHECK_FALSE(back.options().meta_features);
  CHECK(*back.find("p") == 1);
}

TEST_CASE("build_feature_space: end to end over an interpreter") {
  // Concepts x, y share meta parent M; z hangs alone under N.
  const std::vector<Edge> e{{"M", "x"}, {"M", "y"}, {"N", "z"}};
  const Hierarchy h(table({"x", "y", "z"}, {"M", "N"}), e);
  const SupportIndex idx(h.concepts(), {article("x", "en", "alpha beta"), article("y", "en", "gamma beta"),
                                        article("z", "en", "delta")});
  const Tokenizer tk;
  const std::vector<NodeId> all{0, 1, 2};
  InterpreterSet si;
  si.emplace("en", build_interpreter(h.concepts(), idx, "en", all, 10, tk));

  std::vector<LabeledDocument> docs{{"d1", "en", "alpha gamma", "p"}, {"d2", "en", "delta", "q"}};
  FeatureOptions opt;
  opt.k_doc = 2;
  const auto fs = build_feature_space(docs, si, h, opt, tk);
  CHECK(fs.space.ids() == std::vector<std::string>{"M", "x", "y", "z"});
  CHECK(fs.vectors[0] == bv({0, 1, 2}));
  CHECK(fs.vectors[1] == bv({3}));

  opt.meta_features = false;
  CHECK(build_feature_space(docs, si, h, opt, tk).space.ids() == std::vector<std::string>{"x", "y", "z"});

  std::vector<LabeledDocument> test{{"t", "en", "alpha delta omega", std::nullopt}};
  CHECK(map_documents(test, si, h, fs.space, tk)[0] == bv({1, 3}));

  const auto fs4 = build_feature_space(docs, si, h, FeatureOptions{2, 3, true, 100}, tk, 4);
  CHECK(fs4.space == fs.space);
  CHECK(fs4.vectors == fs.vectors);
}

TEST_CASE("information gain: hand examples") {
  const std::vector<std::size_t> y{0, 0, 1, 1};
  const std::vector<BinaryFeatureVector> perfect{bv({0}), bv({0}), bv({}), bv({})};
  CHECK(information_gain(perfect, y, 0) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<BinaryFeatureVector> all{bv({0}), bv({0}), bv({0}), bv({0})};
  CHECK(information_gain(all, y, 0) == doctest::Approx(0.0));
  const std::vector<BinaryFeatureVector> half{bv({0}), bv({}), bv({0}), bv({})};
  CHECK(std::abs(information_gain(half, y, 0)) < 1e-15);
}

TEST_CASE("information gain: matches the mutual information oracle") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30), k = 1 + rng.uniform_index(4), dim = 3;
    std::vector<BinaryFeatureVector> v(n);
    std::vector<std::size_t> y(n);
    std::vector<int> yi(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::uint32_t f = 0; f < dim; ++f)
        if (rng.bernoulli(0.4)) v[i].active.push_back(f);
      y[i] = rng.uniform_index(k);
      yi[i] = static_cast<int>(y[i]);
    }
    const auto all = information_gain_all(v, y, dim);
    for (std::uint32_t f = 0; f < dim; ++f) {
      const double want = oracle::mutual_information(column(v, f), yi);
      CHECK(std::abs(information_gain(v, y, f) - want) <= 1e-12);
      CHECK(std::abs(all[f] - want) <= 1e-12);
      CHECK(all[f] >= 0.0);
    }
  }
}

TEST_CASE("select: identity when n covers the space, top IG otherwise") {
  FeatureSpace s({"half", "perfect", "all"}, {});
  const std::vector<std::size_t> y{0, 0, 1, 1};
  const std::vector<BinaryFeatureVector> v{bv({0, 1, 2}), bv({1, 2}), bv({0, 2}), bv({2})};
  const auto same = select_features(s, v, y, 3);
  CHECK(same.space == s);
  CHECK(same.vectors == v);

  const auto one = select_features(s, v, y, 1);
  CHECK(one.space.ids() == std::vector<std::string>{"perfect"});
  CHECK(one.vectors == std::vector<BinaryFeatureVector>{bv({0}), bv({0}), bv({}), bv({})});

  // Ties go to the smaller id, kept in space order.
  const auto two = select_features(s, v, y, 2);
  CHECK(two.space.ids() == std::vector<std::string>{"perfect", "all"});
}

TEST_CASE("vector records round trip") {
  lifg::test::TempDir dir;
  std::vector<VectorRecord> recs{{"a", bv({1, 4}), "pos", "en"}, {"b", bv({}), std::nullopt, "fr"}};
  write_vectors(dir / "v.jsonl", recs);
  const auto back = load_vectors(dir / "v.jsonl", 5);
  REQUIRE(back.size() == 2);
  CHECK(back[0].vector == recs[0].vector);
  CHECK(back[0].label == recs[0].label);
  CHECK_FALSE(back[1].label.has_value());
  CHECK(back[1].language == "fr");
  CHECK_THROWS_AS(load_vectors(dir / "v.jsonl", 3), FormatError);
}
