#include "lifg/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lifg/error.hpp"
#include "lifg/rng.hpp"

namespace lifg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Stream : std::uint64_t { kHierarchy = 1, kPools = 2, kSupport = 3, kLabeled = 4, kEdges = 5 };

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

std::size_t digits(std::size_t n) { return std::to_string(n == 0 ? 0 : n - 1).size(); }

std::size_t word_width(std::size_t vocab) {
  std::size_t w = 1, capacity = 26;
  while (capacity < vocab) {
    capacity *= 26;
    ++w;
  }
  return std::max<std::size_t>(w, 3);
}

std::vector<double> cumulative(const SlotDistribution& d) {
  std::vector<double> out(d.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = acc += d[i].second;
  return out;
}

std::uint32_t draw(const SlotDistribution& d, const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform_real() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return d[static_cast<std::size_t>(it - cdf.begin())].first;
}

// Sentences of twelve words, capitalized, with a full stop.
std::string render(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string w = words[i];
    if (i % 12 == 0) {
      if (i) out += ' ';
      w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    } else {
      out += ' ';
    }
    out += w;
    if (i % 12 == 11 || i + 1 == words.size()) out += '.';
  }
  return out;
}

void add_mass(std::map<std::uint32_t, double>& acc, std::uint32_t first, std::size_t count,
              double mass) {
  if (count == 0 || mass <= 0.0) return;
  for (std::size_t i = 0; i < count; ++i)
    acc[static_cast<std::uint32_t>(first + i)] += mass / static_cast<double>(count);
}

}  // namespace

// ------------------------------------------------------------------- spec

void SyntheticCorpusSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("synthetic spec: " + what);
  };
  require(n_concepts > 0 && n_meta_levels > 0 && branching > 0 && vocab_size_per_language > 0 &&
              n_languages > 0 && n_categories > 0 && docs_per_category > 0 && seed > 0,
          "n_concepts, n_meta_levels, branching, vocab_size_per_language, n_languages, "
          "n_categories, docs_per_category and seed must be positive");
  require(noise_rate >= 0.0 && noise_rate < 1.0, "noise_rate must lie in [0, 1)");
  require(n_languages <= 26, "at most 26 languages");
  require(concepts_per_category > 0 && n_categories * concepts_per_category <= n_concepts,
          "n_categories * concepts_per_category must not exceed n_concepts");
  require(concepts_per_doc > 0 && concepts_per_doc <= concepts_per_category,
          "concepts_per_doc must lie in [1, concepts_per_category]");
  require(doc_length > 0, "doc_length must be positive");
  require(support_docs_per_concept > 0, "support_docs_per_concept must be positive");
  require(support_length_min > 0 && support_length_min <= support_length_max,
          "support lengths must satisfy 0 < min <= max");
  require(signature_words > 0, "signature_words must be positive");
  const std::size_t groups = (n_concepts + branching - 1) / branching;
  require(n_concepts * signature_words + groups * group_words + background_words <=
              vocab_size_per_language,
          "vocabulary too small for signatures, groups and background");
  for (double r : {group_rate, xref_rate, background_rate, category_alignment,
                   missing_support_rate, junk_rate, edge_keep_rate, extra_meta_parent_rate})
    require(r >= 0.0 && r <= 1.0, "rates must lie in [0, 1]");
  require(group_rate + xref_rate + background_rate < 1.0,
          "group_rate + xref_rate + background_rate must be below 1");
}

SyntheticCorpusSpec SyntheticCorpusSpec::from_json(const json& j) {
  if (!j.is_object()) throw DataError("synthetic spec must be a JSON object");
  SyntheticCorpusSpec s;
  const json defaults = s.to_json();
  for (const auto& [key, value] : j.items())
    if (!defaults.contains(key)) throw DataError("synthetic spec: unknown key \"" + key + "\"");
  try {
#define LIFG_FIELD(name) s.name = j.value(#name, s.name)
    LIFG_FIELD(n_concepts);
    LIFG_FIELD(n_meta_levels);
    LIFG_FIELD(branching);
    LIFG_FIELD(vocab_size_per_language);
    LIFG_FIELD(n_languages);
    LIFG_FIELD(n_categories);
    LIFG_FIELD(docs_per_category);
    LIFG_FIELD(noise_rate);
    LIFG_FIELD(seed);
    LIFG_FIELD(test_docs_per_category);
    LIFG_FIELD(concepts_per_category);
    LIFG_FIELD(concepts_per_doc);
    LIFG_FIELD(doc_length);
    LIFG_FIELD(support_docs_per_concept);
    LIFG_FIELD(support_length_min);
    LIFG_FIELD(support_length_max);
    LIFG_FIELD(signature_words);
    LIFG_FIELD(group_words);
    LIFG_FIELD(background_words);
    LIFG_FIELD(group_rate);
    LIFG_FIELD(xref_rate);
    LIFG_FIELD(background_rate);
    LIFG_FIELD(extra_parents);
    LIFG_FIELD(extra_meta_parent_rate);
    LIFG_FIELD(category_alignment);
    LIFG_FIELD(missing_support_rate);
    LIFG_FIELD(junk_rate);
    LIFG_FIELD(edge_keep_rate);
#undef LIFG_FIELD
  } catch (const json::exception& e) {
    throw DataError(std::string("synthetic spec: ") + e.what());
  }
  return s;
}

json SyntheticCorpusSpec::to_json() const {
  return {{"n_concepts", n_concepts},
          {"n_meta_levels", n_meta_levels},
          {"branching", branching},
          {"vocab_size_per_language", vocab_size_per_language},
          {"n_languages", n_languages},
          {"n_categories", n_categories},
          {"docs_per_category", docs_per_category},
          {"noise_rate", noise_rate},
          {"seed", seed},
          {"test_docs_per_category", test_docs_per_category},
          {"concepts_per_category", concepts_per_category},
          {"concepts_per_doc", concepts_per_doc},
          {"doc_length", doc_length},
          {"support_docs_per_concept", support_docs_per_concept},
          {"support_length_min", support_length_min},
          {"support_length_max", support_length_max},
          {"signature_words", signature_words},
          {"group_words", group_words},
          {"background_words", background_words},
          {"group_rate", group_rate},
          {"xref_rate", xref_rate},
          {"background_rate", background_rate},
          {"extra_parents", extra_parents},
          {"extra_meta_parent_rate", extra_meta_parent_rate},
          {"category_alignment", category_alignment},
          {"missing_support_rate", missing_support_rate},
          {"junk_rate", junk_rate},
          {"edge_keep_rate", edge_keep_rate}};
}

// ----------------------------------------------------------------- corpus

std::string SyntheticCorpus::word(std::size_t language, std::uint32_t slot) const {
  const std::size_t width = word_width(spec.vocab_size_per_language);
  std::string w(width, 'a');
  std::uint32_t v = slot;
  for (std::size_t i = width; i-- > 0;) {
    w[i] = static_cast<char>('a' + v % 26);
    v /= 26;
  }
  return languages.at(language) + w;
}

std::optional<std::uint32_t> SyntheticCorpus::slot_of(std::size_t language,
                                                      std::string_view word) const {
  const std::string& code = languages.at(language);
  const std::size_t width = word_width(spec.vocab_size_per_language);
  if (word.size() != code.size() + width || word.substr(0, code.size()) != code) return std::nullopt;
  std::uint64_t v = 0;
  for (char ch : word.substr(code.size())) {
    if (ch < 'a' || ch > 'z') return std::nullopt;
    v = v * 26 + static_cast<std::uint64_t>(ch - 'a');
  }
  if (v >= spec.vocab_size_per_language) return std::nullopt;
  return static_cast<std::uint32_t>(v);
}

std::size_t SyntheticCorpus::language_index(std::string_view language) const {
  auto it = std::find(languages.begin(), languages.end(), language);
  if (it == languages.end()) throw InvalidArgument("unknown language " + std::string(language));
  return static_cast<std::size_t>(it - languages.begin());
}

ExperimentData SyntheticCorpus::experiment_data() const {
  ExperimentData data{concepts, edges, articles, {}, {}};
  for (const auto& [lang, docs] : train) data.train_pool.insert(data.train_pool.end(), docs.begin(), docs.end());
  for (const auto& [lang, docs] : test) data.test_pool.insert(data.test_pool.end(), docs.begin(), docs.end());
  return data;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  SyntheticCorpus out;
  out.spec = spec;
  const std::size_t n = spec.n_concepts;
  for (std::size_t l = 0; l < spec.n_languages; ++l)
    out.languages.push_back(std::string("l") + static_cast<char>('a' + l));
  for (std::size_t k = 0; k < spec.n_categories; ++k)
    out.categories.push_back("cat" + padded(k, std::max<std::size_t>(2, digits(spec.n_categories))));

  // Concepts and hierarchy.
  for (std::size_t i = 0; i < n; ++i) {
    out.basic_ids.push_back("c" + padded(i, std::max<std::size_t>(3, digits(n))));
    out.concepts.add(out.basic_ids.back(), ConceptKind::basic);
  }
  std::vector<std::vector<std::string>> levels;  // levels[L-1] = meta ids of level L
  std::size_t below = n;
  for (std::size_t level = 1; level <= spec.n_meta_levels; ++level) {
    const std::size_t count = (below + spec.branching - 1) / spec.branching;
    std::vector<std::string> ids;
    for (std::size_t g = 0; g < count; ++g) {
      ids.push_back("m" + std::to_string(level) + "_" + padded(g, std::max<std::size_t>(3, digits(count))));
      out.concepts.add(ids.back(), ConceptKind::meta);
    }
    levels.push_back(std::move(ids));
    below = count;
  }
  const std::size_t groups = levels[0].size();

  Rng hrng(mix_seed(spec.seed, kHierarchy));
  std::vector<Edge> all_edges;
  std::vector<std::vector<std::size_t>> group_parents(n);  // level-1 parents per basic concept
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t primary = i / spec.branching;
    group_parents[i].push_back(primary);
    const std::size_t extra = std::min(spec.extra_parents, groups - 1);
    while (group_parents[i].size() < extra + 1) {
      const std::size_t g = hrng.uniform_index(groups);
      if (std::find(group_parents[i].begin(), group_parents[i].end(), g) == group_parents[i].end())
        group_parents[i].push_back(g);
    }
    for (std::size_t g : group_parents[i]) all_edges.push_back({levels[0][g], out.basic_ids[i]});
  }
  for (std::size_t level = 1; level < levels.size(); ++level) {
    const auto& lower = levels[level - 1];
    const auto& upper = levels[level];
    for (std::size_t j = 0; j < lower.size(); ++j) {
      const std::size_t primary = j / spec.branching;
      all_edges.push_back({upper[primary], lower[j]});
      if (upper.size() > 1 && hrng.bernoulli(spec.extra_meta_parent_rate)) {
        std::size_t other = hrng.uniform_index(upper.size() - 1);
        if (other >= primary) ++other;
        all_edges.push_back({upper[other], lower[j]});
      }
    }
  }
  std::sort(all_edges.begin(), all_edges.end());
  Rng erng(mix_seed(spec.seed, kEdges));
  for (std::size_t l = 0; l < spec.n_languages; ++l) {
    auto& e = out.edges[out.languages[l]];
    for (const auto& edge : all_edges)
      if (l == 0 || erng.bernoulli(spec.edge_keep_rate)) e.push_back(edge);
  }

  // Word distributions over shared slots.
  const auto sig_base = [&](std::size_t c) { return static_cast<std::uint32_t>(c * spec.signature_words); };
  const auto group_base = [&](std::size_t g) {
    return static_cast<std::uint32_t>(n * spec.signature_words + g * spec.group_words);
  };
  const auto background_base =
      static_cast<std::uint32_t>(n * spec.signature_words + groups * spec.group_words);
  for (std::size_t c = 0; c < n; ++c) {
    std::map<std::uint32_t, double> acc;
    double own = 1.0 - spec.group_rate - spec.xref_rate - spec.background_rate;
    std::vector<std::size_t> siblings;
    const std::size_t primary = c / spec.branching;
    for (std::size_t s = primary * spec.branching; s < std::min(n, (primary + 1) * spec.branching); ++s)
      if (s != c) siblings.push_back(s);
    if (siblings.empty()) own += spec.xref_rate;
    for (std::size_t s : siblings)
      add_mass(acc, sig_base(s), spec.signature_words,
               spec.xref_rate / static_cast<double>(siblings.size()));
    if (spec.group_words == 0) own += spec.group_rate;
    else
      for (std::size_t g : group_parents[c])
        add_mass(acc, group_base(g), spec.group_words,
                 spec.group_rate / static_cast<double>(group_parents[c].size()));
    if (spec.background_words == 0) own += spec.background_rate;
    else add_mass(acc, background_base, spec.background_words, spec.background_rate);
    add_mass(acc, sig_base(c), spec.signature_words, own);
    out.word_distribution.emplace_back(acc.begin(), acc.end());
  }
  std::vector<std::vector<double>> cdfs;
  for (const auto& d : out.word_distribution) cdfs.push_back(cumulative(d));

  // Category pools.
  Rng prng(mix_seed(spec.seed, kPools));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const std::size_t pooled = spec.n_categories * spec.concepts_per_category;
  for (std::size_t i = 0; i < pooled; ++i)
    if (!prng.bernoulli(spec.category_alignment)) std::swap(perm[i], perm[prng.uniform_index(n)]);
  for (std::size_t k = 0; k < spec.n_categories; ++k) {
    std::vector<std::size_t> pool(perm.begin() + static_cast<std::ptrdiff_t>(k * spec.concepts_per_category),
                                  perm.begin() + static_cast<std::ptrdiff_t>((k + 1) * spec.concepts_per_category));
    std::sort(pool.begin(), pool.end());
    out.category_pools.push_back(std::move(pool));
  }

  // Support articles.
  Rng srng(mix_seed(spec.seed, kSupport));
  auto words_from = [&](std::size_t c, std::size_t l, std::size_t count, Rng& rng) {
    std::vector<std::string> words;
    words.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      words.push_back(out.word(l, draw(out.word_distribution[c], cdfs[c], rng)));
    return words;
  };
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t l = 0; l < spec.n_languages; ++l) {
      const bool missing = l > 0 && srng.bernoulli(spec.missing_support_rate);
      const std::size_t count = missing ? 0 : spec.support_docs_per_concept;
      for (std::size_t a = 0; a < count; ++a) {
        const std::size_t length =
            spec.support_length_min +
            srng.uniform_index(spec.support_length_max - spec.support_length_min + 1);
        SupportArticle art;
        art.concept_id = out.basic_ids[c];
        art.language = out.languages[l];
        art.title = "Article " + std::to_string(a) + " on " + out.basic_ids[c];
        art.text = render(words_from(c, l, length, srng));
        art.links_in = 5 + srng.uniform_index(56);
        art.links_out = 5 + srng.uniform_index(56);
        out.articles.push_back(std::move(art));
      }
      if (srng.bernoulli(spec.junk_rate)) {
        SupportArticle junk;
        junk.concept_id = out.basic_ids[c];
        junk.language = out.languages[l];
        junk.title = "Junk on " + out.basic_ids[c];
        switch (srng.uniform_index(3)) {
          case 0:
            junk.text = render(words_from(c, l, spec.support_length_max, srng));
            junk.flags.insert(ArticleFlag::disambiguation);
            junk.links_in = junk.links_out = 20;
            break;
          case 1:
            junk.text = render(words_from(c, l, spec.support_length_max, srng));
            junk.links_in = srng.uniform_index(5);
            junk.links_out = 20;
            break;
          default:
            junk.text = render(words_from(c, l, 8, srng));
            junk.links_in = junk.links_out = 20;
            break;
        }
        out.articles.push_back(std::move(junk));
      }
    }
  }

  // Labeled documents.
  Rng drng(mix_seed(spec.seed, kLabeled));
  const std::size_t id_width = digits(spec.n_categories * std::max(spec.docs_per_category, spec.test_docs()));
  for (std::size_t l = 0; l < spec.n_languages; ++l) {
    const std::string& lang = out.languages[l];
    for (const bool is_train : {true, false}) {
      auto& docs = (is_train ? out.train : out.test)[lang];
      const std::size_t per = is_train ? spec.docs_per_category : spec.test_docs();
      for (std::size_t k = 0; k < spec.n_categories; ++k) {
        for (std::size_t d = 0; d < per; ++d) {
          std::vector<std::size_t> pool = out.category_pools[k];
          for (std::size_t i = 0; i < spec.concepts_per_doc; ++i)
            std::swap(pool[i], pool[i + drng.uniform_index(pool.size() - i)]);
          std::vector<std::string> words;
          for (std::size_t w = 0; w < spec.doc_length; ++w) {
            if (drng.bernoulli(spec.noise_rate)) {
              words.push_back(out.word(l, static_cast<std::uint32_t>(
                                              drng.uniform_index(spec.vocab_size_per_language))));
            } else {
              const std::size_t c = pool[drng.uniform_index(spec.concepts_per_doc)];
              words.push_back(out.word(l, draw(out.word_distribution[c], cdfs[c], drng)));
            }
          }
          LabeledDocument doc;
          doc.doc_id = lang + (is_train ? "-train-" : "-test-") + padded(docs.size(), std::max<std::size_t>(4, id_width));
          doc.language = lang;
          doc.text = render(words);
          doc.label = out.categories[k];
          docs.push_back(std::move(doc));
        }
      }
    }
  }
  return out;
}

ExperimentConfig synthetic_experiment_config(const SyntheticCorpus& corpus, Setup setup,
                                             std::set<std::string> sources,
                                             std::set<std::string> targets) {
  ExperimentConfig cfg;
  cfg.setup = setup;
  cfg.source_languages = std::move(sources);
  cfg.target_languages = std::move(targets);
  cfg.samples_per_category_per_language = std::min<std::size_t>(50, corpus.spec.docs_per_category);
  cfg.seed = corpus.spec.seed;
  cfg.categories = corpus.categories;
  cfg.paths.corpus = "corpus.jsonl";
  cfg.paths.concepts = "concepts.jsonl";
  cfg.paths.hierarchy = "hierarchy.jsonl";
  for (const auto& lang : corpus.languages) {
    cfg.paths.train[lang] = "train_" + lang + ".jsonl";
    cfg.paths.test[lang] = "test_" + lang + ".jsonl";
  }
  cfg.hyper.k_doc = std::max<std::size_t>(1, corpus.spec.n_concepts / 10);
  return cfg;
}

void write_synthetic_corpus(const SyntheticCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  corpus.concepts.save(dir / "concepts.jsonl");
  write_hierarchy_edges(dir / "hierarchy.jsonl", corpus.edges);
  write_support_corpus(dir / "corpus.jsonl", corpus.articles);
  for (const auto& [lang, docs] : corpus.train) write_labeled_dataset(dir / ("train_" + lang + ".jsonl"), docs);
  for (const auto& [lang, docs] : corpus.test) write_labeled_dataset(dir / ("test_" + lang + ".jsonl"), docs);
  write_json(dir / "spec.json", corpus.spec.to_json());

  const auto& langs = corpus.languages;
  const ExperimentConfig cfg =
      langs.size() >= 2 ? synthetic_experiment_config(corpus, Setup::cltc2, {langs[0]}, {langs[1]})
                        : synthetic_experiment_config(corpus, Setup::cltc1, {langs[0]}, {langs[0]});
  write_json(dir / "experiment.json", cfg.to_json());
}

}  // namespace lifg
