#include "lifg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "lifg/error.hpp"
#include "lifg/parallel.hpp"
#include "lifg/rng.hpp"

namespace lifg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_languages(const std::set<std::string>& langs) {
  std::string out = "{";
  for (const auto& l : langs) {
    if (out.size() > 1) out += ", ";
    out += l;
  }
  return out + "}";
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known,
                         std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw DataError(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

std::map<std::string, fs::path> path_map(const json& j, const fs::path& base) {
  std::map<std::string, fs::path> out;
  for (const auto& [lang, p] : j.items()) out[lang] = resolve(base, p.get<std::string>());
  return out;
}

json path_map_json(const std::map<std::string, fs::path>& m) {
  json out = json::object();
  for (const auto& [lang, p] : m) out[lang] = p.generic_string();
  return out;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample standard deviation; 0 for fewer than two values.
double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::size_t category_index(const std::vector<std::string>& categories, const std::string& label) {
  auto it = std::find(categories.begin(), categories.end(), label);
  if (it == categories.end()) throw DataError("label \"" + label + "\" is not a declared category");
  return static_cast<std::size_t>(it - categories.begin());
}

std::vector<std::size_t> sample_training_indices(const std::vector<LabeledDocument>& pool,
                                                 const std::set<std::string>& languages,
                                                 const std::vector<std::string>& categories,
                                                 std::size_t per_category, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> out;
  for (const auto& lang : languages) {
    for (const auto& cat : categories) {
      std::vector<std::size_t> cell;
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool[i].language == lang && pool[i].label && *pool[i].label == cat) cell.push_back(i);
      if (cell.size() < per_category)
        throw DataError("category \"" + cat + "\" has " + std::to_string(cell.size()) +
                        " training documents in " + lang + ", " + std::to_string(per_category) +
                        " required");
      rng.shuffle(std::span(cell));
      cell.resize(per_category);
      out.insert(out.end(), cell.begin(), cell.end());
    }
  }
  // Interleave languages and categories in a seeded order.
  rng.shuffle(std::span(out));
  return out;
}

}  // namespace

// ----------------------------------------------------------------- setups

std::string_view to_string(Setup setup) {
  switch (setup) {
    case Setup::cltc1: return "CLTC1";
    case Setup::cltc2: return "CLTC2";
    case Setup::cltc3: return "CLTC3";
    case Setup::ucltc: return "UCLTC";
  }
  return "?";
}

Setup parse_setup(std::string_view name) {
  std::string upper(name);
  for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (upper == "CLTC1") return Setup::cltc1;
  if (upper == "CLTC2") return Setup::cltc2;
  if (upper == "CLTC3") return Setup::cltc3;
  if (upper == "UCLTC") return Setup::ucltc;
  throw DataError("unknown setup \"" + std::string(name) + "\"");
}

namespace {

std::optional<std::string> setup_violation(Setup setup, const std::set<std::string>& e,
                                           const std::set<std::string>& c) {
  if (e.empty()) return "the training language set is empty";
  if (c.empty()) return "the test language set is empty";
  switch (setup) {
    case Setup::cltc1:
      if (e.size() != 1) return "CLTC1 needs exactly one training language";
      if (e != c) return "CLTC1 needs the test language to equal the training language";
      return std::nullopt;
    case Setup::cltc2:
      if (e.size() != 1 || c.size() != 1)
        return "CLTC2 needs exactly one training and one test language";
      if (e == c) return "CLTC2 needs different training and test languages";
      return std::nullopt;
    case Setup::cltc3:
      if (e.size() < 2) return "CLTC3 needs at least two training languages";
      if (c.size() != 1) return "CLTC3 needs exactly one test language";
      return std::nullopt;
    case Setup::ucltc:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

bool setup_admits(Setup setup, const std::set<std::string>& train_languages,
                  const std::set<std::string>& test_languages) {
  return !setup_violation(setup, train_languages, test_languages);
}

void validate_setup(Setup setup, const std::set<std::string>& train_languages,
                    const std::set<std::string>& test_languages) {
  if (auto why = setup_violation(setup, train_languages, test_languages))
    throw SetupError(*why + " (training " + join_languages(train_languages) + ", test " +
                     join_languages(test_languages) + ")");
}

// ----------------------------------------------------------------- config

std::set<std::string> ExperimentConfig::task_languages() const {
  std::set<std::string> out = source_languages;
  out.insert(target_languages.begin(), target_languages.end());
  return out;
}

FeatureOptions ExperimentConfig::feature_options() const {
  return {hyper.k_doc, hyper.m, meta_features, hyper.n_select};
}

VirtualDocParams ExperimentConfig::virtual_params() const { return {hyper.p, hyper.t}; }

void ExperimentConfig::validate() const {
  validate_setup(setup, source_languages, target_languages);
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw DataError("invalid configuration: " + what);
  };
  require(samples_per_category_per_language >= 1, "samples_per_category_per_language must be >= 1");
  require(repetitions >= 1, "repetitions must be >= 1");
  require(hyper.k_term >= 1, "k_term must be >= 1");
  require(hyper.k_doc >= 1, "k_doc must be >= 1");
  require(hyper.n_select >= 1, "n_select must be >= 1");
  require(hyper.p >= 1, "p must be >= 1");
  require(hyper.t >= 1, "t must be >= 1");
  require(hyper.lambda > 0.0, "lambda must be positive");
  require(hyper.epochs >= 1, "epochs must be >= 1");
  require(curve.prefix_fraction > 0.0 && curve.prefix_fraction <= 1.0,
          "curve.prefix_fraction must lie in (0, 1]");
  require(curve.block_fraction > 0.0 && curve.block_fraction <= 1.0,
          "curve.block_fraction must lie in (0, 1]");
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw DataError("configuration must be a JSON object");
  reject_unknown_keys(j,
                      {"setup", "source_languages", "target_languages",
                       "samples_per_category_per_language", "test_samples_per_language", "seed",
                       "repetitions", "categories", "paths", "filter", "hyperparameters",
                       "virtual_docs", "meta_features", "curve"},
                      "configuration");
  try {
    ExperimentConfig cfg;
    cfg.setup = parse_setup(j.at("setup").get<std::string>());
    cfg.source_languages = j.at("source_languages").get<std::set<std::string>>();
    cfg.target_languages = j.at("target_languages").get<std::set<std::string>>();
    cfg.samples_per_category_per_language =
        j.value("samples_per_category_per_language", cfg.samples_per_category_per_language);
    cfg.test_samples_per_language =
        j.value("test_samples_per_language", cfg.test_samples_per_language);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.categories = j.value("categories", cfg.categories);
    cfg.virtual_docs = j.value("virtual_docs", cfg.virtual_docs);
    cfg.meta_features = j.value("meta_features", cfg.meta_features);

    if (auto it = j.find("paths"); it != j.end()) {
      const json& p = *it;
      reject_unknown_keys(p, {"corpus", "concepts", "hierarchy", "train", "test", "stopwords"},
                          "paths");
      if (p.contains("corpus")) cfg.paths.corpus = resolve(base_dir, p["corpus"].get<std::string>());
      if (p.contains("concepts")) cfg.paths.concepts = resolve(base_dir, p["concepts"].get<std::string>());
      if (p.contains("hierarchy")) cfg.paths.hierarchy = resolve(base_dir, p["hierarchy"].get<std::string>());
      if (p.contains("train")) cfg.paths.train = path_map(p["train"], base_dir);
      if (p.contains("test")) cfg.paths.test = path_map(p["test"], base_dir);
      if (p.contains("stopwords")) cfg.paths.stopwords = path_map(p["stopwords"], base_dir);
    }
    if (auto it = j.find("filter"); it != j.end()) cfg.filter = filter_config_from_json(*it);
    if (auto it = j.find("hyperparameters"); it != j.end()) {
      const json& h = *it;
      reject_unknown_keys(h, {"k_term", "k_doc", "m", "p", "t", "n_select", "lambda", "epochs"},
                          "hyperparameters");
      cfg.hyper.k_term = h.value("k_term", cfg.hyper.k_term);
      cfg.hyper.k_doc = h.value("k_doc", cfg.hyper.k_doc);
      cfg.hyper.m = h.value("m", cfg.hyper.m);
      cfg.hyper.p = h.value("p", cfg.hyper.p);
      cfg.hyper.t = h.value("t", cfg.hyper.t);
      cfg.hyper.n_select = h.value("n_select", cfg.hyper.n_select);
      cfg.hyper.lambda = h.value("lambda", cfg.hyper.lambda);
      cfg.hyper.epochs = h.value("epochs", cfg.hyper.epochs);
    }
    if (auto it = j.find("curve"); it != j.end()) {
      const json& c = *it;
      reject_unknown_keys(c, {"reference_language", "prefix_fraction", "block_fraction", "blocks"},
                          "curve");
      cfg.curve.reference_language = c.value("reference_language", cfg.curve.reference_language);
      cfg.curve.prefix_fraction = c.value("prefix_fraction", cfg.curve.prefix_fraction);
      cfg.curve.block_fraction = c.value("block_fraction", cfg.curve.block_fraction);
      cfg.curve.blocks = c.value("blocks", cfg.curve.blocks);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw DataError(std::string("configuration: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

json ExperimentConfig::to_json() const {
  json paths_json = {{"corpus", paths.corpus.generic_string()},
                     {"train", path_map_json(paths.train)},
                     {"test", path_map_json(paths.test)}};
  if (!paths.concepts.empty()) paths_json["concepts"] = paths.concepts.generic_string();
  if (!paths.hierarchy.empty()) paths_json["hierarchy"] = paths.hierarchy.generic_string();
  if (!paths.stopwords.empty()) paths_json["stopwords"] = path_map_json(paths.stopwords);
  json out = {{"setup", to_string(setup)},
              {"source_languages", source_languages},
              {"target_languages", target_languages},
              {"samples_per_category_per_language", samples_per_category_per_language},
              {"test_samples_per_language", test_samples_per_language},
              {"seed", seed},
              {"repetitions", repetitions},
              {"paths", paths_json},
              {"filter", lifg::to_json(filter)},
              {"hyperparameters",
               {{"k_term", hyper.k_term},
                {"k_doc", hyper.k_doc},
                {"m", hyper.m},
                {"p", hyper.p},
                {"t", hyper.t},
                {"n_select", hyper.n_select},
                {"lambda", hyper.lambda},
                {"epochs", hyper.epochs}}},
              {"virtual_docs", virtual_docs},
              {"meta_features", meta_features},
              {"curve",
               {{"reference_language", curve.reference_language},
                {"prefix_fraction", curve.prefix_fraction},
                {"block_fraction", curve.block_fraction},
                {"blocks", curve.blocks}}}};
  if (!categories.empty()) out["categories"] = categories;
  return out;
}

// ------------------------------------------------------------------- data

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  if (cfg.paths.corpus.empty()) throw DataError("configuration names no support corpus");
  ExperimentData data;
  data.articles = load_support_corpus(cfg.paths.corpus);
  if (!cfg.paths.concepts.empty()) {
    data.concepts = ConceptTable::load(cfg.paths.concepts);
  } else {
    std::set<std::string> ids;
    for (const auto& a : data.articles) ids.insert(a.concept_id);
    for (const auto& id : ids) data.concepts.add(id, ConceptKind::basic);
  }
  if (!cfg.paths.hierarchy.empty()) data.edges = load_hierarchy_edges(cfg.paths.hierarchy);

  for (const auto& lang : cfg.source_languages) {
    auto it = cfg.paths.train.find(lang);
    if (it == cfg.paths.train.end()) throw DataError("no training dataset for language " + lang);
    auto docs = load_labeled_dataset(it->second);
    for (auto& d : docs)
      if (d.language == lang) data.train_pool.push_back(std::move(d));
  }
  for (const auto& lang : cfg.target_languages) {
    auto it = cfg.paths.test.find(lang);
    if (it == cfg.paths.test.end()) throw DataError("no test dataset for language " + lang);
    auto docs = load_labeled_dataset(it->second);
    for (auto& d : docs)
      if (d.language == lang) data.test_pool.push_back(std::move(d));
  }
  return data;
}

Tokenizer make_tokenizer(const ExperimentConfig& cfg) {
  Tokenizer tok;
  for (const auto& [lang, path] : cfg.paths.stopwords) tok.load_stopwords(lang, path);
  return tok;
}

// -------------------------------------------------------------- knowledge

std::pair<Hierarchy, SupportIndex> build_support(const ExperimentData& data,
                                                 const FilterConfig& filter) {
  Hierarchy h = merge_hierarchies(data.concepts, data.edges);
  SupportIndex idx(h.concepts(), filter_articles(data.articles, filter));
  return {std::move(h), std::move(idx)};
}

InterpreterSet build_interpreters(const ConceptTable& concepts, const SupportIndex& idx,
                                  const std::set<std::string>& languages,
                                  std::span<const NodeId> retained, std::size_t k_term,
                                  const Tokenizer& tokenizer, unsigned workers) {
  if (retained.empty()) throw DataError("no concept has support in every task language");
  InterpreterSet out;
  for (const auto& lang : languages)
    out.emplace(lang, build_interpreter(concepts, idx, lang, retained, k_term, tokenizer, workers));
  return out;
}

VirtualDocOutcome complete_support(const Hierarchy& h, SupportIndex& idx,
                                   const std::set<std::string>& languages, VirtualDocParams params,
                                   const Tokenizer& tokenizer, unsigned workers) {
  std::vector<NodeId> targets;
  for (NodeId n : idx.basic_nodes()) {
    bool somewhere = false;
    for (const auto& l : languages) somewhere = somewhere || idx.has_real_support(n, l);
    if (somewhere) targets.push_back(n);
  }
  // Every language sees the same real support, so build all before installing.
  VirtualDocOutcome total;
  std::vector<std::pair<std::string, std::vector<NodeId>>> missing;
  for (const auto& l : languages) {
    std::vector<NodeId> lacking;
    for (NodeId n : targets)
      if (!idx.has_real_support(n, l)) lacking.push_back(n);
    missing.emplace_back(l, std::move(lacking));
  }
  for (const auto& [l, lacking] : missing) {
    auto outcome = add_virtual_documents(h, idx, l, lacking, params, tokenizer, workers);
    for (auto& r : outcome.constructed) total.constructed.push_back(std::move(r));
    for (auto& f : outcome.failed) total.failed.push_back(std::move(f));
  }
  return total;
}

KnowledgeBase build_knowledge(const ExperimentData& data, const ExperimentConfig& cfg,
                              const Tokenizer& tokenizer, unsigned workers) {
  auto [h, idx] = build_support(data, cfg.filter);
  const auto languages = cfg.task_languages();
  VirtualDocOutcome outcome;
  if (cfg.virtual_docs)
    outcome = complete_support(h, idx, languages, cfg.virtual_params(), tokenizer, workers);
  auto retained = retained_concepts(h.concepts(), idx, languages);
  auto interpreters =
      build_interpreters(h.concepts(), idx, languages, retained, cfg.hyper.k_term, tokenizer, workers);
  return KnowledgeBase{std::move(h),           std::move(idx),
                       std::move(retained),    std::move(interpreters),
                       std::move(outcome.constructed), std::move(outcome.failed)};
}

// --------------------------------------------------------------- sampling

std::vector<std::string> resolve_categories(const ExperimentConfig& cfg,
                                            const std::vector<LabeledDocument>& train_pool) {
  if (!cfg.categories.empty()) {
    std::set<std::string> seen;
    for (const auto& c : cfg.categories)
      if (!seen.insert(c).second) throw DataError("category \"" + c + "\" declared twice");
    return cfg.categories;
  }
  std::set<std::string> labels;
  for (const auto& d : train_pool)
    if (d.label && cfg.source_languages.contains(d.language)) labels.insert(*d.label);
  if (labels.empty()) throw DataError("no labeled training documents in the source languages");
  return {labels.begin(), labels.end()};
}

std::vector<LabeledDocument> sample_training(const std::vector<LabeledDocument>& pool,
                                             const std::set<std::string>& languages,
                                             const std::vector<std::string>& categories,
                                             std::size_t per_category, std::uint64_t seed) {
  std::vector<LabeledDocument> out;
  for (std::size_t i : sample_training_indices(pool, languages, categories, per_category, seed))
    out.push_back(pool[i]);
  return out;
}

std::vector<LabeledDocument> select_test(const std::vector<LabeledDocument>& pool,
                                         const std::set<std::string>& languages,
                                         const std::vector<std::string>& categories,
                                         std::size_t per_language, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledDocument> out;
  for (const auto& lang : languages) {
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i].language != lang) continue;
      if (!pool[i].label) throw DataError("test document \"" + pool[i].doc_id + "\" has no label");
      category_index(categories, *pool[i].label);
      chosen.push_back(i);
    }
    if (chosen.empty()) throw DataError("no test documents in " + lang);
    if (per_language != 0 && chosen.size() > per_language) {
      rng.shuffle(std::span(chosen));
      chosen.resize(per_language);
      std::sort(chosen.begin(), chosen.end());
    }
    for (std::size_t i : chosen) out.push_back(pool[i]);
  }
  return out;
}

std::vector<std::size_t> label_indices(const std::vector<LabeledDocument>& docs,
                                       const std::vector<std::string>& categories) {
  std::vector<std::size_t> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    if (!d.label) throw DataError("document \"" + d.doc_id + "\" has no label");
    out.push_back(category_index(categories, *d.label));
  }
  return out;
}

// ------------------------------------------------------------------- runs

double ExperimentReport::mean_accuracy() const {
  std::vector<double> xs;
  for (const auto& r : runs) xs.push_back(r.report.accuracy);
  return mean(xs);
}

double ExperimentReport::std_accuracy() const {
  std::vector<double> xs;
  for (const auto& r : runs) xs.push_back(r.report.accuracy);
  return stddev(xs);
}

double ExperimentReport::mean_macro_f1() const {
  std::vector<double> xs;
  for (const auto& r : runs) xs.push_back(r.report.macro_f1);
  return mean(xs);
}

json ExperimentReport::to_json() const {
  std::vector<double> acc, f1;
  json runs_json = json::array();
  for (const auto& r : runs) {
    acc.push_back(r.report.accuracy);
    f1.push_back(r.report.macro_f1);
    runs_json.push_back({{"seed", r.seed},
                         {"n_train", r.train_doc_ids.size()},
                         {"generated_features", r.generated_features},
                         {"selected_features", r.space.size()},
                         {"evaluation", r.report.to_json()}});
  }
  return {{"format", "lifg-experiment-report"},
          {"version", 1},
          {"config", config.to_json()},
          {"categories", categories},
          {"retained_concepts", retained_concepts},
          {"virtual_documents", virtual_documents},
          {"virtual_failures", virtual_failures},
          {"n_test", test_doc_ids.size()},
          {"runs", runs_json},
          {"accuracy", {{"mean", mean(acc)}, {"std", stddev(acc)}}},
          {"macro_f1", {{"mean", mean(f1)}, {"std", stddev(f1)}}}};
}

ExperimentReport run_on_knowledge(const KnowledgeBase& kb, const ExperimentData& data,
                                  const ExperimentConfig& cfg, const Tokenizer& tokenizer,
                                  unsigned workers) {
  cfg.validate();
  for (const auto& lang : cfg.task_languages())
    if (!kb.interpreters.contains(lang)) throw DataError("no interpreter for " + lang);

  ExperimentReport out;
  out.config = cfg;
  out.categories = resolve_categories(cfg, data.train_pool);
  out.retained_concepts = kb.retained.size();
  out.virtual_documents = kb.virtual_docs.size();
  out.virtual_failures = kb.virtual_failures.size();

  const FeatureOptions options = cfg.feature_options();
  const auto test_docs = select_test(data.test_pool, cfg.target_languages, out.categories,
                                     cfg.test_samples_per_language, test_selection_seed(cfg.seed));
  const auto test_labels = label_indices(test_docs, out.categories);
  for (const auto& d : test_docs) out.test_doc_ids.push_back(d.doc_id);

  std::vector<std::set<std::string>> test_features(test_docs.size());
  parallel_for(test_docs.size(), workers, [&](std::size_t i) {
    test_features[i] =
        generate_document_features(kb.interpreters, kb.hierarchy, test_docs[i], options, tokenizer);
  });

  // Feature sets of training-pool documents, shared across rounds.
  std::map<std::size_t, std::set<std::string>> cache;

  for (unsigned r = 0; r < cfg.repetitions; ++r) {
    RunResult run;
    run.seed = round_sample_seed(cfg.seed, r);
    const auto picked = sample_training_indices(data.train_pool, cfg.source_languages,
                                                out.categories,
                                                cfg.samples_per_category_per_language, run.seed);
    std::vector<std::size_t> todo;
    for (std::size_t i : picked)
      if (!cache.contains(i)) todo.push_back(i);
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    std::vector<std::set<std::string>> fresh(todo.size());
    parallel_for(todo.size(), workers, [&](std::size_t k) {
      fresh[k] = generate_document_features(kb.interpreters, kb.hierarchy,
                                            data.train_pool[todo[k]], options, tokenizer);
    });
    for (std::size_t k = 0; k < todo.size(); ++k) cache.emplace(todo[k], std::move(fresh[k]));

    std::vector<std::set<std::string>> per_doc;
    std::vector<std::size_t> labels;
    for (std::size_t i : picked) {
      per_doc.push_back(cache.at(i));
      labels.push_back(category_index(out.categories, *data.train_pool[i].label));
      run.train_doc_ids.push_back(data.train_pool[i].doc_id);
    }

    auto full = assemble_feature_space(per_doc, options);
    run.generated_features = full.space.size();
    auto selected = select_features(full.space, full.vectors, labels, options.n_select);
    run.space = std::move(selected.space);
    run.train_vectors = std::move(selected.vectors);

    TrainParams params{cfg.hyper.lambda, cfg.hyper.epochs,
                       round_train_seed(cfg.seed, r)};
    run.model = train(run.train_vectors, labels, out.categories, run.space.size(), params);

    run.test_vectors.resize(test_docs.size());
    run.predicted.resize(test_docs.size());
    parallel_for(test_docs.size(), workers, [&](std::size_t i) {
      run.test_vectors[i] = run.space.project(test_features[i]);
      run.predicted[i] = run.model.predict_index(run.test_vectors[i]);
    });
    run.report = score_predictions(out.categories, test_labels, run.predicted);
    out.runs.push_back(std::move(run));
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

void write_run_artifacts(const fs::path& dir, const RunResult& run,
                         const std::vector<LabeledDocument>& train_docs,
                         const std::vector<LabeledDocument>& test_docs) {
  fs::create_directories(dir);
  run.space.save(dir / "feature_space.json");
  std::vector<VectorRecord> train_records, test_records;
  for (std::size_t i = 0; i < train_docs.size(); ++i)
    train_records.push_back(
        {train_docs[i].doc_id, run.train_vectors[i], train_docs[i].label, train_docs[i].language});
  for (std::size_t i = 0; i < test_docs.size(); ++i)
    test_records.push_back(
        {test_docs[i].doc_id, run.test_vectors[i], test_docs[i].label, test_docs[i].language});
  write_vectors(dir / "train_vectors.jsonl", train_records);
  write_vectors(dir / "test_vectors.jsonl", test_records);
  run.model.save(dir / "model.json", "feature_space.json");

  std::ofstream out(dir / "predictions.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "predictions.jsonl").string());
  for (std::size_t i = 0; i < test_docs.size(); ++i) {
    json j = {{"doc_id", test_docs[i].doc_id},
              {"language", test_docs[i].language},
              {"predicted", run.model.categories()[run.predicted[i]]}};
    if (test_docs[i].label) j["label"] = *test_docs[i].label;
    out << j.dump() << '\n';
  }
  write_json(dir / "evaluation.json", run.report.to_json());
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                unsigned workers, const std::optional<fs::path>& out_dir) {
  cfg.validate();
  const Tokenizer tokenizer = make_tokenizer(cfg);
  const KnowledgeBase kb = build_knowledge(data, cfg, tokenizer, workers);
  ExperimentReport report = run_on_knowledge(kb, data, cfg, tokenizer, workers);
  if (!out_dir) return report;

  const fs::path& dir = *out_dir;
  fs::create_directories(dir);
  for (const auto& [lang, si] : kb.interpreters) si.save(dir / "interpreters" / (lang + ".lsi"));
  write_virtual_documents(dir / "virtual_docs.jsonl", kb.virtual_docs);

  std::map<std::string, const LabeledDocument*> by_id;
  for (const auto& d : data.train_pool) by_id.emplace(d.doc_id, &d);
  std::vector<LabeledDocument> test_docs;
  {
    std::map<std::string, const LabeledDocument*> test_by_id;
    for (const auto& d : data.test_pool) test_by_id.emplace(d.doc_id, &d);
    for (const auto& id : report.test_doc_ids) test_docs.push_back(*test_by_id.at(id));
  }
  for (std::size_t r = 0; r < report.runs.size(); ++r) {
    const auto& run = report.runs[r];
    std::vector<LabeledDocument> train_docs;
    for (const auto& id : run.train_doc_ids) train_docs.push_back(*by_id.at(id));
    write_run_artifacts(dir / ("run_" + std::to_string(r)), run, train_docs, test_docs);
  }
  write_json(dir / "report.json", report.to_json());
  return report;
}

// --------------------------------------------------------------- ablation

AblationToggle parse_toggle(std::string_view name) {
  if (name == "meta_features" || name == "meta-features") return AblationToggle::meta_features;
  if (name == "virtual_docs" || name == "virtual-docs") return AblationToggle::virtual_docs;
  throw InvalidArgument("unknown ablation toggle \"" + std::string(name) + "\"");
}

double AblationReport::delta() const {
  if (with && without) return with->mean_accuracy() - without->mean_accuracy();
  if (curve.empty()) return 0.0;
  return curve.back().virtual_arm - curve.back().deleted;
}

json AblationReport::to_json() const {
  json out = {{"format", "lifg-ablation-report"},
              {"version", 1},
              {"toggle", toggle == AblationToggle::meta_features ? "meta_features" : "virtual_docs"}};
  if (with && without) {
    out["with"] = with->to_json();
    out["without"] = without->to_json();
    out["accuracy_with"] = with->mean_accuracy();
    out["accuracy_without"] = without->mean_accuracy();
    out["delta"] = delta();
    bool same = with->runs.size() == without->runs.size();
    for (std::size_t r = 0; same && r < with->runs.size(); ++r)
      same = with->runs[r].train_doc_ids == without->runs[r].train_doc_ids;
    out["identical_samples"] = same;
  }
  if (!curve.empty()) {
    json points = json::array();
    for (const auto& p : curve)
      points.push_back({{"blocks", p.blocks},
                        {"concepts", p.concepts},
                        {"control", p.control},
                        {"virtual", p.virtual_arm},
                        {"deleted", p.deleted}});
    out["curve"] = points;
    out["delta"] = delta();
  }
  return out;
}

namespace {

std::vector<CurvePoint> virtual_doc_curve(const ExperimentConfig& cfg, const ExperimentData& data,
                                          unsigned workers) {
  const Tokenizer tokenizer = make_tokenizer(cfg);
  const auto languages = cfg.task_languages();
  const std::string reference = cfg.curve.reference_language.empty()
                                    ? *cfg.source_languages.begin()
                                    : cfg.curve.reference_language;
  if (!languages.contains(reference))
    throw DataError("curve reference language " + reference + " is not a task language");
  std::set<std::string> replaced = languages;
  replaced.erase(reference);
  if (replaced.empty())
    throw DataError("the virtual-document curve needs a task language besides " + reference);

  auto [h, base] = build_support(data, cfg.filter);

  // Concepts with original support everywhere, longest reference support first.
  std::vector<std::pair<std::uint64_t, NodeId>> ranked;
  for (NodeId n : base.basic_nodes()) {
    bool everywhere = true;
    for (const auto& l : languages) everywhere = everywhere && base.has_real_support(n, l);
    if (!everywhere) continue;
    std::uint64_t length = 0;
    for (const auto& a : base.articles(n, reference)) length += a.text.size();
    ranked.emplace_back(length, n);
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return h.concepts().id(a.second) < h.concepts().id(b.second);
  });
  const std::size_t total = ranked.size();
  const auto prefix = static_cast<std::size_t>(std::llround(cfg.curve.prefix_fraction * total));
  const auto block = static_cast<std::size_t>(std::llround(cfg.curve.block_fraction * total));
  if (prefix == 0 || block == 0)
    throw DataError("too few concepts (" + std::to_string(total) + ") for the curve fractions");

  auto run_arm = [&](SupportIndex idx) {
    auto retained = retained_concepts(h.concepts(), idx, languages);
    auto interpreters = build_interpreters(h.concepts(), idx, languages, retained,
                                           cfg.hyper.k_term, tokenizer, workers);
    KnowledgeBase kb{h, std::move(idx), std::move(retained), std::move(interpreters), {}, {}};
    return run_on_knowledge(kb, data, cfg, tokenizer, workers).mean_accuracy();
  };

  std::vector<CurvePoint> curve;
  double deleted = 0.0;
  for (unsigned b = 0; b <= cfg.curve.blocks; ++b) {
    const std::size_t upto = std::min(total, prefix + b * block);
    std::vector<bool> keep(h.size(), false);
    for (std::size_t i = 0; i < upto; ++i) keep[ranked[i].second] = true;
    SupportIndex control = base;
    for (NodeId n : base.basic_nodes())
      if (!keep[n]) control.remove_concept(n);

    CurvePoint point;
    point.blocks = b;
    point.concepts = upto;
    point.control = run_arm(control);
    if (b == 0) deleted = point.control;
    point.deleted = deleted;

    if (b == 0) {
      point.virtual_arm = point.control;
    } else {
      SupportIndex virt = control;
      std::vector<NodeId> block_concepts;
      for (std::size_t i = prefix; i < upto; ++i) block_concepts.push_back(ranked[i].second);
      std::sort(block_concepts.begin(), block_concepts.end());
      for (NodeId n : block_concepts)
        for (const auto& l : replaced) virt.remove_support(n, l);
      for (const auto& l : replaced) {
        auto outcome = add_virtual_documents(h, virt, l, block_concepts, cfg.virtual_params(),
                                             tokenizer, workers);
        for (const auto& [id, why] : outcome.failed) virt.remove_concept(h.concepts().at(id));
      }
      point.virtual_arm = run_arm(std::move(virt));
    }
    curve.push_back(point);
  }
  return curve;
}

}  // namespace

AblationReport ablation(const ExperimentConfig& cfg, const ExperimentData& data,
                        AblationToggle toggle, unsigned workers) {
  cfg.validate();
  AblationReport out;
  out.toggle = toggle;
  if (toggle == AblationToggle::meta_features) {
    ExperimentConfig on = cfg, off = cfg;
    on.meta_features = true;
    off.meta_features = false;
    const Tokenizer tokenizer = make_tokenizer(cfg);
    const KnowledgeBase kb = build_knowledge(data, cfg, tokenizer, workers);
    out.with = run_on_knowledge(kb, data, on, tokenizer, workers);
    out.without = run_on_knowledge(kb, data, off, tokenizer, workers);
  } else {
    out.curve = virtual_doc_curve(cfg, data, workers);
  }
  return out;
}

}  // namespace lifg
