#include "lifg/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "lifg/error.hpp"
#include "lifg/experiment.hpp"
#include "lifg/synthetic.hpp"

namespace lifg::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out_dir;
};

ExperimentConfig load_config(const Globals& g) {
  if (g.config.empty()) throw UsageError("this command needs --config");
  ExperimentConfig cfg = ExperimentConfig::load(g.config);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

std::optional<ExperimentConfig> maybe_config(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return load_config(g);
}

fs::path out_dir(const Globals& g) {
  if (g.out_dir.empty()) throw UsageError("this command needs --out-dir");
  return g.out_dir;
}

fs::path require_file(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path))
    throw IoError(path.string() + " not found (run `lifg " + std::string(producer) + "` first)");
  return path;
}

InterpreterSet load_interpreters(const fs::path& dir, const std::set<std::string>& languages) {
  InterpreterSet out;
  for (const auto& lang : languages)
    out.emplace(lang, SemanticInterpreter::load(
                          require_file(dir / "interpreters" / (lang + ".lsi"), "build-interpreter")));
  return out;
}

std::vector<std::string> categories_from_records(const std::vector<VectorRecord>& records) {
  std::set<std::string> labels;
  for (const auto& r : records)
    if (r.label) labels.insert(*r.label);
  if (labels.empty()) throw DataError("no labeled vectors");
  return {labels.begin(), labels.end()};
}

std::size_t index_of(const std::vector<std::string>& categories, const std::string& label) {
  auto it = std::find(categories.begin(), categories.end(), label);
  if (it == categories.end()) throw DataError("label \"" + label + "\" is not a model category");
  return static_cast<std::size_t>(it - categories.begin());
}

void write_predictions(const fs::path& path, const std::vector<VectorRecord>& records,
                       const LinearModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    json j = {{"doc_id", r.doc_id}, {"language", r.language}, {"predicted", model.predict(r.vector)}};
    if (r.label) j["label"] = *r.label;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

// ------------------------------------------------------------------ commands

void cmd_synth(const Globals& g, std::ostream& out) {
  SyntheticCorpusSpec spec;
  if (!g.config.empty()) {
    std::ifstream in(g.config, std::ios::binary);
    if (!in) throw IoError("cannot open " + g.config);
    try {
      spec = SyntheticCorpusSpec::from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw DataError(g.config + ": " + e.what());
    }
  }
  if (g.seed) spec.seed = *g.seed;
  SyntheticCorpus corpus;
  try {
    corpus = generate_synthetic_corpus(spec);
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  const fs::path dir = out_dir(g);
  write_synthetic_corpus(corpus, dir);
  out << "wrote " << corpus.articles.size() << " support articles, " << corpus.languages.size()
      << " languages, " << corpus.categories.size() << " categories to " << dir.string() << '\n';
}

void cmd_make_virtual_docs(const Globals& g, std::ostream& out) {
  const ExperimentConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);
  const ExperimentData data = load_experiment_data(cfg);
  const Tokenizer tokenizer = make_tokenizer(cfg);
  auto [h, idx] = build_support(data, cfg.filter);
  const auto outcome =
      complete_support(h, idx, cfg.task_languages(), cfg.virtual_params(), tokenizer, g.workers);
  write_virtual_documents(dir / "virtual_docs.jsonl", outcome.constructed);
  json failed = json::array();
  for (const auto& [id, why] : outcome.failed) failed.push_back({{"concept_id", id}, {"reason", why}});
  write_json(dir / "virtual_docs_summary.json",
             {{"constructed", outcome.constructed.size()}, {"failed", failed}});
  out << "constructed " << outcome.constructed.size() << " virtual documents, "
      << outcome.failed.size() << " concepts without enough ancestor support\n";
}

void cmd_build_interpreter(const Globals& g, const std::vector<std::string>& only,
                           std::ostream& out) {
  const ExperimentConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);
  const ExperimentData data = load_experiment_data(cfg);
  const Tokenizer tokenizer = make_tokenizer(cfg);
  const auto languages = cfg.task_languages();
  auto [h, idx] = build_support(data, cfg.filter);

  if (cfg.virtual_docs) {
    const fs::path cached = dir / "virtual_docs.jsonl";
    if (fs::exists(cached)) {
      for (auto& r : load_virtual_documents(cached)) {
        if (!languages.contains(r.language)) continue;
        const NodeId n = h.concepts().at(r.concept_id);
        if (!idx.has_real_support(n, r.language))
          idx.set_virtual_document(n, r.language, std::move(r.table));
      }
    } else {
      const auto outcome =
          complete_support(h, idx, languages, cfg.virtual_params(), tokenizer, g.workers);
      write_virtual_documents(cached, outcome.constructed);
    }
  }
  const auto retained = retained_concepts(h.concepts(), idx, languages);
  std::set<std::string> targets = languages;
  if (!only.empty()) {
    targets.clear();
    for (const auto& l : only) {
      if (!languages.contains(l)) throw UsageError(l + " is not a task language of the config");
      targets.insert(l);
    }
  }
  const auto interpreters = build_interpreters(h.concepts(), idx, targets, retained,
                                               cfg.hyper.k_term, tokenizer, g.workers);
  for (const auto& [lang, si] : interpreters) {
    si.save(dir / "interpreters" / (lang + ".lsi"));
    out << lang << ": " << si.doc_count() << " concepts, " << si.vocabulary_size() << " terms\n";
  }
  std::vector<std::string> ids;
  for (NodeId n : retained) ids.push_back(h.concepts().id(n));
  write_json(dir / "retained_concepts.json", {{"languages", languages}, {"concepts", ids}});
}

void cmd_gen_features(const Globals& g, std::ostream& out) {
  const ExperimentConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);
  const ExperimentData data = load_experiment_data(cfg);
  const Tokenizer tokenizer = make_tokenizer(cfg);
  const Hierarchy h = merge_hierarchies(data.concepts, data.edges);
  const InterpreterSet interpreters = load_interpreters(dir, cfg.task_languages());

  const auto categories = resolve_categories(cfg, data.train_pool);
  const auto train_docs =
      sample_training(data.train_pool, cfg.source_languages, categories,
                      cfg.samples_per_category_per_language, round_sample_seed(cfg.seed, 0));
  const auto labels = label_indices(train_docs, categories);
  const auto full = build_feature_space(train_docs, interpreters, h, cfg.feature_options(),
                                        tokenizer, g.workers);
  const auto selected = select_features(full.space, full.vectors, labels, cfg.hyper.n_select);
  const auto test_docs = select_test(data.test_pool, cfg.target_languages, categories,
                                     cfg.test_samples_per_language, test_selection_seed(cfg.seed));
  const auto test_vectors =
      map_documents(test_docs, interpreters, h, selected.space, tokenizer, g.workers);

  selected.space.save(dir / "feature_space.json");
  std::vector<VectorRecord> train_records, test_records;
  for (std::size_t i = 0; i < train_docs.size(); ++i)
    train_records.push_back(
        {train_docs[i].doc_id, selected.vectors[i], train_docs[i].label, train_docs[i].language});
  for (std::size_t i = 0; i < test_docs.size(); ++i)
    test_records.push_back(
        {test_docs[i].doc_id, test_vectors[i], test_docs[i].label, test_docs[i].language});
  write_vectors(dir / "train_vectors.jsonl", train_records);
  write_vectors(dir / "test_vectors.jsonl", test_records);
  out << "feature space: " << full.space.size() << " generated, " << selected.space.size()
      << " selected; " << train_docs.size() << " training and " << test_docs.size()
      << " test vectors\n";
}

void cmd_train(const Globals& g, std::ostream& out) {
  const auto cfg = maybe_config(g);
  const fs::path dir = out_dir(g);
  const FeatureSpace space =
      FeatureSpace::load(require_file(dir / "feature_space.json", "gen-features"));
  const auto records =
      load_vectors(require_file(dir / "train_vectors.jsonl", "gen-features"), space.size());
  const auto categories =
      cfg && !cfg->categories.empty() ? cfg->categories : categories_from_records(records);
  std::vector<BinaryFeatureVector> vectors;
  std::vector<std::size_t> labels;
  for (const auto& r : records) {
    if (!r.label) throw DataError("training vector \"" + r.doc_id + "\" has no label");
    vectors.push_back(r.vector);
    labels.push_back(index_of(categories, *r.label));
  }
  TrainParams params;
  const std::uint64_t seed = cfg ? cfg->seed : g.seed.value_or(1);
  if (cfg) {
    params.lambda = cfg->hyper.lambda;
    params.epochs = cfg->hyper.epochs;
  }
  params.seed = round_train_seed(seed, 0);
  const LinearModel model = train(vectors, labels, categories, space.size(), params);
  model.save(dir / "model.json", "feature_space.json");
  out << "trained " << categories.size() << " categories on " << vectors.size() << " vectors\n";
}

void cmd_classify(const Globals& g, const std::string& input, std::ostream& out) {
  const fs::path dir = out_dir(g);
  const LinearModel model = LinearModel::load(require_file(dir / "model.json", "train"));
  const FeatureSpace space =
      FeatureSpace::load(require_file(dir / "feature_space.json", "gen-features"));
  if (space.size() != model.dimension())
    throw DataError("model dimension differs from the feature space");

  std::vector<VectorRecord> records;
  if (input.empty()) {
    records = load_vectors(require_file(dir / "test_vectors.jsonl", "gen-features"), space.size());
  } else {
    const ExperimentConfig cfg = load_config(g);
    const auto docs = load_labeled_dataset(input);
    std::set<std::string> languages;
    for (const auto& d : docs) languages.insert(d.language);
    const Tokenizer tokenizer = make_tokenizer(cfg);
    const ExperimentData data = load_experiment_data(cfg);
    const Hierarchy h = merge_hierarchies(data.concepts, data.edges);
    const auto vectors = map_documents(docs, load_interpreters(dir, languages), h, space,
                                       tokenizer, g.workers);
    for (std::size_t i = 0; i < docs.size(); ++i)
      records.push_back({docs[i].doc_id, vectors[i], docs[i].label, docs[i].language});
  }
  write_predictions(dir / "predictions.jsonl", records, model);
  out << "classified " << records.size() << " documents\n";
}

void cmd_evaluate(const Globals& g, std::ostream& out) {
  const fs::path dir = out_dir(g);
  const LinearModel model = LinearModel::load(require_file(dir / "model.json", "train"));
  std::vector<std::size_t> truth, predicted;
  for_each_json_line(require_file(dir / "predictions.jsonl", "classify"),
                     [&](const json& j, std::size_t line) {
                       if (!j.contains("label") || !j["label"].is_string())
                         throw FormatError(line, "prediction without a true label");
                       if (!j.contains("predicted") || !j["predicted"].is_string())
                         throw FormatError(line, "missing predicted category");
                       truth.push_back(index_of(model.categories(), j["label"].get<std::string>()));
                       predicted.push_back(
                           index_of(model.categories(), j["predicted"].get<std::string>()));
                     });
  if (truth.empty()) throw DataError("no predictions to evaluate");
  const EvalReport report = score_predictions(model.categories(), truth, predicted);
  write_json(dir / "evaluation.json", report.to_json());
  out << "accuracy " << report.accuracy << ", macro-F1 " << report.macro_f1 << " on "
      << report.n_test << " documents\n";
}

void cmd_experiment(const Globals& g, std::ostream& out) {
  const ExperimentConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);
  const ExperimentData data = load_experiment_data(cfg);
  const ExperimentReport report = run_experiment(cfg, data, g.workers, dir);
  out << to_string(cfg.setup) << ": accuracy " << report.mean_accuracy() << " (std "
      << report.std_accuracy() << ") over " << report.runs.size() << " round(s), "
      << report.retained_concepts << " concepts\n";
}

void cmd_ablate(const Globals& g, const std::string& toggle_name, std::ostream& out) {
  const AblationToggle toggle = parse_toggle(toggle_name);
  const ExperimentConfig cfg = load_config(g);
  const fs::path dir = out_dir(g);
  const ExperimentData data = load_experiment_data(cfg);
  const AblationReport report = ablation(cfg, data, toggle, g.workers);
  write_json(dir / "ablation.json", report.to_json());
  if (toggle == AblationToggle::meta_features) {
    out << "with meta features " << report.with->mean_accuracy() << ", without "
        << report.without->mean_accuracy() << ", delta " << report.delta() << '\n';
  } else {
    for (const auto& p : report.curve)
      out << "blocks " << p.blocks << " (" << p.concepts << " concepts): control " << p.control
          << ", virtual " << p.virtual_arm << ", deleted " << p.deleted << '\n';
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-lingual text categorization over a shared concept space", "lifg"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--seed", g.seed, "override the configured seed");
  app.add_option("--workers", g.workers, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "directory for artifacts");

  std::vector<std::string> languages;
  std::string input, toggle;
  auto* synth = app.add_subcommand("synth", "generate a synthetic multilingual corpus");
  auto* make_vd = app.add_subcommand("make-virtual-docs", "construct virtual support documents");
  auto* build_si = app.add_subcommand("build-interpreter", "build per-language interpreters");
  build_si->add_option("--language", languages, "only these languages");
  auto* gen = app.add_subcommand("gen-features", "sample, generate and select features");
  auto* train_cmd = app.add_subcommand("train", "train the linear classifier");
  auto* classify = app.add_subcommand("classify", "predict categories");
  classify->add_option("--input", input, "labeled-dataset JSONL to classify instead of test vectors");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score predictions");
  auto* experiment = app.add_subcommand("experiment", "run a configured experiment end to end");
  auto* ablate = app.add_subcommand("ablate", "paired runs toggling one component");
  ablate->add_option("--toggle", toggle, "meta_features or virtual_docs")->required();
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) cmd_synth(g, out);
    else if (make_vd->parsed()) cmd_make_virtual_docs(g, out);
    else if (build_si->parsed()) cmd_build_interpreter(g, languages, out);
    else if (gen->parsed()) cmd_gen_features(g, out);
    else if (train_cmd->parsed()) cmd_train(g, out);
    else if (classify->parsed()) cmd_classify(g, input, out);
    else if (evaluate_cmd->parsed()) cmd_evaluate(g, out);
    else if (experiment->parsed()) cmd_experiment(g, out);
    else if (ablate->parsed()) cmd_ablate(g, toggle, out);
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SetupError& e) {
    err << "setup violation: " << e.what() << '\n';
    return kSetup;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace lifg::cli
