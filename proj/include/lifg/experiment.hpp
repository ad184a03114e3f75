#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifg/corpus.hpp"
#include "lifg/features.hpp"
#include "lifg/interpreter.hpp"
#include "lifg/learner.hpp"
#include "lifg/ontology.hpp"
#include "lifg/rng.hpp"
#include "lifg/tokenizer.hpp"
#include "lifg/virtual_docs.hpp"

namespace lifg {

/// The four cross-lingual categorization setups, by the language sets of the
/// training (L(D^e)) and test (L(D^c)) documents:
///   CLTC1  one language, the same on both sides
///   CLTC2  one language on each side, different
///   CLTC3  several training languages, one test language
///   UCLTC  any nonempty sets
enum class Setup { cltc1, cltc2, cltc3, ucltc };

std::string_view to_string(Setup setup);
Setup parse_setup(std::string_view name);

bool setup_admits(Setup setup, const std::set<std::string>& train_languages,
                  const std::set<std::string>& test_languages);
/// Throws SetupError describing the violated constraint.
void validate_setup(Setup setup, const std::set<std::string>& train_languages,
                    const std::set<std::string>& test_languages);

struct Hyperparameters {
  std::size_t k_term = 5000;
  std::size_t k_doc = 100;
  unsigned m = 3;
  std::uint64_t p = 10;
  std::size_t t = 200;
  std::size_t n_select = 20000;
  double lambda = 1e-4;
  unsigned epochs = 20;
};

struct DataPaths {
  std::filesystem::path corpus;
  std::filesystem::path concepts;   // optional: all corpus concepts become basic
  std::filesystem::path hierarchy;  // optional: flat ontology
  std::map<std::string, std::filesystem::path> train;
  std::map<std::string, std::filesystem::path> test;
  std::map<std::string, std::filesystem::path> stopwords;
};

/// Missing-support simulation for the virtual-document ablation: concepts are
/// ranked by the length of their reference-language support, a prefix is kept
/// and blocks are added one at a time.
struct CurveConfig {
  std::string reference_language;  // defaults to the first source language
  double prefix_fraction = 0.7;
  double block_fraction = 0.1;
  unsigned blocks = 3;
};

struct ExperimentConfig {
  Setup setup = Setup::ucltc;
  std::set<std::string> source_languages;
  std::set<std::string> target_languages;
  std::size_t samples_per_category_per_language = 50;
  std::size_t test_samples_per_language = 0;  // 0 keeps every test document
  std::uint64_t seed = 1;
  unsigned repetitions = 1;
  std::vector<std::string> categories;  // optional declared order
  DataPaths paths;
  FilterConfig filter;
  Hyperparameters hyper;
  bool virtual_docs = true;
  bool meta_features = true;
  CurveConfig curve;

  std::set<std::string> task_languages() const;
  FeatureOptions feature_options() const;
  VirtualDocParams virtual_params() const;

  /// Checks ranges and the setup constraints.
  void validate() const;

  /// Relative paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Raw inputs of an experiment, before filtering.
struct ExperimentData {
  ConceptTable concepts;
  LanguageEdges edges;
  std::vector<SupportArticle> articles;
  std::vector<LabeledDocument> train_pool;
  std::vector<LabeledDocument> test_pool;
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);
Tokenizer make_tokenizer(const ExperimentConfig& cfg);

/// Filtered support, merged hierarchy, virtual documents, retained concepts
/// and one interpreter per task language.
struct KnowledgeBase {
  Hierarchy hierarchy;
  SupportIndex index;
  std::vector<NodeId> retained;
  InterpreterSet interpreters;
  std::vector<VirtualDocRecord> virtual_docs;
  std::vector<std::pair<std::string, std::string>> virtual_failures;
};

/// Filter articles, merge the hierarchy and index the support.
std::pair<Hierarchy, SupportIndex> build_support(const ExperimentData& data,
                                                 const FilterConfig& filter);

/// Interpreters for `languages` over `retained`.
InterpreterSet build_interpreters(const ConceptTable& concepts, const SupportIndex& idx,
                                  const std::set<std::string>& languages,
                                  std::span<const NodeId> retained, std::size_t k_term,
                                  const Tokenizer& tokenizer, unsigned workers);

/// Concepts with real support in at least one of `languages` get virtual
/// documents wherever one of those languages lacks support.
VirtualDocOutcome complete_support(const Hierarchy& h, SupportIndex& idx,
                                   const std::set<std::string>& languages, VirtualDocParams params,
                                   const Tokenizer& tokenizer, unsigned workers);

KnowledgeBase build_knowledge(const ExperimentData& data, const ExperimentConfig& cfg,
                              const Tokenizer& tokenizer, unsigned workers);

/// Category list: the declared order, or the sorted labels of the documents
/// in the source languages.
std::vector<std::string> resolve_categories(const ExperimentConfig& cfg,
                                            const std::vector<LabeledDocument>& train_pool);

/// Stratified sample without replacement: n documents per source language
/// and category, in a seeded order. Throws DataError when a cell holds fewer.
std::vector<LabeledDocument> sample_training(const std::vector<LabeledDocument>& pool,
                                             const std::set<std::string>& languages,
                                             const std::vector<std::string>& categories,
                                             std::size_t per_category, std::uint64_t seed);

/// Test documents of the target languages (optionally a seeded subset per
/// language). Every document must carry a label from `categories`.
std::vector<LabeledDocument> select_test(const std::vector<LabeledDocument>& pool,
                                         const std::set<std::string>& languages,
                                         const std::vector<std::string>& categories,
                                         std::size_t per_language, std::uint64_t seed);

std::vector<std::size_t> label_indices(const std::vector<LabeledDocument>& docs,
                                       const std::vector<std::string>& categories);

/// Seeds of round r: sampling, training, and the test subset (shared by all rounds).
constexpr std::uint64_t round_sample_seed(std::uint64_t seed, unsigned r) {
  return mix_seed(seed, 2 * static_cast<std::uint64_t>(r));
}
constexpr std::uint64_t round_train_seed(std::uint64_t seed, unsigned r) {
  return mix_seed(seed, 2 * static_cast<std::uint64_t>(r) + 1);
}
constexpr std::uint64_t test_selection_seed(std::uint64_t seed) { return mix_seed(seed, 0xC0FFEE); }

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<std::string> train_doc_ids;
  std::size_t generated_features = 0;
  FeatureSpace space;
  std::vector<BinaryFeatureVector> train_vectors;
  std::vector<BinaryFeatureVector> test_vectors;
  LinearModel model;
  std::vector<std::size_t> predicted;
  EvalReport report;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> categories;
  std::size_t retained_concepts = 0;
  std::size_t virtual_documents = 0;
  std::size_t virtual_failures = 0;
  std::vector<std::string> test_doc_ids;
  std::vector<RunResult> runs;

  double mean_accuracy() const;
  double std_accuracy() const;
  double mean_macro_f1() const;
  nlohmann::json to_json() const;
};

/// Runs cfg.repetitions train/test rounds on a prepared knowledge base.
ExperimentReport run_on_knowledge(const KnowledgeBase& kb, const ExperimentData& data,
                                  const ExperimentConfig& cfg, const Tokenizer& tokenizer,
                                  unsigned workers);

/// End to end. When `out_dir` is set, writes interpreters, virtual
/// documents, per-round artifacts and report.json there.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                unsigned workers = 1,
                                const std::optional<std::filesystem::path>& out_dir = {});

/// Artifacts of one round, in the layout the stepwise CLI commands use.
void write_run_artifacts(const std::filesystem::path& dir, const RunResult& run,
                         const std::vector<LabeledDocument>& train_docs,
                         const std::vector<LabeledDocument>& test_docs);

enum class AblationToggle { meta_features, virtual_docs };
AblationToggle parse_toggle(std::string_view name);

struct CurvePoint {
  std::size_t concepts = 0;  // concepts in the simulated resource
  unsigned blocks = 0;
  double control = 0.0;      // original target-language support
  double virtual_arm = 0.0;  // target-language support replaced by virtual documents
  double deleted = 0.0;      // block concepts removed outright
};

struct AblationReport {
  AblationToggle toggle = AblationToggle::meta_features;
  // meta_features: `without` has the component off, `with` on.
  std::optional<ExperimentReport> without;
  std::optional<ExperimentReport> with;
  std::vector<CurvePoint> curve;

  double delta() const;
  nlohmann::json to_json() const;
};

/// Runs the experiment twice differing only in the toggled component (same
/// seeds, same samples). For virtual_docs this is the missing-support curve.
AblationReport ablation(const ExperimentConfig& cfg, const ExperimentData& data,
                        AblationToggle toggle, unsigned workers = 1);

/// Writes JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace lifg
