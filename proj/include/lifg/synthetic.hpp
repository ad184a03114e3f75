#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lifg/corpus.hpp"
#include "lifg/experiment.hpp"
#include "lifg/ontology.hpp"

namespace lifg {

/// Parameters of the synthetic multilingual generator.
///
/// Every basic concept owns a distribution over abstract word slots that is
/// shared by all languages; language l renders slot v as its own word, so
/// vocabularies are disjoint while concept distributions stay aligned. A
/// concept's distribution mixes its signature slots, the group slots of its
/// level-1 parents, the signatures of its siblings (cross references) and a
/// background pool.
///
/// Labeled documents of a category pick `concepts_per_doc` distinct concepts
/// from the category's pool and draw each word from one of them, or
/// uniformly from the whole vocabulary with probability noise_rate.
struct SyntheticCorpusSpec {
  std::size_t n_concepts = 60;
  std::size_t n_meta_levels = 2;
  std::size_t branching = 6;
  std::size_t vocab_size_per_language = 2000;
  std::size_t n_languages = 2;
  std::size_t n_categories = 3;
  std::size_t docs_per_category = 100;  // per language, training split
  double noise_rate = 0.05;
  std::uint64_t seed = 1;

  std::size_t test_docs_per_category = 0;  // per language; 0 means docs_per_category
  std::size_t concepts_per_category = 6;
  std::size_t concepts_per_doc = 2;
  std::size_t doc_length = 60;
  std::size_t support_docs_per_concept = 1;
  std::size_t support_length_min = 150;
  std::size_t support_length_max = 300;
  std::size_t signature_words = 10;
  std::size_t group_words = 20;
  std::size_t background_words = 20;
  double group_rate = 0.15;
  double xref_rate = 0.1;
  double background_rate = 0.1;
  std::size_t extra_parents = 1;      // additional level-1 parents per basic concept
  double extra_meta_parent_rate = 0.3;
  double category_alignment = 1.0;    // 1: pools follow the primary groups
  double missing_support_rate = 0.0;  // per concept and non-first language
  double junk_rate = 0.05;            // extra articles the default filter removes
  double edge_keep_rate = 0.8;        // per-language hierarchy edge sampling

  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
  std::size_t test_docs() const { return test_docs_per_category ? test_docs_per_category : docs_per_category; }

  static SyntheticCorpusSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Sparse word-slot distribution.
using SlotDistribution = std::vector<std::pair<std::uint32_t, double>>;

struct SyntheticCorpus {
  SyntheticCorpusSpec spec;
  std::vector<std::string> languages;
  std::vector<std::string> categories;
  ConceptTable concepts;
  LanguageEdges edges;
  std::vector<SupportArticle> articles;
  std::map<std::string, std::vector<LabeledDocument>> train;
  std::map<std::string, std::vector<LabeledDocument>> test;

  // Ground truth of the generative model.
  std::vector<std::string> basic_ids;                   // index -> concept id
  std::vector<SlotDistribution> word_distribution;      // per basic concept, sums to 1
  std::vector<std::vector<std::size_t>> category_pools; // basic concept indices

  std::string word(std::size_t language, std::uint32_t slot) const;
  /// Slot of a (tokenized) word of `language`, if it is one.
  std::optional<std::uint32_t> slot_of(std::size_t language, std::string_view word) const;
  std::size_t language_index(std::string_view language) const;

  /// Training and test pools for the given languages, in a form the
  /// experiment runner accepts.
  ExperimentData experiment_data() const;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

/// Writes concepts.jsonl, hierarchy.jsonl, corpus.jsonl, train_<lang>.jsonl,
/// test_<lang>.jsonl, spec.json and a ready-to-run experiment.json.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

/// Experiment configuration over files written by write_synthetic_corpus,
/// with paths relative to that directory.
ExperimentConfig synthetic_experiment_config(const SyntheticCorpus& corpus, Setup setup,
                                             std::set<std::string> sources,
                                             std::set<std::string> targets);

}  // namespace lifg
