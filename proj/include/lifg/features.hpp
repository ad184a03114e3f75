#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lifg/corpus.hpp"
#include "lifg/interpreter.hpp"
#include "lifg/ontology.hpp"
#include "lifg/tokenizer.hpp"

namespace lifg {

struct FeatureOptions {
  std::size_t k_doc = 100;
  unsigned m = 3;             // hierarchy levels of meta-features above each basic feature
  bool meta_features = true;
  std::size_t n_select = 20000;
};

/// Active coordinates of a binary vector, ascending and unique.
struct BinaryFeatureVector {
  std::vector<std::uint32_t> active;

  bool contains(std::uint32_t index) const;
  friend bool operator==(const BinaryFeatureVector&, const BinaryFeatureVector&) = default;
};

/// The ordered global feature space: one coordinate per concept (basic or
/// meta) generated for the training documents.
class FeatureSpace {
 public:
  FeatureSpace() = default;
  /// Throws DataError on duplicate ids.
  FeatureSpace(std::vector<std::string> ids, FeatureOptions options);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::string& id(std::uint32_t index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::optional<std::uint32_t> find(const std::string& id) const;
  const FeatureOptions& options() const noexcept { return options_; }

  /// Concepts outside the space are dropped.
  BinaryFeatureVector project(const std::set<std::string>& concepts) const;

  void save(const std::filesystem::path& path) const;
  static FeatureSpace load(const std::filesystem::path& path);

  friend bool operator==(const FeatureSpace& a, const FeatureSpace& b) {
    return a.ids_ == b.ids_;
  }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::uint32_t> index_;
  FeatureOptions options_;
};

/// basic plus every ancestor within m edges of a basic feature.
std::set<std::string> enrich_with_meta(const Hierarchy& h, const ConceptFeatureSet& basic,
                                       unsigned m);

/// Keeps every basic feature, and a meta feature only when it lies within m
/// edges above at least two distinct basic features.
std::set<std::string> filter_meta_features(const Hierarchy& h, const std::set<std::string>& enriched,
                                           const ConceptFeatureSet& basic, unsigned m);

/// Basic features, then (if enabled) enrichment and the two-parent filter.
std::set<std::string> generate_document_features(const InterpreterSet& interpreters,
                                                 const Hierarchy& h, const LabeledDocument& doc,
                                                 const FeatureOptions& options,
                                                 const Tokenizer& tokenizer);

struct FeatureSpaceBuild {
  FeatureSpace space;
  std::vector<BinaryFeatureVector> vectors;
};

/// Union of the training documents' features, ordered by first appearance
/// (document order, then ascending id within a document).
FeatureSpaceBuild build_feature_space(std::span<const LabeledDocument> training_docs,
                                      const InterpreterSet& interpreters, const Hierarchy& h,
                                      const FeatureOptions& options, const Tokenizer& tokenizer,
                                      unsigned workers = 1);

/// The same, from feature sets already generated per document.
FeatureSpaceBuild assemble_feature_space(std::span<const std::set<std::string>> per_doc,
                                         const FeatureOptions& options);

/// Generates features for documents and projects them onto an existing space.
std::vector<BinaryFeatureVector> map_documents(std::span<const LabeledDocument> docs,
                                               const InterpreterSet& interpreters,
                                               const Hierarchy& h, const FeatureSpace& space,
                                               const Tokenizer& tokenizer, unsigned workers = 1);

/// Information gain (bits) of one binary coordinate about the labels.
/// `labels` are category indices.
double information_gain(std::span<const BinaryFeatureVector> vectors,
                        std::span<const std::size_t> labels, std::uint32_t coordinate);

/// Information gain of every coordinate in [0, dimension), in one pass.
std::vector<double> information_gain_all(std::span<const BinaryFeatureVector> vectors,
                                         std::span<const std::size_t> labels,
                                         std::size_t dimension);

/// Keeps the n coordinates of highest information gain (ties to the smaller
/// concept id), preserving their relative order, and reprojects the vectors.
FeatureSpaceBuild select_features(const FeatureSpace& space,
                                  std::span<const BinaryFeatureVector> vectors,
                                  std::span<const std::size_t> labels, std::size_t n);

struct VectorRecord {
  std::string doc_id;
  BinaryFeatureVector vector;
  std::optional<std::string> label;
  std::string language;
};

void write_vectors(const std::filesystem::path& path, const std::vector<VectorRecord>& records);
std::vector<VectorRecord> load_vectors(const std::filesystem::path& path, std::size_t dimension);

}  // namespace lifg
