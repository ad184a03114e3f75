#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lifg/corpus.hpp"
#include "lifg/ontology.hpp"
#include "lifg/tokenizer.hpp"

namespace lifg {

/// Term counts of one concept's pseudo-document.
struct ConceptDocument {
  std::string concept_id;
  TermCounts counts;
};

struct Posting {
  std::uint32_t concept_index;  // into SemanticInterpreter::concept_universe()
  double weight;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Sparse concept weights, ascending by concept id, no zero entries.
struct SemanticVector {
  std::vector<std::pair<std::string, double>> entries;

  double weight(std::string_view concept_id) const;
  bool empty() const noexcept { return entries.empty(); }
  friend bool operator==(const SemanticVector&, const SemanticVector&) = default;
};

/// Output of one language-specific feature generator: the document's top
/// basic concepts.
struct ConceptFeatureSet {
  std::set<std::string> concepts;
  std::string source_language;

  friend bool operator==(const ConceptFeatureSet&, const ConceptFeatureSet&) = default;
};

/// Explicit semantic analysis index for one language: the concept-by-term
/// TF.IDF matrix stored inverted as per-term posting lists.
///
/// With N concepts, tf(w,c) the raw count of w in c's pseudo-document and
/// df(w) the number of pseudo-documents containing w, the weight of (w,c) is
/// tf(w,c) * ln(N / df(w)). Postings are sorted by descending weight, then
/// ascending concept id, and truncated to the k_term strongest concepts.
/// Terms present in every pseudo-document have zero idf and no postings.
class SemanticInterpreter {
 public:
  SemanticInterpreter() = default;

  /// Throws InvalidArgument for k_term < 1 and DataError for duplicate
  /// concept ids.
  static SemanticInterpreter build(std::string language, std::vector<ConceptDocument> documents,
                                   std::size_t k_term);

  const std::string& language() const noexcept { return language_; }
  std::size_t doc_count() const noexcept { return concepts_.size(); }
  std::size_t k_term() const noexcept { return k_term_; }
  /// Ascending by id; Posting::concept_index points into this list.
  std::span<const std::string> concept_universe() const noexcept { return concepts_; }

  std::uint64_t df(std::string_view term) const;
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t vocabulary_size() const noexcept { return df_.size(); }
  std::size_t indexed_terms() const noexcept { return index_.size(); }

  /// Versioned binary format; load(save(x)) answers every query identically.
  void save(const std::filesystem::path& path) const;
  static SemanticInterpreter load(const std::filesystem::path& path);

 private:
  std::string language_;
  std::size_t k_term_ = 1;
  std::vector<std::string> concepts_;
  std::unordered_map<std::string, std::uint64_t> df_;
  std::unordered_map<std::string, std::vector<Posting>> index_;
};

using InterpreterSet = std::map<std::string, SemanticInterpreter, std::less<>>;

/// Collects the pseudo-document of each concept in `language`: the tokenized
/// texts of its real articles, or its virtual count table when it has none.
/// Throws DataError for a concept without any support.
std::vector<ConceptDocument> collect_concept_documents(const ConceptTable& concepts,
                                                       const SupportIndex& idx,
                                                       const std::string& language,
                                                       std::span<const NodeId> retained,
                                                       const Tokenizer& tokenizer,
                                                       unsigned workers = 1);

SemanticInterpreter build_interpreter(const ConceptTable& concepts, const SupportIndex& idx,
                                      const std::string& language,
                                      std::span<const NodeId> retained, std::size_t k_term,
                                      const Tokenizer& tokenizer, unsigned workers = 1);

/// Centroid of the word vectors of every token occurrence. Unknown tokens
/// count in the denominator but add nothing.
SemanticVector interpret(const SemanticInterpreter& si, const TokenStream& doc);

/// The k_doc heaviest concepts, ties to the smaller id.
ConceptFeatureSet top_k_features(const SemanticVector& v, std::size_t k_doc,
                                 std::string_view language);

/// Dispatches to the interpreter of the document's language.
ConceptFeatureSet generate_basic_features(const InterpreterSet& interpreters,
                                          const LabeledDocument& doc, std::size_t k_doc,
                                          const Tokenizer& tokenizer);

}  // namespace lifg
