#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lifg/error.hpp"
#include "lifg/ontology.hpp"
#include "lifg/tokenizer.hpp"

namespace lifg {

struct VirtualDocParams {
  std::uint64_t p = 10;   // support documents required among the ancestors
  std::size_t t = 200;    // prominent terms taken from each ancestor
};

/// Raised when the whole ancestry of a concept holds fewer than p documents.
class InsufficientSupport : public DataError {
 public:
  InsufficientSupport(const std::string& concept_id, std::uint64_t max_count, std::uint64_t p)
      : DataError("ancestors of \"" + concept_id + "\" hold " + std::to_string(max_count) +
                  " support documents, " + std::to_string(p) + " required"),
        max_count_(max_count) {}

  std::uint64_t max_count() const noexcept { return max_count_; }

 private:
  std::uint64_t max_count_;
};

using RankedTerms = std::vector<std::pair<std::string, std::uint64_t>>;

/// Smallest i such that the ancestors within i edges of `c` hold at least p
/// support documents in `language`, counted with multiplicity. `sizes` is
/// support_sizes() for that language.
unsigned find_ancestor_depth(const Hierarchy& h, std::span<const std::uint64_t> sizes, NodeId c,
                             std::uint64_t p);
unsigned find_ancestor_depth(const Hierarchy& h, const SupportIndex& idx, NodeId c,
                             const std::string& language, std::uint64_t p);

/// The t terms with the highest total count over a multiset of articles
/// (counts scaled by multiplicity), ties to the smaller term.
RankedTerms prominent_terms(std::span<const WeightedArticle> docs, std::size_t t,
                            const std::string& language, const Tokenizer& tokenizer);

/// Builds count tables for concepts lacking support in one language. Reads
/// real articles only, so the result does not depend on construction order.
class VirtualDocumentBuilder {
 public:
  VirtualDocumentBuilder(const Hierarchy& h, const SupportIndex& idx, std::string language,
                         VirtualDocParams params, const Tokenizer& tokenizer);

  /// Throws InvalidArgument if `c` has real support in the language and
  /// InsufficientSupport if no depth reaches p documents. Thread-safe.
  TermCountTable construct(NodeId c) const;

  unsigned depth(NodeId c) const;
  const std::vector<std::uint64_t>& sizes() const noexcept { return sizes_; }

 private:
  const RankedTerms& ancestor_terms(NodeId ancestor) const;

  const Hierarchy& h_;
  const SupportIndex& idx_;
  std::string language_;
  VirtualDocParams params_;
  const Tokenizer& tokenizer_;
  std::vector<std::uint64_t> sizes_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<NodeId, RankedTerms> cache_;
};

TermCountTable construct_virtual_document(const Hierarchy& h, const SupportIndex& idx, NodeId c,
                                          const std::string& language, VirtualDocParams params,
                                          const Tokenizer& tokenizer);

struct VirtualDocRecord {
  std::string concept_id;
  std::string language;
  TermCountTable table;
};

struct VirtualDocOutcome {
  std::vector<VirtualDocRecord> constructed;
  /// Concepts whose ancestry could not supply p documents, with the reason.
  std::vector<std::pair<std::string, std::string>> failed;
};

/// Constructs virtual documents for every concept of `targets` that has no
/// real support in `language`, and installs them into `idx`.
VirtualDocOutcome add_virtual_documents(const Hierarchy& h, SupportIndex& idx,
                                        const std::string& language,
                                        std::span<const NodeId> targets, VirtualDocParams params,
                                        const Tokenizer& tokenizer, unsigned workers = 1);

void write_virtual_documents(const std::filesystem::path& path,
                             const std::vector<VirtualDocRecord>& records);
std::vector<VirtualDocRecord> load_virtual_documents(const std::filesystem::path& path);

}  // namespace lifg
