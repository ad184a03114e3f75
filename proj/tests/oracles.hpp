#pragma once

// Reference implementations used to check the library. Each one computes the
// same quantity along a different, deliberately naive route.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lifg/ontology.hpp"
#include "lifg/rng.hpp"
#include "lifg/synthetic.hpp"
#include "lifg/tokenizer.hpp"

namespace lifg::oracle {

/// Materializes the full concept x term TF.IDF matrix and averages the term
/// rows of every token occurrence.
inline std::map<std::string, double> dense_esa(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& concept_tokens,
    const std::vector<std::string>& doc) {
  std::vector<std::string> terms;
  for (const auto& [c, toks] : concept_tokens) terms.insert(terms.end(), toks.begin(), toks.end());
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  const std::size_t n = concept_tokens.size(), v = terms.size();
  auto col = [&](const std::string& t) -> std::optional<std::size_t> {
    auto it = std::lower_bound(terms.begin(), terms.end(), t);
    if (it == terms.end() || *it != t) return std::nullopt;
    return static_cast<std::size_t>(it - terms.begin());
  };
  std::vector<std::vector<double>> tf(n, std::vector<double>(v, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& t : concept_tokens[i].second) tf[i][*col(t)] += 1.0;
  std::vector<double> idf(v, 0.0);
  for (std::size_t j = 0; j < v; ++j) {
    double df = 0;
    for (std::size_t i = 0; i < n; ++i) df += tf[i][j] > 0 ? 1 : 0;
    idf[j] = std::log(static_cast<double>(n) / df);
  }
  std::vector<double> acc(n, 0.0);
  for (const auto& t : doc)
    if (auto j = col(t))
      for (std::size_t i = 0; i < n; ++i) acc[i] += tf[i][*j] * idf[*j];
  std::map<std::string, double> out;
  if (doc.empty()) return out;
  for (std::size_t i = 0; i < n; ++i)
    if (acc[i] != 0.0) out[concept_tokens[i].first] = acc[i] / static_cast<double>(doc.size());
  return out;
}

/// Counts directed paths by explicit enumeration.
inline std::uint64_t enumerate_paths(const Hierarchy& h, NodeId from, NodeId to) {
  if (from == to) return 1;
  std::uint64_t total = 0;
  for (NodeId c : h.children(from)) total += enumerate_paths(h, c, to);
  return total;
}

/// Mutual information of a binary feature and the label, from the joint
/// distribution: sum p(x,y) log2(p(x,y) / (p(x) p(y))).
inline double mutual_information(const std::vector<bool>& active, const std::vector<int>& labels) {
  const double n = static_cast<double>(labels.size());
  std::map<std::pair<bool, int>, double> joint;
  std::map<bool, double> px;
  std::map<int, double> py;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    joint[{active[i], labels[i]}] += 1;
    px[active[i]] += 1;
    py[labels[i]] += 1;
  }
  double mi = 0.0;
  for (const auto& [xy, c] : joint) {
    const double pxy = c / n;
    mi += pxy * std::log2(pxy / ((px[xy.first] / n) * (py[xy.second] / n)));
  }
  return mi;
}

/// Ancestors within exactly-BFS layers, recomputed from scratch per depth.
inline std::set<NodeId> ancestors_by_layers(const Hierarchy& h, NodeId c, unsigned depth) {
  std::set<NodeId> out, frontier{c};
  for (unsigned d = 0; d < depth; ++d) {
    std::set<NodeId> next;
    for (NodeId x : frontier)
      for (NodeId p : h.parents(x)) next.insert(p);
    out.insert(next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

/// |S(a,l)| with multiplicity, by enumerating paths to every basic holder.
inline std::uint64_t support_size_by_paths(const Hierarchy& h, const SupportIndex& idx, NodeId a,
                                           const std::string& language) {
  std::uint64_t total = 0;
  for (NodeId b : idx.basic_nodes())
    total += enumerate_paths(h, a, b) * idx.articles(b, language).size();
  return total;
}

struct DepthScan {
  std::optional<unsigned> depth;  // minimal depth reaching p
  std::vector<std::uint64_t> counts;  // counts[i] for i = 0..h.size()
};

/// Scans every depth 0..|nodes| and records the ancestor document total.
inline DepthScan depth_scan(const Hierarchy& h, const SupportIndex& idx, NodeId c,
                            const std::string& language, std::uint64_t p) {
  DepthScan scan;
  for (unsigned i = 0; i <= h.size(); ++i) {
    std::uint64_t total = 0;
    for (NodeId a : ancestors_by_layers(h, c, i)) total += support_size_by_paths(h, idx, a, language);
    scan.counts.push_back(total);
    if (!scan.depth && total >= p) scan.depth = i;
  }
  return scan;
}

/// Random DAG: nodes 0..n_meta-1 are meta, the rest basic; an edge i -> j
/// (i meta, i < j) appears with probability `density`.
struct RandomDag {
  ConceptTable concepts;
  std::vector<Edge> edges;
  std::vector<std::string> ids;
};

inline RandomDag random_dag(Rng& rng, std::size_t n, std::size_t n_meta, double density) {
  RandomDag d;
  for (std::size_t i = 0; i < n; ++i) {
    d.ids.push_back((i < n_meta ? "m" : "b") + std::string(i < 10 ? "0" : "") + std::to_string(i));
    d.concepts.add(d.ids.back(), i < n_meta ? ConceptKind::meta : ConceptKind::basic);
  }
  for (std::size_t i = 0; i < n_meta; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(density)) d.edges.push_back({d.ids[i], d.ids[j]});
  return d;
}

/// Posterior-maximizing classifier for the synthetic generative model. It
/// sums the document likelihood over every concept subset a category could
/// have drawn (uniform prior over categories and subsets).
class SyntheticBayes {
 public:
  explicit SyntheticBayes(const SyntheticCorpus& corpus) : corpus_(corpus) {
    const auto& spec = corpus.spec;
    dense_.assign(corpus.word_distribution.size(),
                  std::vector<double>(spec.vocab_size_per_language, 0.0));
    for (std::size_t c = 0; c < corpus.word_distribution.size(); ++c)
      for (const auto& [slot, prob] : corpus.word_distribution[c]) dense_[c][slot] = prob;
    for (const auto& pool : corpus.category_pools) {
      std::vector<std::vector<std::size_t>> subsets;
      std::vector<std::size_t> current;
      std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (current.size() == spec.concepts_per_doc) {
          subsets.push_back(current);
          return;
        }
        for (std::size_t i = start; i < pool.size(); ++i) {
          current.push_back(pool[i]);
          rec(i + 1);
          current.pop_back();
        }
      };
      rec(0);
      subsets_.push_back(std::move(subsets));
    }
  }

  std::size_t classify(const LabeledDocument& doc) const {
    const auto& spec = corpus_.spec;
    const std::size_t lang = corpus_.language_index(doc.language);
    std::vector<std::uint32_t> slots;
    for (const auto& tok : tokenize(doc.text, doc.language).tokens)
      if (auto s = corpus_.slot_of(lang, tok)) slots.push_back(*s);
    const double uniform = spec.noise_rate / static_cast<double>(spec.vocab_size_per_language);
    const double k = static_cast<double>(spec.concepts_per_doc);
    std::size_t best = 0;
    double best_score = -INFINITY;
    for (std::size_t cat = 0; cat < subsets_.size(); ++cat) {
      std::vector<double> logs;
      for (const auto& subset : subsets_[cat]) {
        double lp = 0.0;
        for (std::uint32_t s : slots) {
          double mix = 0.0;
          for (std::size_t c : subset) mix += dense_[c][s];
          lp += std::log(uniform + (1.0 - spec.noise_rate) * mix / k);
        }
        logs.push_back(lp);
      }
      const double mx = *std::max_element(logs.begin(), logs.end());
      double sum = 0.0;
      for (double l : logs) sum += std::exp(l - mx);
      const double score = mx + std::log(sum);
      if (score > best_score) {
        best_score = score;
        best = cat;
      }
    }
    return best;
  }

  double accuracy(const std::vector<LabeledDocument>& docs) const {
    std::size_t correct = 0;
    for (const auto& d : docs)
      if (corpus_.categories[classify(d)] == *d.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(docs.size());
  }

 private:
  const SyntheticCorpus& corpus_;
  std::vector<std::vector<double>> dense_;
  std::vector<std::vector<std::vector<std::size_t>>> subsets_;
};

}  // namespace lifg::oracle
