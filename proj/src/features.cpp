#include "lifg/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "lifg/error.hpp"
#include "lifg/parallel.hpp"

namespace lifg {

namespace {

using nlohmann::json;

constexpr int kManifestVersion = 1;

double entropy_bits(std::span<const std::uint64_t> counts, std::uint64_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

// IG from a 2 x K contingency table given as active-per-class and class totals.
double gain_from_counts(std::span<const std::uint64_t> active, std::span<const std::uint64_t> totals,
                        std::uint64_t n) {
  std::vector<std::uint64_t> inactive(totals.size());
  std::uint64_t n_active = 0;
  for (std::size_t k = 0; k < totals.size(); ++k) {
    inactive[k] = totals[k] - active[k];
    n_active += active[k];
  }
  const std::uint64_t n_inactive = n - n_active;
  const double prior = entropy_bits(totals, n);
  const double p1 = static_cast<double>(n_active) / static_cast<double>(n);
  const double p0 = static_cast<double>(n_inactive) / static_cast<double>(n);
  const double conditional =
      p1 * entropy_bits(active, n_active) + p0 * entropy_bits(inactive, n_inactive);
  return std::max(0.0, prior - conditional);
}

std::vector<std::uint64_t> class_totals(std::span<const std::size_t> labels) {
  const std::size_t k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::uint64_t> totals(k, 0);
  for (std::size_t y : labels) ++totals[y];
  return totals;
}

void check_lengths(std::span<const BinaryFeatureVector> vectors, std::span<const std::size_t> labels) {
  if (vectors.size() != labels.size())
    throw InvalidArgument("information gain: " + std::to_string(vectors.size()) + " vectors but " +
                          std::to_string(labels.size()) + " labels");
  if (vectors.empty()) throw InvalidArgument("information gain of an empty sample");
}

}  // namespace

bool BinaryFeatureVector::contains(std::uint32_t index) const {
  return std::binary_search(active.begin(), active.end(), index);
}

// ---------------------------------------------------------------- FeatureSpace

FeatureSpace::FeatureSpace(std::vector<std::string> ids, FeatureOptions options)
    : ids_(std::move(ids)), options_(options) {
  index_.reserve(ids_.size());
  for (std::uint32_t i = 0; i < ids_.size(); ++i)
    if (!index_.emplace(ids_[i], i).second)
      throw DataError("feature space lists \"" + ids_[i] + "\" twice");
}

std::optional<std::uint32_t> FeatureSpace::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BinaryFeatureVector FeatureSpace::project(const std::set<std::string>& concepts) const {
  BinaryFeatureVector v;
  for (const auto& c : concepts)
    if (auto i = find(c)) v.active.push_back(*i);
  std::sort(v.active.begin(), v.active.end());
  return v;
}

void FeatureSpace::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const json manifest = {{"format", "lifg-feature-space"},
                         {"version", kManifestVersion},
                         {"concepts", ids_},
                         {"k_doc", options_.k_doc},
                         {"m", options_.m},
                         {"meta_features", options_.meta_features},
                         {"n_select", options_.n_select}};
  out << manifest.dump(1) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

FeatureSpace FeatureSpace::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const json manifest = json::parse(in);
    if (manifest.at("format") != "lifg-feature-space" || manifest.at("version") != kManifestVersion)
      throw DataError(path.string() + ": not a version " + std::to_string(kManifestVersion) +
                      " feature-space manifest");
    FeatureOptions options;
    options.k_doc = manifest.at("k_doc").get<std::size_t>();
    options.m = manifest.at("m").get<unsigned>();
    options.meta_features = manifest.at("meta_features").get<bool>();
    options.n_select = manifest.at("n_select").get<std::size_t>();
    return FeatureSpace(manifest.at("concepts").get<std::vector<std::string>>(), options);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------- meta features

std::set<std::string> enrich_with_meta(const Hierarchy& h, const ConceptFeatureSet& basic,
                                       unsigned m) {
  std::set<std::string> out = basic.concepts;
  if (m == 0) return out;
  for (const auto& c : basic.concepts)
    for (NodeId a : ancestors(h, h.concepts().at(c), m)) out.insert(h.concepts().id(a));
  return out;
}

std::set<std::string> filter_meta_features(const Hierarchy& h, const std::set<std::string>& enriched,
                                           const ConceptFeatureSet& basic, unsigned m) {
  std::unordered_map<NodeId, unsigned> covered;
  for (const auto& c : basic.concepts)
    for (NodeId a : ancestors(h, h.concepts().at(c), m)) ++covered[a];

  std::set<std::string> out;
  for (const auto& f : enriched) {
    if (basic.concepts.contains(f)) {
      out.insert(f);
      continue;
    }
    const auto n = h.concepts().find(f);
    if (!n || h.concepts().kind(*n) != ConceptKind::meta) continue;
    if (auto it = covered.find(*n); it != covered.end() && it->second >= 2) out.insert(f);
  }
  return out;
}

std::set<std::string> generate_document_features(const InterpreterSet& interpreters,
                                                 const Hierarchy& h, const LabeledDocument& doc,
                                                 const FeatureOptions& options,
                                                 const Tokenizer& tokenizer) {
  const ConceptFeatureSet basic =
      generate_basic_features(interpreters, doc, options.k_doc, tokenizer);
  if (!options.meta_features || options.m == 0) return basic.concepts;
  return filter_meta_features(h, enrich_with_meta(h, basic, options.m), basic, options.m);
}

// -------------------------------------------------------------- feature space

FeatureSpaceBuild build_feature_space(std::span<const LabeledDocument> training_docs,
                                      const InterpreterSet& interpreters, const Hierarchy& h,
                                      const FeatureOptions& options, const Tokenizer& tokenizer,
                                      unsigned workers) {
  std::vector<std::set<std::string>> per_doc(training_docs.size());
  parallel_for(training_docs.size(), workers, [&](std::size_t i) {
    per_doc[i] = generate_document_features(interpreters, h, training_docs[i], options, tokenizer);
  });
  return assemble_feature_space(per_doc, options);
}

FeatureSpaceBuild assemble_feature_space(std::span<const std::set<std::string>> per_doc,
                                         const FeatureOptions& options) {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::uint32_t> seen;
  for (const auto& features : per_doc)
    for (const auto& f : features)
      if (seen.emplace(f, static_cast<std::uint32_t>(ids.size())).second) ids.push_back(f);

  FeatureSpaceBuild out{FeatureSpace(std::move(ids), options), {}};
  out.vectors.reserve(per_doc.size());
  for (const auto& features : per_doc) out.vectors.push_back(out.space.project(features));
  return out;
}

std::vector<BinaryFeatureVector> map_documents(std::span<const LabeledDocument> docs,
                                               const InterpreterSet& interpreters,
                                               const Hierarchy& h, const FeatureSpace& space,
                                               const Tokenizer& tokenizer, unsigned workers) {
  std::vector<BinaryFeatureVector> out(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) {
    out[i] = space.project(
        generate_document_features(interpreters, h, docs[i], space.options(), tokenizer));
  });
  return out;
}

// ----------------------------------------------------------- information gain

double information_gain(std::span<const BinaryFeatureVector> vectors,
                        std::span<const std::size_t> labels, std::uint32_t coordinate) {
  check_lengths(vectors, labels);
  const auto totals = class_totals(labels);
  std::vector<std::uint64_t> active(totals.size(), 0);
  for (std::size_t i = 0; i < vectors.size(); ++i)
    if (vectors[i].contains(coordinate)) ++active[labels[i]];
  return gain_from_counts(active, totals, vectors.size());
}

std::vector<double> information_gain_all(std::span<const BinaryFeatureVector> vectors,
                                         std::span<const std::size_t> labels,
                                         std::size_t dimension) {
  check_lengths(vectors, labels);
  const auto totals = class_totals(labels);
  const std::size_t k = totals.size();
  std::vector<std::uint64_t> active(dimension * k, 0);
  for (std::size_t i = 0; i < vectors.size(); ++i)
    for (std::uint32_t f : vectors[i].active) {
      if (f >= dimension) throw InvalidArgument("feature index out of range");
      ++active[f * k + labels[i]];
    }
  std::vector<double> gains(dimension);
  for (std::size_t f = 0; f < dimension; ++f)
    gains[f] = gain_from_counts(std::span(active).subspan(f * k, k), totals, vectors.size());
  return gains;
}

FeatureSpaceBuild select_features(const FeatureSpace& space,
                                  std::span<const BinaryFeatureVector> vectors,
                                  std::span<const std::size_t> labels, std::size_t n) {
  if (n < 1) throw InvalidArgument("selection size must be at least 1");
  FeatureOptions options = space.options();
  options.n_select = n;
  if (space.size() <= n) {
    return {FeatureSpace(space.ids(), options), {vectors.begin(), vectors.end()}};
  }
  const auto gains = information_gain_all(vectors, labels, space.size());
  std::vector<std::uint32_t> order(space.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (gains[a] != gains[b]) return gains[a] > gains[b];
                      return space.id(a) < space.id(b);
                    });
  order.resize(n);
  std::sort(order.begin(), order.end());

  std::vector<std::int64_t> remap(space.size(), -1);
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint32_t i = 0; i < order.size(); ++i) {
    remap[order[i]] = i;
    ids.push_back(space.id(order[i]));
  }
  FeatureSpaceBuild out{FeatureSpace(std::move(ids), options), {}};
  out.vectors.reserve(vectors.size());
  for (const auto& v : vectors) {
    BinaryFeatureVector r;
    for (std::uint32_t f : v.active)
      if (remap[f] >= 0) r.active.push_back(static_cast<std::uint32_t>(remap[f]));
    out.vectors.push_back(std::move(r));
  }
  return out;
}

// ------------------------------------------------------------------- vectors

void write_vectors(const std::filesystem::path& path, const std::vector<VectorRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    json j = {{"doc_id", r.doc_id}, {"active", r.vector.active}, {"language", r.language}};
    if (r.label) j["label"] = *r.label;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<VectorRecord> load_vectors(const std::filesystem::path& path, std::size_t dimension) {
  std::vector<VectorRecord> records;
  for_each_json_line(path, [&](const json& j, std::size_t line) {
    try {
      VectorRecord r;
      r.doc_id = j.at("doc_id").get<std::string>();
      r.vector.active = j.at("active").get<std::vector<std::uint32_t>>();
      r.language = j.value("language", std::string());
      if (auto it = j.find("label"); it != j.end() && it->is_string()) r.label = it->get<std::string>();
      std::sort(r.vector.active.begin(), r.vector.active.end());
      r.vector.active.erase(std::unique(r.vector.active.begin(), r.vector.active.end()),
                            r.vector.active.end());
      if (!r.vector.active.empty() && r.vector.active.back() >= dimension)
        throw FormatError(line, "active index outside the feature space");
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw FormatError(line, e.what());
    }
  });
  return records;
}

}  // namespace lifg
