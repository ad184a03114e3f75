#include "lifg/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lifg/error.hpp"
#include "lifg/parallel.hpp"
#include "lifg/rng.hpp"

namespace lifg {

namespace {

using nlohmann::json;

constexpr int kModelVersion = 1;

// Pegasos state with w = scale * v so the shrink step is O(1).
struct ScaledWeights {
  std::vector<double> v;  // last slot is the bias
  double scale = 1.0;

  double dot(const BinaryFeatureVector& x) const {
    double s = v.back();
    for (std::uint32_t f : x.active) s += v[f];
    return scale * s;
  }

  void shrink(double factor) {
    if (factor <= 0.0) {
      std::fill(v.begin(), v.end(), 0.0);
      scale = 1.0;
      return;
    }
    scale *= factor;
    if (scale < 1e-9) normalize();
  }

  void add(const BinaryFeatureVector& x, double step) {
    const double s = step / scale;
    for (std::uint32_t f : x.active) v[f] += s;
    v.back() += s;
  }

  void normalize() {
    for (double& x : v) x *= scale;
    scale = 1.0;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s * scale * scale;
  }
};

}  // namespace

LinearModel::LinearModel(std::vector<std::string> categories, std::size_t dimension,
                         TrainParams params)
    : categories_(std::move(categories)),
      dimension_(dimension),
      params_(params),
      weights_(categories_.size(), std::vector<double>(dimension, 0.0)),
      biases_(categories_.size(), 0.0) {
  if (categories_.empty()) throw InvalidArgument("a model needs at least one category");
}

void LinearModel::set_weight(std::size_t category, std::uint32_t feature, double value) {
  weights_.at(category).at(feature) = value;
}

void LinearModel::set_bias(std::size_t category, double value) { biases_.at(category) = value; }

std::vector<double> LinearModel::scores(const BinaryFeatureVector& x) const {
  if (!x.active.empty() && x.active.back() >= dimension_)
    throw InvalidArgument("feature index " + std::to_string(x.active.back()) +
                          " outside model dimension " + std::to_string(dimension_));
  std::vector<double> out(categories_.size());
  for (std::size_t k = 0; k < categories_.size(); ++k) {
    double s = biases_[k];
    for (std::uint32_t f : x.active) s += weights_[k][f];
    out[k] = s;
  }
  return out;
}

std::size_t LinearModel::predict_index(const BinaryFeatureVector& x) const {
  const auto s = scores(x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k] > s[best]) best = k;
  return best;
}

void LinearModel::save(const std::filesystem::path& path, const std::string& feature_space) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  json per_category = json::array();
  for (std::size_t k = 0; k < categories_.size(); ++k) {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    for (std::uint32_t f = 0; f < dimension_; ++f)
      if (weights_[k][f] != 0.0) {
        indices.push_back(f);
        values.push_back(weights_[k][f]);
      }
    per_category.push_back(
        {{"category", categories_[k]}, {"bias", biases_[k]}, {"indices", indices}, {"values", values}});
  }
  const json model = {{"format", "lifg-linear-model"},
                      {"version", kModelVersion},
                      {"categories", categories_},
                      {"dimension", dimension_},
                      {"feature_space", feature_space},
                      {"lambda", params_.lambda},
                      {"epochs", params_.epochs},
                      {"seed", params_.seed},
                      {"weights", per_category}};
  out << model.dump() << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

LinearModel LinearModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format") != "lifg-linear-model" || j.at("version") != kModelVersion)
      throw DataError(path.string() + ": not a version " + std::to_string(kModelVersion) +
                      " model file");
    TrainParams params;
    params.lambda = j.at("lambda").get<double>();
    params.epochs = j.at("epochs").get<unsigned>();
    params.seed = j.at("seed").get<std::uint64_t>();
    LinearModel model(j.at("categories").get<std::vector<std::string>>(),
                      j.at("dimension").get<std::size_t>(), params);
    const auto& per_category = j.at("weights");
    if (per_category.size() != model.categories_.size())
      throw DataError(path.string() + ": weight vector count differs from category count");
    for (std::size_t k = 0; k < per_category.size(); ++k) {
      const auto& entry = per_category[k];
      model.biases_[k] = entry.at("bias").get<double>();
      const auto indices = entry.at("indices").get<std::vector<std::uint32_t>>();
      const auto values = entry.at("values").get<std::vector<double>>();
      if (indices.size() != values.size())
        throw DataError(path.string() + ": indices and values differ in length");
      for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= model.dimension_) throw DataError(path.string() + ": index out of range");
        model.weights_[k][indices[i]] = values[i];
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

TrainTrace train_traced(std::span<const BinaryFeatureVector> vectors,
                        std::span<const std::size_t> labels,
                        const std::vector<std::string>& categories, std::size_t dimension,
                        const TrainParams& params) {
  if (vectors.size() != labels.size())
    throw InvalidArgument("train: " + std::to_string(vectors.size()) + " vectors but " +
                          std::to_string(labels.size()) + " labels");
  if (!(params.lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  std::vector<std::size_t> per_category(categories.size(), 0);
  for (std::size_t y : labels) {
    if (y >= categories.size()) throw InvalidArgument("label index out of range");
    ++per_category[y];
  }
  for (std::size_t k = 0; k < categories.size(); ++k)
    if (per_category[k] == 0)
      throw DataError("category \"" + categories[k] + "\" has no training examples");
  for (const auto& x : vectors)
    if (!x.active.empty() && x.active.back() >= dimension)
      throw InvalidArgument("training vector index outside dimension " + std::to_string(dimension));

  const std::size_t n = vectors.size();
  std::vector<ScaledWeights> w(categories.size());
  for (auto& wk : w) wk.v.assign(dimension + 1, 0.0);

  TrainTrace trace{LinearModel(categories, dimension, params), {}};
  Rng rng(params.seed);
  std::vector<std::size_t> order(n);
  std::uint64_t t = 0;
  for (unsigned epoch = 0; epoch < params.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    const std::uint64_t t0 = t;
    for (std::size_t k = 0; k < categories.size(); ++k) {
      t = t0;
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (params.lambda * static_cast<double>(t));
        const double y = labels[i] == k ? 1.0 : -1.0;
        const double margin = y * w[k].dot(vectors[i]);
        w[k].shrink(1.0 - eta * params.lambda);
        if (margin < 1.0) w[k].add(vectors[i], eta * y);
      }
    }

    double objective = 0.0;
    for (std::size_t k = 0; k < categories.size(); ++k) {
      double hinge = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double y = labels[i] == k ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - y * w[k].dot(vectors[i]));
      }
      objective += 0.5 * params.lambda * w[k].squared_norm() + hinge / static_cast<double>(n);
    }
    trace.epoch_objective.push_back(objective);
  }

  for (std::size_t k = 0; k < categories.size(); ++k) {
    w[k].normalize();
    for (std::uint32_t f = 0; f < dimension; ++f) trace.model.set_weight(k, f, w[k].v[f]);
    trace.model.set_bias(k, w[k].v.back());
  }
  return trace;
}

LinearModel train(std::span<const BinaryFeatureVector> vectors, std::span<const std::size_t> labels,
                  const std::vector<std::string>& categories, std::size_t dimension,
                  const TrainParams& params) {
  return train_traced(vectors, labels, categories, dimension, params).model;
}

// ----------------------------------------------------------------- evaluation

json EvalReport::to_json() const {
  json per = json::object();
  for (std::size_t k = 0; k < categories.size(); ++k)
    per[categories[k]] = {{"precision", per_category[k].precision},
                          {"recall", per_category[k].recall},
                          {"f1", per_category[k].f1},
                          {"support", per_category[k].support}};
  return {{"accuracy", accuracy}, {"macro_f1", macro_f1},   {"per_category", per},
          {"confusion", confusion}, {"categories", categories}, {"n_test", n_test}};
}

EvalReport score_predictions(const std::vector<std::string>& categories,
                             std::span<const std::size_t> truth,
                             std::span<const std::size_t> predicted) {
  if (truth.empty()) throw InvalidArgument("evaluation needs a nonempty test set");
  if (truth.size() != predicted.size())
    throw InvalidArgument("evaluation: truth and prediction counts differ");
  const std::size_t k = categories.size();
  EvalReport r;
  r.categories = categories;
  r.n_test = truth.size();
  r.confusion.assign(k, std::vector<std::uint64_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= k || predicted[i] >= k) throw InvalidArgument("category index out of range");
    ++r.confusion[truth[i]][predicted[i]];
  }
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += r.confusion[c][c];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n_test);

  r.per_category.resize(k);
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t row = 0, column = 0;
    for (std::size_t o = 0; o < k; ++o) {
      row += r.confusion[c][o];
      column += r.confusion[o][c];
    }
    auto& s = r.per_category[c];
    s.support = row;
    const double tp = static_cast<double>(r.confusion[c][c]);
    s.precision = column == 0 ? 0.0 : tp / static_cast<double>(column);
    s.recall = row == 0 ? 0.0 : tp / static_cast<double>(row);
    s.f1 = s.precision + s.recall == 0.0 ? 0.0
                                         : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    f1_sum += s.f1;
  }
  r.macro_f1 = k == 0 ? 0.0 : f1_sum / static_cast<double>(k);
  return r;
}

EvalReport evaluate(const LinearModel& model, std::span<const BinaryFeatureVector> vectors,
                    std::span<const std::size_t> labels, unsigned workers) {
  if (vectors.size() != labels.size())
    throw InvalidArgument("evaluate: vector and label counts differ");
  std::vector<std::size_t> predicted(vectors.size());
  parallel_for(vectors.size(), workers,
               [&](std::size_t i) { predicted[i] = model.predict_index(vectors[i]); });
  return score_predictions(model.categories(), labels, predicted);
}

}  // namespace lifg
