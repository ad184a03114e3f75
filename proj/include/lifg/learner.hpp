#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifg/features.hpp"

namespace lifg {

struct TrainParams {
  double lambda = 1e-4;
  unsigned epochs = 20;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainParams&, const TrainParams&) = default;
};

/// One-vs-rest linear classifier over a FeatureSpace. Scores are
/// <w_k, x> + b_k; the prediction is the highest score, ties to the category
/// declared first.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(std::vector<std::string> categories, std::size_t dimension, TrainParams params);

  const std::vector<std::string>& categories() const noexcept { return categories_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const TrainParams& params() const noexcept { return params_; }

  std::span<const double> weights(std::size_t category) const { return weights_.at(category); }
  double bias(std::size_t category) const { return biases_.at(category); }
  void set_weight(std::size_t category, std::uint32_t feature, double value);
  void set_bias(std::size_t category, double value);

  /// Throws InvalidArgument if an active index is outside the model dimension.
  std::vector<double> scores(const BinaryFeatureVector& x) const;
  std::size_t predict_index(const BinaryFeatureVector& x) const;
  const std::string& predict(const BinaryFeatureVector& x) const {
    return categories_[predict_index(x)];
  }

  /// `feature_space` records which manifest the coordinates refer to.
  void save(const std::filesystem::path& path, const std::string& feature_space = {}) const;
  static LinearModel load(const std::filesystem::path& path);

  friend bool operator==(const LinearModel&, const LinearModel&) = default;

 private:
  std::vector<std::string> categories_;
  std::size_t dimension_ = 0;
  TrainParams params_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> biases_;
};

struct TrainTrace {
  LinearModel model;
  /// Regularized hinge objective, summed over categories, after each epoch.
  std::vector<double> epoch_objective;
};

/// Pegasos stochastic subgradient descent on the L2-regularized hinge loss,
/// one binary problem per category. Step size 1/(lambda t); the bias is an
/// extra always-on coordinate. Every epoch visits the examples in a fresh
/// seeded permutation shared by all categories.
///
/// `labels` are indices into `categories`; every category needs an example.
TrainTrace train_traced(std::span<const BinaryFeatureVector> vectors,
                        std::span<const std::size_t> labels,
                        const std::vector<std::string>& categories, std::size_t dimension,
                        const TrainParams& params);

LinearModel train(std::span<const BinaryFeatureVector> vectors, std::span<const std::size_t> labels,
                  const std::vector<std::string>& categories, std::size_t dimension,
                  const TrainParams& params);

struct CategoryScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  std::vector<std::string> categories;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<CategoryScores> per_category;
  /// confusion[true][predicted]
  std::vector<std::vector<std::uint64_t>> confusion;
  std::uint64_t n_test = 0;

  nlohmann::json to_json() const;
};

/// Metrics from true and predicted category indices. Throws on an empty set.
EvalReport score_predictions(const std::vector<std::string>& categories,
                             std::span<const std::size_t> truth,
                             std::span<const std::size_t> predicted);

EvalReport evaluate(const LinearModel& model, std::span<const BinaryFeatureVector> vectors,
                    std::span<const std::size_t> labels, unsigned workers = 1);

}  // namespace lifg
