// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bte {

// The four model inputs for one section traversal.
struct FeatureVector {
  int day_of_week = 0;       // Monday = 0
  double start_time_s = 0;   // seconds since local midnight
  int section_id = 1;
  int lup_code = 0;          // CBD=0, IC=1, ISU=2, OSU=3

  static constexpr int kNumFeatures = 4;
  double feature(int index) const;
  void validate() const;  // throws std::out_of_range
};

struct Sample {
  FeatureVector x;
  double target_s = 0.0;
};

struct TrainConfig {
  double alpha = 1.00;            // L1 on leaf weights
  double lambda = 1.00;           // L2 on leaf weights
  double learning_rate = 0.05;
  int n_estimators = 200;
  double colsample_bytree = 0.60;
  int max_depth = 3;
  double min_child_weight = 1.0;  // minimum hessian sum per child
  uint64_t rng_seed = 42;
  // Parallel and serial split search are bit-identical; the serial path is
  // the reference implementation.
  bool parallel_split_search = true;
};

struct TreeNode {
  int feature = -1;       // -1 marks a leaf
  double threshold = 0.0;  // go left iff feature value < threshold
  int left = -1;
  int right = -1;
  double weight = 0.0;    // leaf weight (pre-shrinkage)

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root
  double evaluate(const FeatureVector& x) const;
};

struct BoostedForest {
  double base_score = 0.0;
  TrainConfig config;
  std::vector<RegressionTree> trees;

  // base_score + learning_rate * sum of tree outputs
  double predict(const FeatureVector& x) const;
};

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stage-wise training with exact greedy split search; per-round training MSE
// optionally collected into `round_mse`.
BoostedForest fit(std::span<const Sample> dataset, const TrainConfig& config,
                  std::vector<double>* round_mse = nullptr);

// Versioned JSON model artifact; floats serialize round-trip exact.
std::string save_model(const BoostedForest& forest);
BoostedForest load_model(const std::string& artifact);

namespace gbt_detail {

// Soft-thresholded gradient sum: sign(G) * max(|G| - alpha, 0).
double soft_threshold(double g_sum, double alpha);
double leaf_weight(double g_sum, double h_sum, double alpha, double lambda);
double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double alpha, double lambda);

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best split over the given rows and candidate features. Ties break on lowest
// feature index then smallest threshold, so the result is independent of row
// order. Serial and OpenMP variants produce identical bits.
std::optional<SplitChoice> find_best_split_serial(
    std::span<const Sample> dataset, std::span<const int> rows,
    std::span<const double> gradients, std::span<const int> features,
    const TrainConfig& config);
std::optional<SplitChoice> find_best_split_parallel(
    std::span<const Sample> dataset, std::span<const int> rows,
    std::span<const double> gradients, std::span<const int> features,
    const TrainConfig& config);

// Features sampled for tree `tree_index`: ceil(colsample * 4) distinct
// indices from mt19937_64 seeded by rng_seed and tree index, ascending.
std::vector<int> sample_features(const TrainConfig& config, int tree_index);

}  // namespace gbt_detail

}  // namespace bte
