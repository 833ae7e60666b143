// SPDX-License-Identifier: Apache-2.0
#include "bte/boosted_trees.hpp"

#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"

namespace bte {

using nlohmann::json;

namespace {
constexpr int kModelFormatVersion = 1;
}

double FeatureVector::feature(int index) const {
  switch (index) {
    case 0: return static_cast<double>(day_of_week);
    case 1: return start_time_s;
    case 2: return static_cast<double>(section_id);
    case 3: return static_cast<double>(lup_code);
  }
  throw std::out_of_range("feature index out of range");
}

void FeatureVector::validate() const {
  if (day_of_week < 0 || day_of_week > 6)
    throw std::out_of_range("day_of_week out of range");
  if (start_time_s < 0 || start_time_s >= 86400)
    throw std::out_of_range("start_time_s out of range");
  if (section_id < 1) throw std::out_of_range("section_id out of range");
  if (lup_code < 0 || lup_code > 3)
    throw std::out_of_range("lup_code out of range");
}

double RegressionTree::evaluate(const FeatureVector& x) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = x.feature(n.feature) < n.threshold ? n.left : n.right;
  }
  return nodes[node].weight;
}

double BoostedForest::predict(const FeatureVector& x) const {
  x.validate();
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.evaluate(x);
  return base_score + config.learning_rate * sum;
}

namespace gbt_detail {

double soft_threshold(double g_sum, double alpha) {
  if (g_sum > alpha) return g_sum - alpha;
  if (g_sum < -alpha) return g_sum + alpha;
  return 0.0;
}

double leaf_weight(double g_sum, double h_sum, double alpha, double lambda) {
  return -soft_threshold(g_sum, alpha) / (h_sum + lambda);
}

namespace {
double score_term(double g, double h, double alpha, double lambda) {
  double s = soft_threshold(g, alpha);
  return s * s / (h + lambda);
}
}  // namespace

double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double alpha, double lambda) {
  return 0.5 * (score_term(g_left, h_left, alpha, lambda) +
                score_term(g_right, h_right, alpha, lambda) -
                score_term(g_left + g_right, h_left + h_right, alpha, lambda));
}

std::vector<int> sample_features(const TrainConfig& config, int tree_index) {
  int k = static_cast<int>(
      std::ceil(config.colsample_bytree * FeatureVector::kNumFeatures));
  k = std::clamp(k, 1, FeatureVector::kNumFeatures);
  std::mt19937_64 rng(config.rng_seed +
                      0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(tree_index) + 1));
  std::vector<int> pool(FeatureVector::kNumFeatures);
  std::iota(pool.begin(), pool.end(), 0);
  // Fisher-Yates with explicit rejection sampling; uniform_int_distribution
  // is implementation-defined and would break cross-platform reproducibility.
  auto bounded = [&rng](uint64_t n) {
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = rng();
    } while (v >= limit);
    return v % n;
  };
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(bounded(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> chosen(pool.begin(), pool.begin() + k);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

namespace {

struct FeatureScan {
  // Sorted feature values and gradient prefix sums for one node's rows.
  std::vector<double> values;    // sorted ascending
  std::vector<double> g_prefix;  // g_prefix[i] = sum of g over first i rows
};

FeatureScan scan_feature(std::span<const Sample> dataset,
                         std::span<const int> rows,
                         std::span<const double> gradients, int feature,
                         std::vector<int>& order_buf) {
  order_buf.assign(rows.begin(), rows.end());
  std::stable_sort(order_buf.begin(), order_buf.end(),
                   [&](int a, int b) {
                     return dataset[a].x.feature(feature) <
                            dataset[b].x.feature(feature);
                   });
  FeatureScan scan;
  scan.values.resize(order_buf.size());
  scan.g_prefix.resize(order_buf.size() + 1);
  scan.g_prefix[0] = 0.0;
  for (size_t i = 0; i < order_buf.size(); ++i) {
    scan.values[i] = dataset[order_buf[i]].x.feature(feature);
    scan.g_prefix[i + 1] = scan.g_prefix[i] + gradients[order_buf[i]];
  }
  return scan;
}

template <bool Parallel>
std::optional<SplitChoice> find_best_split_impl(
    std::span<const Sample> dataset, std::span<const int> rows,
    std::span<const double> gradients, std::span<const int> features,
    const TrainConfig& config) {
  const size_t n = rows.size();
  if (n < 2) return std::nullopt;

  std::optional<SplitChoice> best;
  std::vector<int> order_buf;
  std::vector<double> gains;
  std::vector<size_t> cut_positions;  // split point: first i rows go left

  for (int feature : features) {
    FeatureScan scan = scan_feature(dataset, rows, gradients, feature,
                                    order_buf);
    cut_positions.clear();
    for (size_t i = 1; i < n; ++i)
      if (scan.values[i] > scan.values[i - 1]) cut_positions.push_back(i);
    if (cut_positions.empty()) continue;

    gains.assign(cut_positions.size(), -1.0);
    const double g_total = scan.g_prefix[n];
    const double h_total = static_cast<double>(n);  // squared error: h = 1

#pragma omp parallel for if (Parallel) schedule(static)
    for (long c = 0; c < static_cast<long>(cut_positions.size()); ++c) {
      size_t i = cut_positions[c];
      double h_left = static_cast<double>(i);
      double h_right = h_total - h_left;
      if (h_left < config.min_child_weight ||
          h_right < config.min_child_weight)
        continue;
      double g_left = scan.g_prefix[i];
      gains[c] = split_gain(g_left, h_left, g_total - g_left, h_right,
                            config.alpha, config.lambda);
    }

    // Serial argmax keeps the reduction deterministic. Features ascend and
    // thresholds ascend within a feature, so strict > implements the
    // (lowest feature, smallest threshold) tie-break.
    for (size_t c = 0; c < cut_positions.size(); ++c) {
      if (gains[c] <= 0.0) continue;
      if (!best || gains[c] > best->gain) {
        size_t i = cut_positions[c];
        best = SplitChoice{feature,
                           0.5 * (scan.values[i - 1] + scan.values[i]),
                           gains[c]};
      }
    }
  }
  return best;
}

}  // namespace

std::optional<SplitChoice> find_best_split_serial(
    std::span<const Sample> dataset, std::span<const int> rows,
    std::span<const double> gradients, std::span<const int> features,
    const TrainConfig& config) {
  return find_best_split_impl<false>(dataset, rows, gradients, features,
                                     config);
}

std::optional<SplitChoice> find_best_split_parallel(
    std::span<const Sample> dataset, std::span<const int> rows,
    std::span<const double> gradients, std::span<const int> features,
    const TrainConfig& config) {
  return find_best_split_impl<true>(dataset, rows, gradients, features,
                                    config);
}

}  // namespace gbt_detail

namespace {

using gbt_detail::SplitChoice;

struct TreeBuilder {
  std::span<const Sample> dataset;
  const TrainConfig& config;
  std::span<const double> gradients;
  std::span<const int> features;
  RegressionTree tree;
  std::vector<std::pair<int, double>> leaf_updates;  // (row, weight)

  int build(std::vector<int> rows, int depth) {
    double g_sum = 0.0;
    for (int r : rows) g_sum += gradients[r];
    double h_sum = static_cast<double>(rows.size());

    std::optional<SplitChoice> split;
    if (depth < config.max_depth) {
      split = config.parallel_split_search
                  ? gbt_detail::find_best_split_parallel(
                        dataset, rows, gradients, features, config)
                  : gbt_detail::find_best_split_serial(
                        dataset, rows, gradients, features, config);
    }

    int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (!split) {
      double w = gbt_detail::leaf_weight(g_sum, h_sum, config.alpha,
                                         config.lambda);
      tree.nodes[node_id].weight = w;
      for (int r : rows) leaf_updates.emplace_back(r, w);
      return node_id;
    }

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      if (dataset[r].x.feature(split->feature) < split->threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[node_id].feature = split->feature;
    tree.nodes[node_id].threshold = split->threshold;
    int left = build(std::move(left_rows), depth + 1);
    int right = build(std::move(right_rows), depth + 1);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

}  // namespace

BoostedForest fit(std::span<const Sample> dataset, const TrainConfig& config,
                  std::vector<double>* round_mse) {
  if (dataset.empty()) throw TrainError("empty dataset");
  for (const auto& s : dataset) {
    if (!std::isfinite(s.target_s)) throw TrainError("non-finite target");
    s.x.validate();
  }

  // Canonical row order: lexicographic on (features, target). Identical rows
  // become adjacent and interchangeable, which makes every gradient sum and
  // hence the whole fit independent of the caller's row order.
  std::vector<Sample> rows_sorted(dataset.begin(), dataset.end());
  std::sort(rows_sorted.begin(), rows_sorted.end(),
            [](const Sample& a, const Sample& b) {
              for (int f = 0; f < FeatureVector::kNumFeatures; ++f) {
                double va = a.x.feature(f), vb = b.x.feature(f);
                if (va != vb) return va < vb;
              }
              return a.target_s < b.target_s;
            });
  std::span<const Sample> data(rows_sorted);
  const size_t n = data.size();

  BoostedForest forest;
  forest.config = config;
  double target_sum = 0.0;
  for (const auto& s : data) target_sum += s.target_s;
  forest.base_score = target_sum / static_cast<double>(n);

  std::vector<double> predictions(n, forest.base_score);
  std::vector<double> gradients(n);
  std::vector<int> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);

  if (round_mse) round_mse->clear();
  for (int t = 0; t < config.n_estimators; ++t) {
    for (size_t i = 0; i < n; ++i)
      gradients[i] = predictions[i] - data[i].target_s;

    std::vector<int> features = gbt_detail::sample_features(config, t);
    TreeBuilder builder{data, config, gradients, features, {}, {}};
    builder.build(all_rows, 0);
    for (const auto& [row, weight] : builder.leaf_updates)
      predictions[row] += config.learning_rate * weight;
    forest.trees.push_back(std::move(builder.tree));

    if (round_mse) {
      double sq = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double e = predictions[i] - data[i].target_s;
        sq += e * e;
      }
      round_mse->push_back(sq / static_cast<double>(n));
    }
  }
  return forest;
}

std::string save_model(const BoostedForest& forest) {
  json trees = json::array();
  for (const auto& tree : forest.trees) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
      nodes.push_back(json{{"f", node.feature},
                           {"t", node.threshold},
                           {"l", node.left},
                           {"r", node.right},
                           {"w", node.weight}});
    }
    trees.push_back(std::move(nodes));
  }
  const TrainConfig& c = forest.config;
  json doc{{"format_version", kModelFormatVersion},
           {"objective", "squared_error"},
           {"feature_schema",
            json::array({"day_of_week", "start_time_s", "section_id",
                         "lup_code"})},
           {"base_score", forest.base_score},
           {"config",
            json{{"alpha", c.alpha},
                 {"lambda", c.lambda},
                 {"learning_rate", c.learning_rate},
                 {"n_estimators", c.n_estimators},
                 {"colsample_bytree", c.colsample_bytree},
                 {"max_depth", c.max_depth},
                 {"min_child_weight", c.min_child_weight},
                 {"rng_seed", c.rng_seed}}},
           {"trees", trees}};
  return doc.dump() + "\n";
}

BoostedForest load_model(const std::string& artifact) {
  json doc;
  try {
    doc = json::parse(artifact);
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("corrupted artifact: ") + e.what());
  }
  try {
    int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw ModelFormatError("version mismatch: artifact format_version " +
                             std::to_string(version));
    BoostedForest forest;
    forest.base_score = doc.at("base_score").get<double>();
    const json& c = doc.at("config");
    forest.config.alpha = c.at("alpha").get<double>();
    forest.config.lambda = c.at("lambda").get<double>();
    forest.config.learning_rate = c.at("learning_rate").get<double>();
    forest.config.n_estimators = c.at("n_estimators").get<int>();
    forest.config.colsample_bytree = c.at("colsample_bytree").get<double>();
    forest.config.max_depth = c.at("max_depth").get<int>();
    forest.config.min_child_weight = c.at("min_child_weight").get<double>();
    forest.config.rng_seed = c.at("rng_seed").get<uint64_t>();
    for (const auto& jt : doc.at("trees")) {
      RegressionTree tree;
      for (const auto& jn : jt) {
        TreeNode node;
        node.feature = jn.at("f").get<int>();
        node.threshold = jn.at("t").get<double>();
        node.left = jn.at("l").get<int>();
        node.right = jn.at("r").get<int>();
        node.weight = jn.at("w").get<double>();
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty())
        throw ModelFormatError("corrupted artifact: empty tree");
      forest.trees.push_back(std::move(tree));
    }
    return forest;
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("corrupted artifact: ") + e.what());
  }
}

}  // namespace bte
