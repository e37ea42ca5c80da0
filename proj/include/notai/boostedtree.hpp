#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "notai/features.hpp"

namespace notai {

// Flat node storage; the root is node 0. Internal nodes send x[feature] <
// threshold left, NaN along default_left. Cover is the number of training
// rows that reached the node.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool default_left = true;
  double cover = 0.0;
  double weight = 0.0;  // leaves only; learning rate already folded in

  bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  static Tree leaf(double weight, double cover);
  int leaf_for(const FeatureVector& x) const;
  double predict(const FeatureVector& x) const { return nodes[static_cast<std::size_t>(leaf_for(x))].weight; }
  int depth() const;
  bool goes_left(const TreeNode& node, const FeatureVector& x) const;
};

struct TrainConfig {
  int num_rounds = 200;
  int max_depth = 4;
  double min_child_weight = 1.0;
  double lambda = 1.0;
  double gamma = 0.0;
  double learning_rate = 0.1;
  int early_stopping_rounds = 20;
  std::uint64_t seed = 42;
  double subsample = 1.0;  // row fraction per round
  double colsample = 1.0;  // feature fraction per tree

  void validate() const;
};

struct ModelProvenance {
  std::string lexicon_hash;
  std::vector<std::string> backend_ids;
  std::string data_hash;
  std::optional<TrainConfig> train_config;
};

class TreeEnsemble {
 public:
  std::vector<Tree> trees;
  double base_score = 0.0;     // prior log-odds
  double learning_rate = 1.0;  // provenance only; folded into leaf weights
  std::array<double, kFeatureCount> feature_medians{};
  ModelProvenance provenance;

  // base_score + sum of reached leaf weights.
  double predict_margin(const FeatureVector& x) const;
  double predict_proba(const FeatureVector& x) const;

  // Throws Error{InconsistentCover} unless every parent cover equals the sum
  // of its children's, and Error{SchemaMismatch} for bad feature indices or
  // dangling children.
  void validate() const;

  // Features referenced by at least one split.
  FeatureSet used_features() const;
};

inline constexpr double kMarginClip = 30.0;

// Logistic function with |margin| clipped to 30.
double sigmoid(double margin) noexcept;

struct LossDerivatives {
  double grad;
  double hess;
};

// Logistic loss in margin space: softplus(m) - y*m.
double logistic_loss(double margin, int label) noexcept;
LossDerivatives logistic_derivatives(double margin, int label) noexcept;

// Regularized split gain and optimal leaf weight of the second-order objective.
double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) noexcept;
double leaf_weight(double g, double h, double lambda) noexcept;

struct ValidationSet {
  std::span<const FeatureVector> rows;
  std::span<const int> labels;
};

// Newton boosting with logistic loss and exact greedy splits restricted to
// `allowed`. Labels are 0 (human) / 1 (ai). Missing values (NaN) are routed
// along a learned default direction. Throws Error{SingleClass},
// Error{DimensionMismatch} and Error{InvalidArgument}.
TreeEnsemble train(std::span<const FeatureVector> rows, std::span<const int> labels,
                   const std::optional<ValidationSet>& validation, const TrainConfig& cfg,
                   const FeatureSet& allowed = FeatureSet::all());

double mean_log_loss(const TreeEnsemble& model, std::span<const FeatureVector> rows,
                     std::span<const int> labels);

// Per-feature medians over non-NaN values (0 when a column is all NaN).
std::array<double, kFeatureCount> feature_medians(std::span<const FeatureVector> rows);

// Model file: JSON document followed by a line `#sha256=<hex>` over the
// preceding bytes.
std::string serialize_model(const TreeEnsemble& model);
TreeEnsemble parse_model(const std::string& file_contents);
void save_model(const TreeEnsemble& model, const std::filesystem::path& path);
TreeEnsemble load_model(const std::filesystem::path& path);
std::string model_hash(const TreeEnsemble& model);

// ---------------------------------------------------------------------------
// Split search internals shared with the parallel kernel.

struct NodeStats {
  int node = -1;  // node id within the tree under construction
  double grad = 0.0;
  double hess = 0.0;
  std::size_t count = 0;
};

struct SplitCandidate {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  double gain = 0.0;
};

struct SplitProblem {
  std::span<const FeatureVector> rows;
  std::span<const double> grad;
  std::span<const double> hess;
  std::span<const int> row_slot;  // index into the node list, -1 if inactive
  // Per feature: rows with a value, sorted ascending (ties by row index),
  // and rows with NaN.
  const std::vector<std::vector<std::uint32_t>>* sorted = nullptr;
  const std::vector<std::vector<std::uint32_t>>* missing = nullptr;
  FeatureSet allowed;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

// Best split of every node for a single feature.
void scan_feature(const SplitProblem& problem, std::span<const NodeStats> nodes, std::size_t feature,
                  std::vector<SplitCandidate>& best);

// Grows one tree on fixed gradients; exposed for tests of the Newton step.
Tree build_tree(std::span<const FeatureVector> rows, std::span<const double> grad,
                std::span<const double> hess, std::span<const int> active_rows_mask,
                const std::vector<std::vector<std::uint32_t>>& sorted,
                const std::vector<std::vector<std::uint32_t>>& missing, const FeatureSet& allowed,
                const TrainConfig& cfg);

// Presorted row indices per feature.
void presort(std::span<const FeatureVector> rows, std::vector<std::vector<std::uint32_t>>& sorted,
             std::vector<std::vector<std::uint32_t>>& missing);

}  // namespace notai
