#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "notai/boostedtree.hpp"
#include "notai/features.hpp"

namespace notai {

// Signed per-feature contributions in margin (log-odds) units.
// base_value + sum(phi) == margin.
struct Attribution {
  std::array<double, kFeatureCount> phi{};
  double base_value = 0.0;
  double margin = 0.0;
  FeatureVector feature_values;

  double phi_sum() const noexcept;
  // phi / sum|phi|, all zero when every phi is zero.
  std::array<double, kFeatureCount> normalized_phi() const noexcept;
};

// Cover-weighted expected margin with no feature information.
double expected_margin(const TreeEnsemble& model);

// Path-dependent TreeSHAP: exact Shapley values of the game whose value for
// a feature subset S is the cover-weighted conditional expectation of the
// ensemble with the features in S fixed to x. Throws
// Error{InconsistentCover} when covers are inconsistent or non-positive.
Attribution tree_shap(const TreeEnsemble& model, const FeatureVector& x);

// Same game, solved by enumerating all 2^M subsets of the M features the
// model splits on. Throws Error{TooManyFeatures} when M > 12.
Attribution brute_force_shap(const TreeEnsemble& model, const FeatureVector& x);

inline constexpr std::size_t kBruteForceMaxFeatures = 12;

struct GlobalImportance {
  std::array<double, kFeatureCount> mean_abs_phi{};
  std::size_t sample_count = 0;

  // Feature order by decreasing importance, ties in canonical order.
  std::vector<Feature> ranking() const;
};

// Throws Error{EmptyDataset}.
GlobalImportance global_importance(const TreeEnsemble& model, std::span<const FeatureVector> rows);

struct DependencePoint {
  double value;
  double phi;
};

struct DependenceSeries {
  Feature feature;
  std::vector<DependencePoint> points;  // one per row, in row order
};

DependenceSeries dependence_series(const TreeEnsemble& model, std::span<const FeatureVector> rows,
                                   Feature feature);

struct EvidenceItem {
  Feature feature;
  double raw_value;
  double phi;
};

struct TopEvidence {
  std::vector<EvidenceItem> positive;  // phi > 0, largest first
  std::vector<EvidenceItem> negative;  // phi < 0, most negative first
};

// Ties in phi keep canonical feature order.
TopEvidence top_evidence(const Attribution& attr, std::size_t k);

// CSV exports with headers `feature,mean_abs_phi` and `feature,value,phi`.
void write_importance_csv(std::ostream& out, const GlobalImportance& importance);
void write_dependence_csv(std::ostream& out, const DependenceSeries& series);

}  // namespace notai
