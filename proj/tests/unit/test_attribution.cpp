#include <cmath>
#include <sstream>

#include "doctest.h"
#include "notai/attribution.hpp"
#include "notai/error.hpp"
#include "support.hpp"

using namespace notai;
using namespace notai::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

// Single split on curvature at 0: left leaf -1 (cover 3), right leaf +2 (cover 1).
TreeEnsemble stump() {
  Tree t;
  TreeNode root;
  root.feature = static_cast<int>(Feature::curvature);
  root.threshold = 0.0;
  root.left = 1;
  root.right = 2;
  root.cover = 4.0;
  t.nodes = {root, Tree::leaf(-1.0, 3.0).nodes[0], Tree::leaf(2.0, 1.0).nodes[0]};
  TreeEnsemble m;
  m.base_score = 0.5;
  m.trees.push_back(t);
  return m;
}

}  // namespace

TEST_CASE("stump attribution by hand") {
  const auto m = stump();
  CHECK(expected_margin(m) == doctest::Approx(0.5 + (3.0 * -1.0 + 1.0 * 2.0) / 4.0));
  FeatureVector x;
  x[Feature::curvature] = 1.0;
  const auto a = tree_shap(m, x);
  CHECK(a.base_value == doctest::Approx(0.25));
  CHECK(a.margin == doctest::Approx(2.5));
  CHECK(a.phi[index_of(Feature::curvature)] == doctest::Approx(2.25));
  for (std::size_t f = 1; f < kFeatureCount; ++f) CHECK(a.phi[f] == 0.0);
  const auto n = a.normalized_phi();
  CHECK(n[index_of(Feature::curvature)] == doctest::Approx(1.0));
}

TEST_CASE("tree shap equals brute force on random ensembles") {
  SplitMix64 rng(41);
  for (int e = 0; e < 60; ++e) {
    const auto m = random_ensemble(rng);
    for (int i = 0; i < 10; ++i) {
      const auto x = random_input(rng, 0.2);
      const auto fast = tree_shap(m, x);
      const auto slow = brute_force_shap(m, x);
      CHECK(fast.base_value == doctest::Approx(slow.base_value).epsilon(1e-12));
      for (std::size_t f = 0; f < kFeatureCount; ++f) CHECK(std::abs(fast.phi[f] - slow.phi[f]) < 1e-8);
      CHECK(std::abs(fast.base_value + fast.phi_sum() - fast.margin) < 1e-9);
      CHECK(fast.margin == doctest::Approx(m.predict_margin(x)));
    }
  }
}

TEST_CASE("unused features get zero attribution") {
  SplitMix64 rng(42);
  for (int e = 0; e < 40; ++e) {
    const auto m = random_ensemble(rng);
    const auto used = m.used_features();
    const auto a = tree_shap(m, random_input(rng));
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (!used.contains(f)) CHECK(a.phi[f] == 0.0);
    }
  }
}

TEST_CASE("attribution errors") {
  auto m = stump();
  m.trees[0].nodes[2].cover = 0.0;
  m.trees[0].nodes[0].cover = 3.0;
  CHECK(code_of([&] { tree_shap(m, FeatureVector{}); }) == ErrorCode::InconsistentCover);

  // Thirteen distinct split features exceed the brute-force limit.
  TreeEnsemble wide;
  for (int f = 0; f < 13; ++f) {
    Tree t;
    TreeNode root;
    root.feature = f;
    root.left = 1;
    root.right = 2;
    root.cover = 2.0;
    t.nodes = {root, Tree::leaf(-1.0, 1.0).nodes[0], Tree::leaf(1.0, 1.0).nodes[0]};
    wide.trees.push_back(t);
  }
  CHECK(code_of([&] { brute_force_shap(wide, FeatureVector{}); }) == ErrorCode::TooManyFeatures);
  CHECK_NOTHROW(tree_shap(wide, FeatureVector{}));
}

TEST_CASE("top evidence ordering") {
  Attribution a;
  a.phi.fill(0.0);
  a.phi[index_of(Feature::token_count)] = 0.3;
  a.phi[index_of(Feature::curvature)] = 0.3;
  a.phi[index_of(Feature::comma_count)] = 0.9;
  a.phi[index_of(Feature::stopword_ratio)] = -0.2;
  a.phi[index_of(Feature::cliche_ratio)] = -0.5;
  a.phi[index_of(Feature::max_freq_2gram)] = 0.1;
  const auto top = top_evidence(a, 3);
  REQUIRE(top.positive.size() == 3);
  CHECK(top.positive[0].feature == Feature::comma_count);
  CHECK(top.positive[1].feature == Feature::curvature);
  CHECK(top.positive[2].feature == Feature::token_count);
  REQUIRE(top.negative.size() == 2);
  CHECK(top.negative[0].feature == Feature::cliche_ratio);
  CHECK(top_evidence(a, 0).positive.empty());
}

TEST_CASE("global importance and dependence") {
  SplitMix64 rng(43);
  const auto m = random_ensemble(rng);
  std::vector<FeatureVector> rows;
  for (int i = 0; i < 50; ++i) rows.push_back(random_input(rng));
  const auto g = global_importance(m, rows);
  CHECK(g.sample_count == 50);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double sum = 0.0;
    for (const auto& x : rows) sum += std::abs(tree_shap(m, x).phi[f]);
    CHECK(g.mean_abs_phi[f] == doctest::Approx(sum / 50.0));
  }
  const auto rank = g.ranking();
  for (std::size_t i = 1; i < rank.size(); ++i) {
    CHECK(g.mean_abs_phi[index_of(rank[i - 1])] >= g.mean_abs_phi[index_of(rank[i])]);
  }
  CHECK(code_of([&] { global_importance(m, std::span<const FeatureVector>{}); }) == ErrorCode::EmptyDataset);

  const auto one = global_importance(m, std::span<const FeatureVector>(rows).first(1));
  const auto a0 = tree_shap(m, rows[0]);
  for (std::size_t f = 0; f < kFeatureCount; ++f) CHECK(one.mean_abs_phi[f] == std::abs(a0.phi[f]));

  const auto dep = dependence_series(m, rows, Feature::stopword_ratio);
  REQUIRE(dep.points.size() == 50);
  CHECK(dep.points[7].phi == tree_shap(m, rows[7]).phi[index_of(Feature::stopword_ratio)]);

  std::ostringstream csv;
  write_importance_csv(csv, g);
  CHECK(csv.str().rfind("feature,mean_abs_phi\n", 0) == 0);
  std::ostringstream dcsv;
  write_dependence_csv(dcsv, dep);
  CHECK(dcsv.str().rfind("feature,value,phi\n", 0) == 0);
}
