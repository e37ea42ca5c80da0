#include "notai/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cmath>
#include <numeric>
#include <ostream>

#include "notai/error.hpp"
#include "notai/kernels.hpp"

namespace notai {

namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

using Path = std::vector<PathElement>;

void extend_path(Path& path, int depth, double zero_fraction, double one_fraction, int feature) {
  const auto d = static_cast<std::size_t>(depth);
  path[d] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    const auto u = static_cast<std::size_t>(i);
    path[u + 1].pweight += one_fraction * path[u].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[u].pweight = zero_fraction * path[u].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(Path& path, int depth, int index) {
  const auto& el = path[static_cast<std::size_t>(index)];
  const double one = el.one_fraction;
  const double zero = el.zero_fraction;
  double next_one = path[static_cast<std::size_t>(depth)].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    auto& p = path[static_cast<std::size_t>(i)];
    if (one != 0.0) {
      const double tmp = p.pweight;
      p.pweight = next_one * (depth + 1) / ((i + 1) * one);
      next_one = tmp - p.pweight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      p.pweight = p.pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    auto& dst = path[static_cast<std::size_t>(i)];
    const auto& src = path[static_cast<std::size_t>(i + 1)];
    dst.feature = src.feature;
    dst.zero_fraction = src.zero_fraction;
    dst.one_fraction = src.one_fraction;
  }
}

double unwound_sum(const Path& path, int depth, int index) {
  const auto& el = path[static_cast<std::size_t>(index)];
  const double one = el.one_fraction;
  const double zero = el.zero_fraction;
  double next_one = path[static_cast<std::size_t>(depth)].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    const auto& p = path[static_cast<std::size_t>(i)];
    if (one != 0.0) {
      const double tmp = next_one * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next_one = p.pweight - tmp * zero * ((depth - i) / static_cast<double>(depth + 1));
    } else {
      total += (p.pweight / zero) / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

void recurse(const Tree& tree, int node_index, const FeatureVector& x, std::array<double, kFeatureCount>& phi,
             Path path, int depth, double parent_zero, double parent_one, int parent_feature) {
  path.resize(static_cast<std::size_t>(depth) + 1);
  extend_path(path, depth, parent_zero, parent_one, parent_feature);
  const auto& node = tree.nodes[static_cast<std::size_t>(node_index)];

  if (node.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const auto& el = path[static_cast<std::size_t>(i)];
      const double w = unwound_sum(path, depth, i);
      phi[static_cast<std::size_t>(el.feature)] += w * (el.one_fraction - el.zero_fraction) * node.weight;
    }
    return;
  }

  const bool left = tree.goes_left(node, x);
  const int hot = left ? node.left : node.right;
  const int cold = left ? node.right : node.left;
  const double hot_zero = tree.nodes[static_cast<std::size_t>(hot)].cover / node.cover;
  const double cold_zero = tree.nodes[static_cast<std::size_t>(cold)].cover / node.cover;

  double incoming_zero = 1.0;
  double incoming_one = 1.0;
  int k = 1;
  for (; k <= depth; ++k) {
    if (path[static_cast<std::size_t>(k)].feature == node.feature) break;
  }
  if (k <= depth) {
    incoming_zero = path[static_cast<std::size_t>(k)].zero_fraction;
    incoming_one = path[static_cast<std::size_t>(k)].one_fraction;
    unwind_path(path, depth, k);
    --depth;
  }

  recurse(tree, hot, x, phi, path, depth + 1, hot_zero * incoming_zero, incoming_one, node.feature);
  recurse(tree, cold, x, phi, path, depth + 1, cold_zero * incoming_zero, 0.0, node.feature);
}

void require_positive_covers(const TreeEnsemble& model) {
  for (const auto& t : model.trees) {
    for (const auto& n : t.nodes) {
      if (!(n.cover > 0.0)) throw Error(ErrorCode::InconsistentCover, "attribution needs positive node covers");
    }
  }
}

double tree_expectation(const Tree& tree, int index) {
  const auto& n = tree.nodes[static_cast<std::size_t>(index)];
  if (n.is_leaf()) return n.weight;
  const auto& l = tree.nodes[static_cast<std::size_t>(n.left)];
  const auto& r = tree.nodes[static_cast<std::size_t>(n.right)];
  return (l.cover * tree_expectation(tree, n.left) + r.cover * tree_expectation(tree, n.right)) / n.cover;
}

// Value of the coalition `known` (bit i of the mask stands for used[i]).
double conditional_expectation(const Tree& tree, int index, const FeatureVector& x,
                               const std::array<int, kFeatureCount>& slot, std::uint32_t known) {
  const auto& n = tree.nodes[static_cast<std::size_t>(index)];
  if (n.is_leaf()) return n.weight;
  const int s = slot[static_cast<std::size_t>(n.feature)];
  if (known & (1u << s)) {
    return conditional_expectation(tree, tree.goes_left(n, x) ? n.left : n.right, x, slot, known);
  }
  const auto& l = tree.nodes[static_cast<std::size_t>(n.left)];
  const auto& r = tree.nodes[static_cast<std::size_t>(n.right)];
  return (l.cover * conditional_expectation(tree, n.left, x, slot, known) +
          r.cover * conditional_expectation(tree, n.right, x, slot, known)) /
         n.cover;
}

void write_csv_number(std::ostream& out, double v) {
  if (std::isnan(v)) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

double Attribution::phi_sum() const noexcept { return std::accumulate(phi.begin(), phi.end(), 0.0); }

std::array<double, kFeatureCount> Attribution::normalized_phi() const noexcept {
  std::array<double, kFeatureCount> out{};
  double total = 0.0;
  for (double p : phi) total += std::abs(p);
  if (total == 0.0) return out;
  for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = phi[i] / total;
  return out;
}

double expected_margin(const TreeEnsemble& model) {
  double m = model.base_score;
  for (const auto& t : model.trees) {
    if (!t.nodes.empty()) m += tree_expectation(t, 0);
  }
  return m;
}

Attribution tree_shap(const TreeEnsemble& model, const FeatureVector& x) {
  require_positive_covers(model);
  Attribution a;
  a.feature_values = x;
  a.base_value = expected_margin(model);
  a.margin = model.predict_margin(x);
  Path path;
  for (const auto& t : model.trees) {
    if (t.nodes.empty()) continue;
    path.clear();
    recurse(t, 0, x, a.phi, path, 0, 1.0, 1.0, -1);
  }
  return a;
}

Attribution brute_force_shap(const TreeEnsemble& model, const FeatureVector& x) {
  require_positive_covers(model);
  const FeatureSet used_set = model.used_features();
  std::vector<int> used;
  std::array<int, kFeatureCount> slot{};
  slot.fill(-1);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (used_set.contains(f)) {
      slot[f] = static_cast<int>(used.size());
      used.push_back(static_cast<int>(f));
    }
  }
  const std::size_t m = used.size();
  if (m > kBruteForceMaxFeatures) {
    throw Error(ErrorCode::TooManyFeatures,
                "brute-force Shapley supports at most 12 features, model uses " + std::to_string(m));
  }

  const std::uint32_t subsets = 1u << m;
  std::vector<double> value(subsets, model.base_score);
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    for (const auto& t : model.trees) {
      if (!t.nodes.empty()) value[mask] += conditional_expectation(t, 0, x, slot, mask);
    }
  }

  std::vector<double> fact(m + 1, 1.0);
  for (std::size_t i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  Attribution a;
  a.feature_values = x;
  a.base_value = value[0];
  a.margin = model.predict_margin(x);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    double phi = 0.0;
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      const double w = fact[s] * fact[m - s - 1] / fact[m];
      phi += w * (value[mask | bit] - value[mask]);
    }
    a.phi[static_cast<std::size_t>(used[i])] = phi;
  }
  return a;
}

std::vector<Feature> GlobalImportance::ranking() const {
  std::vector<std::size_t> idx(kFeatureCount);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return mean_abs_phi[a] > mean_abs_phi[b]; });
  std::vector<Feature> out;
  out.reserve(kFeatureCount);
  for (auto i : idx) out.push_back(static_cast<Feature>(i));
  return out;
}

GlobalImportance global_importance(const TreeEnsemble& model, std::span<const FeatureVector> rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "global importance needs at least one row");
  const auto attrs = kernels::batch_tree_shap(model, rows, kernels::Exec::Parallel);
  GlobalImportance g;
  g.sample_count = rows.size();
  for (const auto& a : attrs) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) g.mean_abs_phi[f] += std::abs(a.phi[f]);
  }
  for (auto& v : g.mean_abs_phi) v /= static_cast<double>(rows.size());
  return g;
}

DependenceSeries dependence_series(const TreeEnsemble& model, std::span<const FeatureVector> rows,
                                   Feature feature) {
  const auto attrs = kernels::batch_tree_shap(model, rows, kernels::Exec::Parallel);
  DependenceSeries s{feature, {}};
  s.points.reserve(rows.size());
  const auto f = index_of(feature);
  for (std::size_t i = 0; i < rows.size(); ++i) s.points.push_back({rows[i].at(f), attrs[i].phi[f]});
  return s;
}

TopEvidence top_evidence(const Attribution& attr, std::size_t k) {
  TopEvidence out;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const EvidenceItem item{static_cast<Feature>(f), attr.feature_values.at(f), attr.phi[f]};
    if (attr.phi[f] > 0.0) out.positive.push_back(item);
    if (attr.phi[f] < 0.0) out.negative.push_back(item);
  }
  std::stable_sort(out.positive.begin(), out.positive.end(),
                   [](const auto& a, const auto& b) { return a.phi > b.phi; });
  std::stable_sort(out.negative.begin(), out.negative.end(),
                   [](const auto& a, const auto& b) { return a.phi < b.phi; });
  if (out.positive.size() > k) out.positive.resize(k);
  if (out.negative.size() > k) out.negative.resize(k);
  return out;
}

void write_importance_csv(std::ostream& out, const GlobalImportance& importance) {
  out << "feature,mean_abs_phi\n";
  for (auto f : importance.ranking()) {
    out << feature_name(f) << ',';
    write_csv_number(out, importance.mean_abs_phi[index_of(f)]);
    out << '\n';
  }
}

void write_dependence_csv(std::ostream& out, const DependenceSeries& series) {
  out << "feature,value,phi\n";
  for (const auto& p : series.points) {
    out << feature_name(series.feature) << ',';
    write_csv_number(out, p.value);
    out << ',';
    write_csv_number(out, p.phi);
    out << '\n';
  }
}

}  // namespace notai
