#include "notai/boostedtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "notai/error.hpp"
#include "notai/hashing.hpp"
#include "notai/kernels.hpp"
#include "notai/random.hpp"

namespace notai {

Tree Tree::leaf(double weight, double cover) {
  Tree t;
  TreeNode n;
  n.weight = weight;
  n.cover = cover;
  t.nodes.push_back(n);
  return t;
}

bool Tree::goes_left(const TreeNode& node, const FeatureVector& x) const {
  const double v = x.at(static_cast<std::size_t>(node.feature));
  if (std::isnan(v)) return node.default_left;
  return v < node.threshold;
}

int Tree::leaf_for(const FeatureVector& x) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = goes_left(n, x) ? n.left : n.right;
  }
  return i;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) {
      best = std::max(best, d[i]);
    } else {
      d[static_cast<std::size_t>(n.left)] = d[i] + 1;
      d[static_cast<std::size_t>(n.right)] = d[i] + 1;
    }
  }
  return best;
}

void TrainConfig::validate() const {
  if (num_rounds < 1 || max_depth < 1 || learning_rate <= 0.0 || learning_rate > 1.0 ||
      lambda < 0.0 || gamma < 0.0 || min_child_weight < 0.0 || early_stopping_rounds < 0 ||
      !(subsample > 0.0 && subsample <= 1.0) || !(colsample > 0.0 && colsample <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid training configuration");
  }
}

double sigmoid(double margin) noexcept {
  const double m = std::clamp(margin, -kMarginClip, kMarginClip);
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double logistic_loss(double margin, int label) noexcept {
  const double softplus =
      margin > 0.0 ? margin + std::log1p(std::exp(-margin)) : std::log1p(std::exp(margin));
  return softplus - static_cast<double>(label) * margin;
}

LossDerivatives logistic_derivatives(double margin, int label) noexcept {
  const double p = margin >= 0.0 ? 1.0 / (1.0 + std::exp(-margin))
                                 : std::exp(margin) / (1.0 + std::exp(margin));
  return {p - static_cast<double>(label), p * (1.0 - p)};
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) noexcept {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma;
}

double leaf_weight(double g, double h, double lambda) noexcept {
  const double denom = h + lambda;
  return denom > 0.0 ? -g / denom : 0.0;
}

double TreeEnsemble::predict_margin(const FeatureVector& x) const {
  double m = base_score;
  for (const auto& t : trees) m += t.predict(x);
  return m;
}

double TreeEnsemble::predict_proba(const FeatureVector& x) const { return sigmoid(predict_margin(x)); }

void TreeEnsemble::validate() const {
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const auto& nodes = trees[t].nodes;
    if (nodes.empty()) throw Error(ErrorCode::SchemaMismatch, "tree " + std::to_string(t) + " is empty");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (!(n.cover >= 0.0)) throw Error(ErrorCode::InconsistentCover, "negative cover");
      if (n.is_leaf()) continue;
      if (n.feature >= static_cast<int>(kFeatureCount)) {
        throw Error(ErrorCode::SchemaMismatch, "split on unknown feature index");
      }
      const auto size = static_cast<int>(nodes.size());
      if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= size ||
          n.right >= size || n.left == n.right) {
        throw Error(ErrorCode::SchemaMismatch, "malformed child links in tree " + std::to_string(t));
      }
      const double sum = nodes[static_cast<std::size_t>(n.left)].cover +
                         nodes[static_cast<std::size_t>(n.right)].cover;
      if (std::abs(n.cover - sum) > 1e-9 * std::max(1.0, n.cover)) {
        throw Error(ErrorCode::InconsistentCover,
                    "tree " + std::to_string(t) + " node " + std::to_string(i) +
                        ": cover differs from the sum of its children");
      }
    }
  }
}

FeatureSet TreeEnsemble::used_features() const {
  FeatureSet used;
  for (const auto& t : trees) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) used.insert(static_cast<Feature>(n.feature));
    }
  }
  return used;
}

std::array<double, kFeatureCount> feature_medians(std::span<const FeatureVector> rows) {
  std::array<double, kFeatureCount> med{};
  std::vector<double> col;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    col.clear();
    for (const auto& r : rows) {
      if (!std::isnan(r.at(f))) col.push_back(r.at(f));
    }
    if (col.empty()) continue;
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    med[f] = n % 2 == 1 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  return med;
}

void presort(std::span<const FeatureVector> rows, std::vector<std::vector<std::uint32_t>>& sorted,
             std::vector<std::vector<std::uint32_t>>& missing) {
  sorted.assign(kFeatureCount, {});
  missing.assign(kFeatureCount, {});
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    auto& s = sorted[f];
    for (std::uint32_t r = 0; r < rows.size(); ++r) {
      if (std::isnan(rows[r].at(f))) {
        missing[f].push_back(r);
      } else {
        s.push_back(r);
      }
    }
    std::stable_sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) {
      return rows[a].at(f) < rows[b].at(f);
    });
  }
}

void scan_feature(const SplitProblem& p, std::span<const NodeStats> nodes, std::size_t f,
                  std::vector<SplitCandidate>& best) {
  const std::size_t m = nodes.size();
  best.assign(m, SplitCandidate{});

  std::vector<double> mg(m, 0.0), mh(m, 0.0);
  std::vector<std::size_t> mc(m, 0);
  for (std::uint32_t r : (*p.missing)[f]) {
    const int s = p.row_slot[r];
    if (s < 0) continue;
    mg[static_cast<std::size_t>(s)] += p.grad[r];
    mh[static_cast<std::size_t>(s)] += p.hess[r];
    ++mc[static_cast<std::size_t>(s)];
  }

  std::vector<double> ag(m, 0.0), ah(m, 0.0), last(m, 0.0);
  std::vector<std::size_t> ac(m, 0);

  auto consider = [&](std::size_t s, double gl, double hl, std::size_t cl, bool default_left,
                      double threshold) {
    const auto& node = nodes[s];
    const double gr = node.grad - gl;
    const double hr = node.hess - hl;
    const std::size_t cr = node.count - cl;
    if (cl == 0 || cr == 0) return;
    if (hl < p.min_child_weight || hr < p.min_child_weight) return;
    const double gain = split_gain(gl, hl, gr, hr, p.lambda, p.gamma);
    if (gain > 0.0 && gain > best[s].gain) {
      best[s] = {true, static_cast<int>(f), threshold, default_left, gain};
    }
  };

  for (std::uint32_t r : (*p.sorted)[f]) {
    const int slot = p.row_slot[r];
    if (slot < 0) continue;
    const auto s = static_cast<std::size_t>(slot);
    const double v = p.rows[r].at(f);
    if (ac[s] > 0 && v > last[s]) {
      double threshold = last[s] + (v - last[s]) / 2.0;
      if (!(threshold > last[s])) threshold = v;
      if (mc[s] == 0) {
        const std::size_t cr = nodes[s].count - ac[s];
        consider(s, ag[s], ah[s], ac[s], ac[s] >= cr, threshold);
      } else {
        consider(s, ag[s], ah[s], ac[s], false, threshold);
        consider(s, ag[s] + mg[s], ah[s] + mh[s], ac[s] + mc[s], true, threshold);
      }
    }
    ag[s] += p.grad[r];
    ah[s] += p.hess[r];
    ++ac[s];
    last[s] = v;
  }
}

namespace {

std::vector<NodeStats> stats_for(std::span<const int> row_node, std::span<const double> grad,
                                 std::span<const double> hess, const std::vector<int>& frontier,
                                 std::vector<int>& slot_of_node) {
  std::vector<NodeStats> stats(frontier.size());
  for (std::size_t s = 0; s < frontier.size(); ++s) stats[s].node = frontier[s];
  for (std::size_t r = 0; r < row_node.size(); ++r) {
    const int node = row_node[r];
    if (node < 0) continue;
    const int s = slot_of_node[static_cast<std::size_t>(node)];
    if (s < 0) continue;
    auto& st = stats[static_cast<std::size_t>(s)];
    st.grad += grad[r];
    st.hess += hess[r];
    ++st.count;
  }
  return stats;
}

}  // namespace

Tree build_tree(std::span<const FeatureVector> rows, std::span<const double> grad,
                std::span<const double> hess, std::span<const int> active,
                const std::vector<std::vector<std::uint32_t>>& sorted,
                const std::vector<std::vector<std::uint32_t>>& missing, const FeatureSet& allowed,
                const TrainConfig& cfg) {
  const std::size_t n = rows.size();
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<int> row_node(n, -1);
  for (std::size_t r = 0; r < n; ++r) row_node[r] = active[r] ? 0 : -1;

  std::vector<int> frontier = {0};
  std::vector<int> slot_of_node = {0};
  std::vector<NodeStats> stats = stats_for(row_node, grad, hess, frontier, slot_of_node);

  auto make_leaf = [&](const NodeStats& st) {
    auto& node = tree.nodes[static_cast<std::size_t>(st.node)];
    node.feature = -1;
    node.cover = static_cast<double>(st.count);
    node.weight = cfg.learning_rate * leaf_weight(st.grad, st.hess, cfg.lambda);
  };

  std::vector<int> row_slot(n, -1);
  for (int depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
    for (std::size_t r = 0; r < n; ++r) {
      row_slot[r] = row_node[r] < 0 ? -1 : slot_of_node[static_cast<std::size_t>(row_node[r])];
    }
    SplitProblem problem{rows, grad, hess, row_slot, &sorted, &missing, allowed,
                         cfg.lambda, cfg.gamma, cfg.min_child_weight};
    const auto best = kernels::find_best_splits(problem, stats, kernels::Exec::Parallel);

    std::vector<int> next;
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const auto& st = stats[s];
      if (!best[s].valid) {
        make_leaf(st);
        continue;
      }
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(st.node)];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.default_left = best[s].default_left;
      node.left = left;
      node.right = left + 1;
      node.cover = static_cast<double>(st.count);
      next.push_back(left);
      next.push_back(left + 1);
    }

    for (std::size_t r = 0; r < n; ++r) {
      const int node_id = row_node[r];
      if (node_id < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
      if (node.is_leaf() || node.left < 0) continue;
      row_node[r] = tree.goes_left(node, rows[r]) ? node.left : node.right;
    }

    frontier = std::move(next);
    slot_of_node.assign(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      slot_of_node[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    }
    stats = stats_for(row_node, grad, hess, frontier, slot_of_node);
  }
  for (const auto& st : stats) make_leaf(st);
  return tree;
}

double mean_log_loss(const TreeEnsemble& model, std::span<const FeatureVector> rows,
                     std::span<const int> labels) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double m = std::clamp(model.predict_margin(rows[i]), -kMarginClip, kMarginClip);
    total += logistic_loss(m, labels[i]);
  }
  return total / static_cast<double>(rows.size());
}

TreeEnsemble train(std::span<const FeatureVector> rows, std::span<const int> labels,
                   const std::optional<ValidationSet>& validation, const TrainConfig& cfg,
                   const FeatureSet& allowed) {
  cfg.validate();
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature rows and labels differ in length");
  }
  if (validation && validation->rows.size() != validation->labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "validation rows and labels differ in length");
  }
  if (allowed.empty()) throw Error(ErrorCode::InvalidArgument, "no features allowed for training");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  const std::size_t n = rows.size();
  if (n < 2 || positives == 0 || positives == n) {
    throw Error(ErrorCode::SingleClass, "training data needs both classes");
  }

  TreeEnsemble model;
  model.learning_rate = cfg.learning_rate;
  model.feature_medians = feature_medians(rows);
  model.base_score = std::log(static_cast<double>(positives) / static_cast<double>(n - positives));
  model.provenance.train_config = cfg;
  {
    Sha256 h;
    for (const auto& r : rows) {
      h.update(r.values().data(), sizeof(double) * kFeatureCount);
    }
    h.update(labels.data(), sizeof(int) * labels.size());
    model.provenance.data_hash = h.hex_digest();
  }

  std::vector<std::vector<std::uint32_t>> sorted, missing;
  presort(rows, sorted, missing);

  std::vector<double> margin(n, model.base_score), grad(n), hess(n);
  std::vector<double> val_margin;
  if (validation) val_margin.assign(validation->rows.size(), model.base_score);

  SplitMix64 rng(cfg.seed);
  std::vector<int> active(n, 1);
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t best_trees = 0;
  int since_best = 0;

  for (int round = 0; round < cfg.num_rounds; ++round) {
    double max_abs_grad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = logistic_derivatives(margin[i], labels[i]);
      grad[i] = d.grad;
      hess[i] = d.hess;
      max_abs_grad = std::max(max_abs_grad, std::abs(d.grad));
    }
    if (max_abs_grad <= 1e-12) {
      model.trees.push_back(Tree::leaf(0.0, static_cast<double>(n)));
      best_trees = model.trees.size();
      break;
    }

    if (cfg.subsample < 1.0) {
      for (std::size_t i = 0; i < n; ++i) active[i] = rng.uniform() < cfg.subsample ? 1 : 0;
    }
    FeatureSet tree_features = allowed;
    if (cfg.colsample < 1.0) {
      std::vector<std::size_t> pool;
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (allowed.contains(f)) pool.push_back(f);
      }
      shuffle(pool, rng);
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(cfg.colsample * static_cast<double>(pool.size()))));
      tree_features = FeatureSet{};
      for (std::size_t i = 0; i < keep; ++i) tree_features.insert(static_cast<Feature>(pool[i]));
    }

    Tree tree = build_tree(rows, grad, hess, active, sorted, missing, tree_features, cfg);
    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(rows[i]);
    model.trees.push_back(std::move(tree));

    if (validation && !validation->rows.empty()) {
      double loss = 0.0;
      for (std::size_t i = 0; i < val_margin.size(); ++i) {
        val_margin[i] += model.trees.back().predict(validation->rows[i]);
        loss += logistic_loss(std::clamp(val_margin[i], -kMarginClip, kMarginClip),
                              validation->labels[i]);
      }
      loss /= static_cast<double>(val_margin.size());
      if (loss < best_loss) {
        best_loss = loss;
        best_trees = model.trees.size();
        since_best = 0;
      } else if (cfg.early_stopping_rounds > 0 && ++since_best >= cfg.early_stopping_rounds) {
        break;
      }
    } else {
      best_trees = model.trees.size();
    }
  }
  model.trees.resize(best_trees);
  return model;
}

}  // namespace notai
