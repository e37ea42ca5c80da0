#include "notai/kernels.hpp"

namespace notai::kernels {

std::vector<SplitCandidate> find_best_splits(const SplitProblem& problem,
                                             std::span<const NodeStats> nodes, Exec exec) {
  std::vector<std::vector<SplitCandidate>> per_feature(kFeatureCount);
  const auto features = static_cast<std::ptrdiff_t>(kFeatureCount);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t f = 0; f < features; ++f) {
      if (problem.allowed.contains(static_cast<std::size_t>(f))) {
        scan_feature(problem, nodes, static_cast<std::size_t>(f), per_feature[static_cast<std::size_t>(f)]);
      }
    }
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t f = 0; f < features; ++f) {
      if (problem.allowed.contains(static_cast<std::size_t>(f))) {
        scan_feature(problem, nodes, static_cast<std::size_t>(f), per_feature[static_cast<std::size_t>(f)]);
      }
    }
  }

  // Canonical feature order; strict improvement keeps the lowest index on ties.
  std::vector<SplitCandidate> best(nodes.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto& cand = per_feature[f];
    for (std::size_t s = 0; s < cand.size(); ++s) {
      if (cand[s].valid && (!best[s].valid || cand[s].gain > best[s].gain)) best[s] = cand[s];
    }
  }
  return best;
}

}  // namespace notai::kernels
