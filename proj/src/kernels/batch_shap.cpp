#include "notai/kernels.hpp"

namespace notai::kernels {

std::vector<Attribution> batch_tree_shap(const TreeEnsemble& model, std::span<const FeatureVector> rows,
                                         Exec exec) {
  std::vector<Attribution> out(rows.size());
  if (rows.empty()) return out;
  // Validate covers once up front so worker threads never throw.
  out[0] = tree_shap(model, rows[0]);
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 1; i < n; ++i) out[static_cast<std::size_t>(i)] = tree_shap(model, rows[static_cast<std::size_t>(i)]);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 1; i < n; ++i) out[static_cast<std::size_t>(i)] = tree_shap(model, rows[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace notai::kernels
