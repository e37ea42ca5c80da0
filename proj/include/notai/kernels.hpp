#pragma once

// Data-parallel kernels. Each has a serial reference implementation that the
// tests compare against and the benchmark times the OpenMP version against.
// Results are identical for any thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "notai/attribution.hpp"
#include "notai/boostedtree.hpp"
#include "notai/curvature.hpp"
#include "notai/features.hpp"
#include "notai/lexicons.hpp"

namespace notai::kernels {

enum class Exec { Serial, Parallel };

// Stylometric features for each text. Texts that fail to tokenize produce a
// vector of NaN and their index is appended to `failed`.
std::vector<FeatureVector> batch_stylometrics(std::span<const std::string> texts,
                                              const Lexicons& lex, Exec exec,
                                              std::vector<std::size_t>* failed = nullptr);

// TreeSHAP over every row.
std::vector<Attribution> batch_tree_shap(const TreeEnsemble& model,
                                         std::span<const FeatureVector> rows, Exec exec);

// Log-likelihood of each of `samples` sequences drawn from the conditionals.
// Sample i uses its own counter-derived random stream.
std::vector<double> sample_logliks(const ConditionalDistributionSequence& seq,
                                   std::size_t samples, std::uint64_t seed, Exec exec);

// Best split of every node in `nodes`, one feature per parallel task; the
// reduction runs in canonical feature order so ties resolve identically.
std::vector<SplitCandidate> find_best_splits(const SplitProblem& problem,
                                             std::span<const NodeStats> nodes, Exec exec);

}  // namespace notai::kernels
