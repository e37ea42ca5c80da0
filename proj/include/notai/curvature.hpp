#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "notai/unicode_text.hpp"

namespace notai {

// Per-position conditional log-probability distributions (natural log) from
// a language-model backend, together with the token actually observed.
struct ConditionalDistributionSequence {
  struct Position {
    std::size_t observed = 0;
    std::vector<double> logprobs;
  };

  std::vector<Position> positions;
  std::size_t vocab_size = 0;

  // Throws Error{InvalidArgument} unless every position normalizes
  // (logsumexp within 1e-6 of 0), observed ids are in range, vocab_size >= 2
  // and there is at least one position.
  void validate() const;

  ConditionalDistributionSequence concat(const ConditionalDistributionSequence& other) const;
};

struct CurvatureResult {
  double score = 0.0;            // standardized, unitless
  double observed_loglik = 0.0;  // nats
  double expected_loglik = 0.0;  // nats
  double std_loglik = 0.0;       // nats
  std::size_t positions_used = 0;
};

inline constexpr double kMinCurvatureStd = 1e-9;

double logsumexp(const std::vector<double>& logprobs);

// Closed-form curvature: the observed log-likelihood standardized by the
// analytic mean and standard deviation of the log-likelihood of a sequence
// drawn token-wise from the same conditionals. Throws
// Error{DegenerateVariance} when the standard deviation is below 1e-9.
CurvatureResult cpc_score(const ConditionalDistributionSequence& seq);

// Same statistic with the moments estimated from `samples` sequences drawn
// from the conditionals. Deterministic for a fixed seed and independent of
// the thread count.
CurvatureResult cpc_monte_carlo(const ConditionalDistributionSequence& seq, std::size_t samples,
                                std::uint64_t seed);

// Source of conditional distributions for a document.
class LogitSource {
 public:
  virtual ~LogitSource() = default;
  virtual ConditionalDistributionSequence distributions(const Document& doc) const = 0;
  // Backend name and model hash, recorded for provenance.
  virtual std::string identity() const = 0;
};

}  // namespace notai
