#include "notai/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "notai/error.hpp"
#include "notai/kernels.hpp"

namespace notai {

double logsumexp(const std::vector<double>& logprobs) {
  double max = -std::numeric_limits<double>::infinity();
  for (double l : logprobs) max = std::max(max, l);
  if (!std::isfinite(max)) return max;
  double sum = 0.0;
  for (double l : logprobs) sum += std::exp(l - max);
  return max + std::log(sum);
}

void ConditionalDistributionSequence::validate() const {
  if (vocab_size < 2) throw Error(ErrorCode::InvalidArgument, "vocab_size must be >= 2");
  if (positions.empty()) throw Error(ErrorCode::InvalidArgument, "sequence has no positions");
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const auto& pos = positions[j];
    if (pos.logprobs.size() != vocab_size) {
      throw Error(ErrorCode::InvalidArgument,
                  "position " + std::to_string(j) + " has wrong distribution size");
    }
    if (pos.observed >= vocab_size) {
      throw Error(ErrorCode::InvalidArgument,
                  "position " + std::to_string(j) + " observed token out of range");
    }
    const double z = logsumexp(pos.logprobs);
    if (!(std::abs(z) <= 1e-6)) {
      throw Error(ErrorCode::InvalidArgument,
                  "position " + std::to_string(j) + " does not normalize");
    }
  }
}

ConditionalDistributionSequence ConditionalDistributionSequence::concat(
    const ConditionalDistributionSequence& other) const {
  if (other.vocab_size != vocab_size) {
    throw Error(ErrorCode::InvalidArgument, "cannot concatenate sequences over different vocabularies");
  }
  ConditionalDistributionSequence out = *this;
  out.positions.insert(out.positions.end(), other.positions.begin(), other.positions.end());
  return out;
}

CurvatureResult cpc_score(const ConditionalDistributionSequence& seq) {
  seq.validate();
  CurvatureResult r;
  double variance = 0.0;
  for (const auto& pos : seq.positions) {
    r.observed_loglik += pos.logprobs[pos.observed];
    double mean = 0.0;
    for (double l : pos.logprobs) {
      if (std::isfinite(l)) mean += std::exp(l) * l;
    }
    // Centered second moment; equals E[(log p)^2] - (E[log p])^2.
    double var = 0.0;
    for (double l : pos.logprobs) {
      if (std::isfinite(l)) {
        const double d = l - mean;
        var += std::exp(l) * d * d;
      }
    }
    r.expected_loglik += mean;
    variance += var;
  }
  r.std_loglik = std::sqrt(variance);
  r.positions_used = seq.positions.size();
  if (r.std_loglik < kMinCurvatureStd) {
    throw Error(ErrorCode::DegenerateVariance, "log-likelihood variance is zero");
  }
  r.score = (r.observed_loglik - r.expected_loglik) / r.std_loglik;
  return r;
}

CurvatureResult cpc_monte_carlo(const ConditionalDistributionSequence& seq, std::size_t samples,
                                std::uint64_t seed) {
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  seq.validate();
  const auto logliks = kernels::sample_logliks(seq, samples, seed, kernels::Exec::Parallel);

  CurvatureResult r;
  for (const auto& pos : seq.positions) r.observed_loglik += pos.logprobs[pos.observed];
  double mean = 0.0;
  for (double l : logliks) mean += l;
  mean /= static_cast<double>(samples);
  double ss = 0.0;
  for (double l : logliks) ss += (l - mean) * (l - mean);
  const double denom = samples > 1 ? static_cast<double>(samples - 1) : 1.0;
  r.expected_loglik = mean;
  r.std_loglik = std::sqrt(ss / denom);
  r.positions_used = seq.positions.size();
  if (r.std_loglik < kMinCurvatureStd) {
    throw Error(ErrorCode::DegenerateVariance, "sampled log-likelihoods have zero spread");
  }
  r.score = (r.observed_loglik - r.expected_loglik) / r.std_loglik;
  return r;
}

}  // namespace notai
