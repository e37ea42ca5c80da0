#include <cmath>

#include "notai/kernels.hpp"
#include "notai/random.hpp"

namespace notai::kernels {

namespace {

struct Sampler {
  std::vector<std::vector<double>> cdf;
  std::vector<std::vector<double>> logp;
};

Sampler build_sampler(const ConditionalDistributionSequence& seq) {
  Sampler s;
  s.cdf.reserve(seq.positions.size());
  s.logp.reserve(seq.positions.size());
  for (const auto& pos : seq.positions) {
    std::vector<double> c(pos.logprobs.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      acc += std::exp(pos.logprobs[k]);
      c[k] = acc;
    }
    s.cdf.push_back(std::move(c));
    s.logp.push_back(pos.logprobs);
  }
  return s;
}

double draw_one(const Sampler& s, std::uint64_t seed, std::size_t index) {
  SplitMix64 rng(stream_seed(seed, index));
  double ll = 0.0;
  for (std::size_t j = 0; j < s.cdf.size(); ++j) {
    const auto& c = s.cdf[j];
    const double u = rng.uniform() * c.back();
    std::size_t k = 0;
    while (k + 1 < c.size() && !(u < c[k])) ++k;
    // Zero-probability entries have an empty CDF step and are never chosen.
    while (!std::isfinite(s.logp[j][k]) && k + 1 < c.size()) ++k;
    ll += s.logp[j][k];
  }
  return ll;
}

}  // namespace

std::vector<double> sample_logliks(const ConditionalDistributionSequence& seq,
                                   std::size_t samples, std::uint64_t seed, Exec exec) {
  const Sampler sampler = build_sampler(seq);
  std::vector<double> out(samples);
  const auto n = static_cast<std::ptrdiff_t>(samples);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = draw_one(sampler, seed, static_cast<std::size_t>(i));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = draw_one(sampler, seed, static_cast<std::size_t>(i));
  }
  return out;
}

}  // namespace notai::kernels
