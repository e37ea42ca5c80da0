#pragma once

#include <memory>
#include <string>

#include "notai/curvature.hpp"

namespace notai {

namespace detail {
class InFlightLimit;
}

// Client for an external inference server returning per-token top-K
// log-probabilities.
//
// Request body:  {"model": str, "text": str, "top_k": int}
// Response body: {"positions": [{"token": str, "logprob": num,
//                                "top": [{"token": str, "logprob": num}, ...]}, ...]}
//
// Each position is collapsed to K+1 buckets: the K listed tokens (padded
// with zero-mass entries when fewer are returned) plus an OTHER bucket that
// holds the remaining mass. An observed token outside the list maps to
// OTHER.
class HttpLogitSource final : public LogitSource {
 public:
  struct Config {
    std::string endpoint;
    std::string model_name;
    int timeout_ms = 10000;
    int top_k = 100;
    int max_in_flight = 8;
  };

  explicit HttpLogitSource(Config config);
  ~HttpLogitSource() override;

  struct Fetched {
    ConditionalDistributionSequence sequence;
    std::string response_sha256;
  };

  // Throws Error{BackendUnavailable} or Error{BackendProtocol}.
  Fetched fetch(const Document& doc) const;

  ConditionalDistributionSequence distributions(const Document& doc) const override;
  std::string identity() const override;

 private:
  Config config_;
  std::unique_ptr<detail::InFlightLimit> limit_;
};

// Collapses one response's positions into K+1 buckets; exposed for tests.
ConditionalDistributionSequence collapse_top_k(const std::string& response_body, int top_k);

}  // namespace notai
