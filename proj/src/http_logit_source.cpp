#include "notai/http_logit_source.hpp"

#include <cmath>
#include <limits>

#include "http_client.hpp"
#include "notai/error.hpp"
#include "notai/hashing.hpp"

namespace notai {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double number(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) {
    throw Error(ErrorCode::BackendProtocol, std::string("position missing numeric '") + key + "'");
  }
  return j.at(key).get<double>();
}

std::string text(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::BackendProtocol, std::string("position missing string '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

ConditionalDistributionSequence collapse_top_k(const std::string& response_body, int top_k) {
  if (top_k < 1) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendProtocol, std::string("malformed JSON: ") + e.what());
  }
  if (!body.is_object() || !body.contains("positions") || !body["positions"].is_array() ||
      body["positions"].empty()) {
    throw Error(ErrorCode::BackendProtocol, "response has no positions");
  }

  const auto k = static_cast<std::size_t>(top_k);
  ConditionalDistributionSequence seq;
  seq.vocab_size = k + 1;
  for (const auto& p : body["positions"]) {
    const std::string observed = text(p, "token");
    const double observed_lp = number(p, "logprob");
    if (!p.contains("top") || !p["top"].is_array()) {
      throw Error(ErrorCode::BackendProtocol, "position missing 'top' list");
    }
    const auto& top = p["top"];
    if (top.size() > k) throw Error(ErrorCode::BackendProtocol, "more than top_k entries returned");

    ConditionalDistributionSequence::Position pos;
    pos.logprobs.assign(k + 1, kNegInf);
    pos.observed = k;
    double mass = 0.0;
    for (std::size_t i = 0; i < top.size(); ++i) {
      const double lp = number(top[i], "logprob");
      if (!(lp <= 0.0)) throw Error(ErrorCode::BackendProtocol, "log-probability above zero");
      pos.logprobs[i] = lp;
      mass += std::exp(lp);
      if (text(top[i], "token") == observed) pos.observed = i;
    }
    if (pos.observed == k && !(observed_lp <= 0.0)) {
      throw Error(ErrorCode::BackendProtocol, "observed log-probability above zero");
    }
    pos.logprobs[k] = mass < 1.0 ? std::log1p(-mass) : kNegInf;
    if (pos.observed == k && pos.logprobs[k] == kNegInf) {
      throw Error(ErrorCode::BackendProtocol, "observed token has no probability mass");
    }
    const double z = logsumexp(pos.logprobs);
    for (double& l : pos.logprobs) l -= z;
    seq.positions.push_back(std::move(pos));
  }
  return seq;
}

HttpLogitSource::HttpLogitSource(Config config)
    : config_(std::move(config)),
      limit_(std::make_unique<detail::InFlightLimit>(std::max(1, config_.max_in_flight))) {
  detail::parse_endpoint(config_.endpoint);
  if (config_.top_k < 1) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
}

HttpLogitSource::~HttpLogitSource() = default;

HttpLogitSource::Fetched HttpLogitSource::fetch(const Document& doc) const {
  const nlohmann::json request = {
      {"model", config_.model_name}, {"text", doc.normalized}, {"top_k", config_.top_k}};
  const auto reply = detail::post_json(detail::parse_endpoint(config_.endpoint), request,
                                       config_.timeout_ms, limit_.get());
  Fetched out;
  out.sequence = collapse_top_k(reply.body, config_.top_k);
  out.response_sha256 = sha256_hex(reply.body);
  return out;
}

ConditionalDistributionSequence HttpLogitSource::distributions(const Document& doc) const {
  return fetch(doc).sequence;
}

std::string HttpLogitSource::identity() const {
  return "http:" + config_.model_name + "@" + config_.endpoint + ":top_k=" +
         std::to_string(config_.top_k);
}

}  // namespace notai
