#include "notai/neuralscore.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "http_client.hpp"
#include "notai/dataset_record.hpp"
#include "notai/error.hpp"

namespace notai {

std::string_view neural_source_name(NeuralSource s) noexcept {
  switch (s) {
    case NeuralSource::Remote: return "remote";
    case NeuralSource::Precomputed: return "precomputed";
    case NeuralSource::Stub: return "stub";
  }
  return "stub";
}

double checked_probability(double raw) {
  if (!std::isfinite(raw)) {
    throw Error(ErrorCode::OutOfRange, "neural backend returned a non-finite probability");
  }
  if (raw < 0.0 || raw > 1.0) {
    spdlog::warn("neural backend returned {} outside [0,1]; clamping", raw);
    return std::clamp(raw, 0.0, 1.0);
  }
  return raw;
}

RemoteNeuralScorer::RemoteNeuralScorer(Config config)
    : config_(std::move(config)),
      limit_(std::make_unique<detail::InFlightLimit>(std::max(1, config_.max_in_flight))) {
  detail::parse_endpoint(config_.endpoint);
}

RemoteNeuralScorer::~RemoteNeuralScorer() = default;

std::optional<RemoteNeuralScorer::Config> RemoteNeuralScorer::config_from_env() {
  const char* endpoint = std::getenv("NEURAL_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') return std::nullopt;
  Config c;
  c.endpoint = endpoint;
  if (const char* t = std::getenv("NEURAL_TIMEOUT_MS"); t != nullptr && *t != '\0') {
    c.timeout_ms = std::max(1, std::atoi(t));
  }
  return c;
}

NeuralScore RemoteNeuralScorer::score(const Document& doc) const {
  const auto reply = detail::post_json(detail::parse_endpoint(config_.endpoint),
                                       {{"text", doc.normalized}}, config_.timeout_ms, limit_.get());
  const auto body = detail::parse_reply(reply);
  if (!body.is_object() || !body.contains("probability_ai")) {
    throw Error(ErrorCode::BackendProtocol, "response missing 'probability_ai'");
  }
  const auto& p = body["probability_ai"];
  if (!p.is_number()) {
    throw Error(ErrorCode::OutOfRange, "probability_ai is not a number");
  }
  return {checked_probability(p.get<double>()), NeuralSource::Remote, config_.model_id};
}

std::string RemoteNeuralScorer::identity() const {
  return "remote:" + config_.model_id + "@" + config_.endpoint;
}

StubNeuralScorer::StubNeuralScorer(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "stub neural score must lie in [0,1]");
  }
}

NeuralScore StubNeuralScorer::score(const Document&) const {
  return {value_, NeuralSource::Stub, "stub"};
}

std::string StubNeuralScorer::identity() const { return "stub:" + std::to_string(value_); }

NeuralScore score_remote(const std::string& endpoint, const Document& doc, int timeout_ms) {
  RemoteNeuralScorer::Config c;
  c.endpoint = endpoint;
  c.timeout_ms = timeout_ms;
  return RemoteNeuralScorer(c).score(doc);
}

NeuralScore score_precomputed(const DatasetRecord& record) {
  const auto& v = record.features[index_of(Feature::bert_ai_score)];
  if (!v) throw Error(ErrorCode::MissingColumn, "record has no bert_ai_score column");
  if (!(*v >= 0.0 && *v <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "precomputed bert_ai_score outside [0,1]");
  }
  return {*v, NeuralSource::Precomputed, "precomputed"};
}

}  // namespace notai
