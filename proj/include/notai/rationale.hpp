#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "notai/dataset_record.hpp"
#include "notai/features.hpp"

namespace notai {

struct EvidenceValue {
  double importance_score = 0.0;  // phi
  double raw_value = 0.0;
};

using EvidenceMap = std::vector<std::pair<Feature, EvidenceValue>>;

struct ExplainRequest {
  std::string raw_text;
  Label label = Label::Human;
  double probability_ai = 0.0;
  EvidenceMap features_positive;  // importance > 0
  EvidenceMap features_negative;  // importance < 0

  // Throws Error{InvalidArgument}.
  void validate() const;
};

enum class RationaleSource { Llm, Template };
std::string_view rationale_source_name(RationaleSource s) noexcept;

struct Rationale {
  std::vector<std::pair<Feature, std::string>> top_ai_evidence;
  std::vector<std::pair<Feature, std::string>> top_human_evidence;
  std::string summary;
  RationaleSource source = RationaleSource::Template;

  friend bool operator==(const Rationale&, const Rationale&) = default;
};

nlohmann::ordered_json request_to_json(const ExplainRequest& req);
ExplainRequest request_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json rationale_to_json(const Rationale& r);

// Instruction block followed by the serialized request.
std::string build_prompt(const ExplainRequest& req);

struct ExplainerConfig {
  std::string endpoint;  // chat-completions URL
  std::string model;
  std::string api_key;
  int timeout_ms = 30000;
  int max_tokens = 600;
  int max_in_flight = 4;

  // EXPLAINER_ENDPOINT, EXPLAINER_MODEL, EXPLAINER_API_KEY,
  // EXPLAINER_TIMEOUT_MS; nullopt without an endpoint.
  static std::optional<ExplainerConfig> from_env();
};

// Chat-completions call at temperature 0. Throws Error{BackendUnavailable}
// and Error{MalformedExplanation}.
Rationale explain_llm(const ExplainRequest& req, const ExplainerConfig& cfg);

// Validates a model reply (code fences allowed) against the request. Keys
// missing from the request's evidence are dropped. Throws
// Error{MalformedExplanation}.
Rationale parse_explanation(const ExplainRequest& req, std::string_view content);

// Deterministic rule-table rationale; never fails on a valid request.
Rationale explain_template(const ExplainRequest& req);

// --- rule table ---------------------------------------------------------

struct ValueBand {
  double low_below;   // value < low_below is "low"
  double high_above;  // value > high_above is "high"
  std::string_view low;
  std::string_view mid;
  std::string_view high;
};

const ValueBand& value_band(Feature f) noexcept;
std::string_view band_phrase(Feature f, double value) noexcept;

}  // namespace notai
