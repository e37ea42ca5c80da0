#include "notai/rationale.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <memory>
#include <mutex>

#include "http_client.hpp"
#include "notai/csv.hpp"
#include "notai/error.hpp"

namespace notai {

namespace {

// Instruction block of the explainer protocol; must stay verbatim.
constexpr std::string_view kInstructions =
    "You are an explainer of the AI detector output. Given the provided context, explain why the model "
    "produced its decision. The detector aggregates multiple interpretable features using a "
    "meta-classifier. You will receive feature values and their importance scores.\n"
    "\n"
    "Task:\n"
    "1. Explain in 1-2 sentences per feature how the values support the final prediction.\n"
    "2. Keep explanations concise, non-technical, and strictly grounded in the supplied values.\n";

constexpr std::string_view kResponseSchema =
    "Return a structured JSON:\n"
    "{\n"
    "  \"top_ai_evidence\": {...},\n"
    "  \"top_human_evidence\": {...},\n"
    "  \"summary\": \"Plain-language rationale\"\n"
    "}\n";

nlohmann::ordered_json evidence_to_json(const EvidenceMap& m) {
  auto j = nlohmann::ordered_json::object();
  for (const auto& [f, v] : m) {
    j[std::string(feature_name(f))] = {{"importance_score", v.importance_score}, {"raw_value", v.raw_value}};
  }
  return j;
}

EvidenceMap evidence_from_json(const nlohmann::ordered_json& j) {
  EvidenceMap m;
  for (const auto& [k, v] : j.items()) {
    m.emplace_back(parse_feature(k),
                   EvidenceValue{v.at("importance_score").get<double>(), v.at("raw_value").get<double>()});
  }
  return m;
}

bool contains_feature(const EvidenceMap& m, Feature f) {
  for (const auto& [g, v] : m) {
    if (g == f) return true;
  }
  return false;
}

std::string strip_fences(std::string_view s) {
  const auto open = s.find('{');
  const auto close = s.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return {};
  return std::string(s.substr(open, close - open + 1));
}

std::vector<std::pair<Feature, std::string>> evidence_sentences(const nlohmann::json& j, const EvidenceMap& allowed,
                                                                std::string_view key) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedExplanation, "'" + std::string(key) + "' is not an object");
  std::vector<std::pair<Feature, std::string>> out;
  for (const auto& [name, sentence] : j.items()) {
    const auto f = feature_from_name(name);
    if (!f || !contains_feature(allowed, *f)) {
      spdlog::warn("explainer cited '{}' under {}, which is not in the request; dropped", name, key);
      continue;
    }
    if (!sentence.is_string()) {
      throw Error(ErrorCode::MalformedExplanation, "evidence for '" + name + "' is not a string");
    }
    out.emplace_back(*f, sentence.get<std::string>());
  }
  return out;
}

std::string evidence_sentence(Feature f, const EvidenceValue& v, std::string_view side) {
  std::string s(feature_label(f));
  s += " = ";
  s += format_number(v.raw_value);
  s += ", ";
  s += band_phrase(f, v.raw_value);
  s += ", which supports the ";
  s += side;
  s += " decision.";
  return s;
}

std::string_view display_label(Label l) { return l == Label::Ai ? "AI" : "human"; }

}  // namespace

std::string_view rationale_source_name(RationaleSource s) noexcept {
  return s == RationaleSource::Llm ? "llm" : "template";
}

void ExplainRequest::validate() const {
  if (!(probability_ai >= 0.0 && probability_ai <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "probability_ai must lie in [0,1]");
  }
  for (const auto& [f, v] : features_positive) {
    if (!(v.importance_score > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "positive evidence needs importance > 0");
    }
    if (!std::isfinite(v.raw_value)) throw Error(ErrorCode::InvalidArgument, "raw values must be finite");
  }
  for (const auto& [f, v] : features_negative) {
    if (!(v.importance_score < 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "negative evidence needs importance < 0");
    }
    if (!std::isfinite(v.raw_value)) throw Error(ErrorCode::InvalidArgument, "raw values must be finite");
  }
}

nlohmann::ordered_json request_to_json(const ExplainRequest& req) {
  nlohmann::ordered_json j;
  j["raw_text"] = req.raw_text;
  j["label"] = std::string(label_name(req.label));
  j["probability_ai"] = req.probability_ai;
  j["features_positive"] = evidence_to_json(req.features_positive);
  j["features_negative"] = evidence_to_json(req.features_negative);
  return j;
}

ExplainRequest request_from_json(const nlohmann::ordered_json& j) {
  ExplainRequest r;
  try {
    r.raw_text = j.at("raw_text").get<std::string>();
    r.label = parse_label(j.at("label").get<std::string>());
    r.probability_ai = j.at("probability_ai").get<double>();
    r.features_positive = evidence_from_json(j.at("features_positive"));
    r.features_negative = evidence_from_json(j.at("features_negative"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed explain request: ") + e.what());
  }
  r.validate();
  return r;
}

nlohmann::ordered_json rationale_to_json(const Rationale& r) {
  nlohmann::ordered_json j;
  auto side = [](const auto& items) {
    auto o = nlohmann::ordered_json::object();
    for (const auto& [f, s] : items) o[std::string(feature_name(f))] = s;
    return o;
  };
  j["top_ai_evidence"] = side(r.top_ai_evidence);
  j["top_human_evidence"] = side(r.top_human_evidence);
  j["summary"] = r.summary;
  j["source"] = std::string(rationale_source_name(r.source));
  return j;
}

std::string build_prompt(const ExplainRequest& req) {
  std::string p(kInstructions);
  p += "\n";
  p += kResponseSchema;
  p += "\nInput:\n";
  p += request_to_json(req).dump(2);
  p += "\n";
  return p;
}

std::optional<ExplainerConfig> ExplainerConfig::from_env() {
  const char* endpoint = std::getenv("EXPLAINER_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') return std::nullopt;
  ExplainerConfig c;
  c.endpoint = endpoint;
  if (const char* m = std::getenv("EXPLAINER_MODEL")) c.model = m;
  if (const char* k = std::getenv("EXPLAINER_API_KEY")) c.api_key = k;
  if (const char* t = std::getenv("EXPLAINER_TIMEOUT_MS"); t != nullptr && *t != '\0') {
    c.timeout_ms = std::max(1, std::atoi(t));
  }
  return c;
}

Rationale parse_explanation(const ExplainRequest& req, std::string_view content) {
  const std::string body = strip_fences(content);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedExplanation, "explainer reply is not JSON");
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedExplanation, "explainer reply is not an object");
  for (const char* key : {"top_ai_evidence", "top_human_evidence", "summary"}) {
    if (!j.contains(key)) throw Error(ErrorCode::MalformedExplanation, std::string("reply missing '") + key + "'");
  }
  if (!j["summary"].is_string() || j["summary"].get<std::string>().empty()) {
    throw Error(ErrorCode::MalformedExplanation, "reply summary must be a non-empty string");
  }
  Rationale r;
  r.source = RationaleSource::Llm;
  r.top_ai_evidence = evidence_sentences(j["top_ai_evidence"], req.features_positive, "top_ai_evidence");
  r.top_human_evidence = evidence_sentences(j["top_human_evidence"], req.features_negative, "top_human_evidence");
  r.summary = j["summary"].get<std::string>();
  return r;
}

Rationale explain_llm(const ExplainRequest& req, const ExplainerConfig& cfg) {
  static std::mutex limits_mutex;
  static std::unique_ptr<detail::InFlightLimit> limit;
  {
    std::lock_guard lock(limits_mutex);
    if (!limit) limit = std::make_unique<detail::InFlightLimit>(std::max(1, cfg.max_in_flight));
  }
  nlohmann::json body;
  body["model"] = cfg.model;
  body["temperature"] = 0;
  body["max_tokens"] = cfg.max_tokens;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", build_prompt(req)}}});
  const auto reply = detail::post_json(detail::parse_endpoint(cfg.endpoint), body, cfg.timeout_ms, limit.get(),
                                       cfg.api_key);
  nlohmann::json j;
  try {
    j = detail::parse_reply(reply);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedExplanation, "explainer endpoint returned non-JSON");
  }
  std::string content;
  try {
    content = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedExplanation, "explainer reply has no choices[0].message.content");
  }
  return parse_explanation(req, content);
}

Rationale explain_template(const ExplainRequest& req) {
  Rationale r;
  r.source = RationaleSource::Template;
  for (const auto& [f, v] : req.features_positive) r.top_ai_evidence.emplace_back(f, evidence_sentence(f, v, "AI"));
  for (const auto& [f, v] : req.features_negative) {
    r.top_human_evidence.emplace_back(f, evidence_sentence(f, v, "human"));
  }

  r.summary = "Classified as ";
  r.summary += display_label(req.label);
  r.summary += " with probability_ai = ";
  r.summary += format_number(req.probability_ai);
  if (req.features_positive.empty() && req.features_negative.empty()) {
    r.summary += "; decision driven by base rate, as no feature moved the score.";
    return r;
  }
  r.summary += ".";
  if (!req.features_positive.empty()) {
    r.summary += " Strongest AI-leaning signal: ";
    r.summary += feature_label(req.features_positive.front().first);
    r.summary += ".";
  }
  if (!req.features_negative.empty()) {
    r.summary += " Strongest human-leaning signal: ";
    r.summary += feature_label(req.features_negative.front().first);
    r.summary += ".";
  }
  return r;
}

}  // namespace notai
