#include "notai/gateway.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>

#include "notai/csv.hpp"
#include "notai/textstats.hpp"

namespace notai {

namespace {

std::size_t code_point_count(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

nlohmann::ordered_json evidence_json(const std::vector<EvidenceItem>& items,
                                     const std::array<FeatureReport, kFeatureCount>& reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : items) {
    arr.push_back({{"feature", std::string(feature_name(e.feature))},
                   {"raw_value", e.raw_value},
                   {"phi", e.phi},
                   {"normalized_phi", reports[index_of(e.feature)].normalized_phi}});
  }
  return arr;
}

}  // namespace

AnalyzeRequest parse_analyze_request(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
  if (!j.contains("text") || !j["text"].is_string()) {
    throw Error(ErrorCode::InvalidArgument, "'text' must be a string");
  }
  AnalyzeRequest req;
  req.text = j["text"].get<std::string>();
  if (j.contains("disabled_features")) {
    const auto& d = j["disabled_features"];
    if (!d.is_array()) throw Error(ErrorCode::InvalidArgument, "'disabled_features' must be an array");
    for (const auto& name : d) {
      if (!name.is_string()) throw Error(ErrorCode::InvalidArgument, "feature names must be strings");
      req.disabled.insert(parse_feature(name.get<std::string>()));
    }
  }
  if (j.contains("explain")) {
    if (!j["explain"].is_boolean()) throw Error(ErrorCode::InvalidArgument, "'explain' must be a boolean");
    req.explain = j["explain"].get<bool>();
  }
  return req;
}

std::vector<Feature> EvidenceBundle::imputed_features() const {
  std::vector<Feature> out;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (features[f].imputed) out.push_back(static_cast<Feature>(f));
  }
  return out;
}

nlohmann::ordered_json EvidenceBundle::to_json() const {
  nlohmann::ordered_json j;
  j["label"] = std::string(label_name(label));
  j["probability_ai"] = probability_ai;
  j["margin"] = margin;
  j["base_value"] = base_value;
  auto feats = nlohmann::ordered_json::object();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto& r = features[f];
    feats[std::string(kFeatureNames[f])] = {{"raw_value", r.raw_value},
                                            {"phi", r.phi},
                                            {"normalized_phi", r.normalized_phi},
                                            {"imputed", r.imputed},
                                            {"disabled", r.disabled}};
  }
  j["features"] = std::move(feats);
  j["top_ai_evidence"] = evidence_json(top_ai_evidence, features);
  j["top_human_evidence"] = evidence_json(top_human_evidence, features);
  auto imputed = nlohmann::ordered_json::array();
  for (auto f : imputed_features()) imputed.push_back(std::string(feature_name(f)));
  j["imputed_features"] = std::move(imputed);
  if (rationale) j["rationale"] = rationale_to_json(*rationale);
  j["provenance"] = {{"model_hash", model_hash}, {"backend_ids", backend_ids}, {"timing_ms", timing_ms}};
  return j;
}

Gateway::Gateway(TreeEnsemble model, Lexicons lexicons, GatewayBackends backends, GatewayConfig config)
    : model_(std::move(model)),
      lexicons_(std::move(lexicons)),
      backends_(std::move(backends)),
      config_(config),
      model_hash_(notai::model_hash(model_)) {
  model_.validate();
  if (!model_.provenance.lexicon_hash.empty() && model_.provenance.lexicon_hash != lexicons_.hash()) {
    spdlog::warn("model was trained with different lexicons ({} vs {})", model_.provenance.lexicon_hash,
                 lexicons_.hash());
  }
}

std::vector<std::string> Gateway::backend_ids() const {
  std::vector<std::string> ids;
  if (backends_.logits) ids.push_back(backends_.logits->identity());
  if (backends_.fallback_logits) ids.push_back(backends_.fallback_logits->identity());
  if (backends_.neural) ids.push_back(backends_.neural->identity());
  if (backends_.explainer) ids.push_back("explainer:" + backends_.explainer->model);
  return ids;
}

Gateway::Extraction Gateway::extract(const std::string& text) const {
  if (code_point_count(text) > config_.max_chars) {
    throw Error(ErrorCode::TextTooLong,
                "text exceeds the limit of " + std::to_string(config_.max_chars) + " characters");
  }
  const Document doc = Document::from_text(text);
  Extraction ex;
  ex.values = extract_stylometrics(tokenize(doc), lexicons_);

  auto impute = [&](Feature f) {
    ex.values[f] = model_.feature_medians[index_of(f)];
    ex.imputed.insert(f);
  };

  bool have_curvature = false;
  for (const auto* src : {backends_.logits.get(), backends_.fallback_logits.get()}) {
    if (src == nullptr || have_curvature) continue;
    try {
      ex.values[Feature::curvature] = cpc_score(src->distributions(doc)).score;
      have_curvature = true;
    } catch (const Error& e) {
      spdlog::warn("curvature from {} unavailable: {}", src->identity(), e.what());
    }
  }
  if (!have_curvature) impute(Feature::curvature);

  bool have_neural = false;
  if (backends_.neural) {
    try {
      ex.values[Feature::bert_ai_score] = backends_.neural->score(doc).value;
      have_neural = true;
    } catch (const Error& e) {
      spdlog::warn("neural score unavailable: {}", e.what());
    }
  }
  if (!have_neural) impute(Feature::bert_ai_score);
  return ex;
}

FeatureVector Gateway::apply_mask(FeatureVector x, const FeatureSet& disabled) const {
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (disabled.contains(f)) x.at(f) = model_.feature_medians[f];
  }
  return x;
}

EvidenceBundle Gateway::analyze(const AnalyzeRequest& req) const {
  const auto start = std::chrono::steady_clock::now();
  const Extraction ex = extract(req.text);
  const FeatureVector x = apply_mask(ex.values, req.disabled);

  const Attribution attr = tree_shap(model_, x);
  const double residual = attr.base_value + attr.phi_sum() - attr.margin;
  if (std::abs(residual) > 1e-6) spdlog::error("attribution additivity off by {}", residual);

  EvidenceBundle b;
  b.margin = attr.margin;
  b.base_value = attr.base_value;
  b.probability_ai = sigmoid(attr.margin);
  b.label = b.probability_ai >= config_.threshold ? Label::Ai : Label::Human;
  const auto norm = attr.normalized_phi();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    auto& r = b.features[f];
    r.raw_value = x.at(f);
    r.phi = attr.phi[f];
    r.normalized_phi = norm[f];
    r.disabled = req.disabled.contains(f);
    r.imputed = ex.imputed.contains(f) && !r.disabled;
  }
  const auto top = top_evidence(attr, config_.top_k);
  b.top_ai_evidence = top.positive;
  b.top_human_evidence = top.negative;

  if (req.explain) {
    ExplainRequest er;
    er.raw_text = req.text;
    er.label = b.label;
    er.probability_ai = b.probability_ai;
    for (const auto& e : top.positive) er.features_positive.emplace_back(e.feature, EvidenceValue{e.phi, e.raw_value});
    for (const auto& e : top.negative) er.features_negative.emplace_back(e.feature, EvidenceValue{e.phi, e.raw_value});
    if (backends_.explainer) {
      try {
        b.rationale = explain_llm(er, *backends_.explainer);
      } catch (const Error& e) {
        spdlog::warn("explainer failed ({}); using template rationale", e.what());
      }
    }
    if (!b.rationale) b.rationale = explain_template(er);
  }

  b.model_hash = model_hash_;
  b.backend_ids = backend_ids();
  b.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return b;
}

nlohmann::ordered_json Gateway::features_json() const {
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto feat = static_cast<Feature>(f);
    arr.push_back({{"name", std::string(feature_name(feat))},
                   {"label", std::string(feature_label(feat))},
                   {"description", std::string(feature_description(feat))},
                   {"median", model_.feature_medians[f]}});
  }
  return {{"features", arr}};
}

nlohmann::ordered_json Gateway::model_json() const {
  nlohmann::ordered_json j;
  j["model_hash"] = model_hash_;
  j["trees"] = model_.trees.size();
  j["base_score"] = model_.base_score;
  j["lexicon_hash"] = model_.provenance.lexicon_hash;
  j["training_backend_ids"] = model_.provenance.backend_ids;
  j["data_hash"] = model_.provenance.data_hash;
  j["serving_backend_ids"] = backend_ids();
  return j;
}

nlohmann::ordered_json Gateway::health_json() const {
  nlohmann::ordered_json j;
  j["status"] = "ok";
  j["model_hash"] = model_hash_;
  j["backends"] = {{"logits", backends_.logits ? backends_.logits->identity() : std::string()},
                   {"fallback_logits", backends_.fallback_logits ? backends_.fallback_logits->identity() : std::string()},
                   {"neural", backends_.neural ? backends_.neural->identity() : std::string()},
                   {"explainer", backends_.explainer ? backends_.explainer->endpoint : std::string()}};
  return j;
}

// --- HTTP glue --------------------------------------------------------------

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::TextTooLong: return 413;
    case ErrorCode::EmptyDocument: return 422;
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownFeature: return 400;
    case ErrorCode::BackendUnavailable: return 503;
    default: return 500;
  }
}

std::string error_body(std::string_view code, std::string_view message) {
  nlohmann::ordered_json j;
  j["code"] = std::string(code);
  j["message"] = std::string(message);
  return j.dump();
}

HttpResult handle_analyze(const Gateway& gateway, const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return {400, error_body("malformed_json", "request body is not valid JSON")};
  }
  try {
    const auto req = parse_analyze_request(j);
    return {200, gateway.analyze(req).to_json().dump()};
  } catch (const Error& e) {
    return {http_status_for(e.code()), error_body(error_code_name(e.code()), e.what())};
  }
}

}  // namespace notai
