#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "notai/attribution.hpp"
#include "notai/boostedtree.hpp"
#include "notai/curvature.hpp"
#include "notai/error.hpp"
#include "notai/features.hpp"
#include "notai/lexicons.hpp"
#include "notai/neuralscore.hpp"
#include "notai/rationale.hpp"

namespace notai {

struct AnalyzeRequest {
  std::string text;
  FeatureSet disabled;
  bool explain = true;
};

// {"text": str, "disabled_features": [names], "explain": bool}. Throws
// Error{InvalidArgument} and Error{UnknownFeature}.
AnalyzeRequest parse_analyze_request(const nlohmann::json& j);

struct FeatureReport {
  double raw_value = 0.0;  // value that was scored
  double phi = 0.0;
  double normalized_phi = 0.0;
  bool imputed = false;
  bool disabled = false;
};

struct EvidenceBundle {
  Label label = Label::Human;
  double probability_ai = 0.0;
  double margin = 0.0;
  double base_value = 0.0;
  std::array<FeatureReport, kFeatureCount> features{};
  std::vector<EvidenceItem> top_ai_evidence;
  std::vector<EvidenceItem> top_human_evidence;
  std::optional<Rationale> rationale;
  std::string model_hash;
  std::vector<std::string> backend_ids;
  double timing_ms = 0.0;

  std::vector<Feature> imputed_features() const;
  nlohmann::ordered_json to_json() const;
};

struct GatewayConfig {
  std::size_t max_chars = 50000;
  double threshold = 0.5;
  std::size_t top_k = 3;
};

struct GatewayBackends {
  std::shared_ptr<const LogitSource> logits;           // primary curvature backend
  std::shared_ptr<const LogitSource> fallback_logits;  // used when the primary fails
  std::shared_ptr<const NeuralScorer> neural;
  std::optional<ExplainerConfig> explainer;            // template rationale without one
};

// Extract -> decide -> explain. Immutable after construction, so analyze may
// run concurrently.
class Gateway {
 public:
  Gateway(TreeEnsemble model, Lexicons lexicons, GatewayBackends backends, GatewayConfig config = {});

  // Throws Error{EmptyDocument}, Error{TextTooLong}. Backend failures are
  // absorbed by imputing the training median and flagging the feature.
  EvidenceBundle analyze(const AnalyzeRequest& req) const;

  struct Extraction {
    FeatureVector values;
    FeatureSet imputed;
  };
  Extraction extract(const std::string& text) const;

  // Disabled entries replaced by the model's training medians.
  FeatureVector apply_mask(FeatureVector x, const FeatureSet& disabled) const;

  const TreeEnsemble& model() const noexcept { return model_; }
  const std::string& model_hash() const noexcept { return model_hash_; }
  std::vector<std::string> backend_ids() const;

  nlohmann::ordered_json features_json() const;
  nlohmann::ordered_json model_json() const;
  nlohmann::ordered_json health_json() const;

 private:
  TreeEnsemble model_;
  Lexicons lexicons_;
  GatewayBackends backends_;
  GatewayConfig config_;
  std::string model_hash_;
};

// HTTP status and JSON body for a raw POST /analyze body.
struct HttpResult {
  int status = 200;
  std::string body;
};
HttpResult handle_analyze(const Gateway& gateway, const std::string& body);
int http_status_for(ErrorCode code) noexcept;
std::string error_body(std::string_view code, std::string_view message);

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;               // 0 picks a free port
  std::filesystem::path static_dir;  // served at `/` when it exists
};

class Server {
 public:
  Server(const Gateway& gateway, ServerConfig config);
  ~Server();

  // Binds and returns the port; throws Error{Io} when binding fails.
  int bind();
  // Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace notai
