#pragma once

#include <memory>
#include <optional>
#include <string>

#include "notai/unicode_text.hpp"

namespace notai {

namespace detail {
class InFlightLimit;
}

enum class NeuralSource { Remote, Precomputed, Stub };

std::string_view neural_source_name(NeuralSource s) noexcept;

// AI-class probability from a neural detector.
struct NeuralScore {
  double value = 0.0;  // in [0,1]
  NeuralSource source = NeuralSource::Stub;
  std::string model_id;
};

class NeuralScorer {
 public:
  virtual ~NeuralScorer() = default;
  virtual NeuralScore score(const Document& doc) const = 0;
  virtual std::string identity() const = 0;
};

// Remote classifier. Request {"text": str}; response {"probability_ai": num}.
// A finite value outside [0,1] is clamped and logged; NaN, infinities and
// non-numbers raise Error{OutOfRange}.
class RemoteNeuralScorer final : public NeuralScorer {
 public:
  struct Config {
    std::string endpoint;
    int timeout_ms = 10000;
    std::string model_id = "remote";
    int max_in_flight = 8;
  };

  explicit RemoteNeuralScorer(Config config);
  ~RemoteNeuralScorer() override;

  // Reads NEURAL_ENDPOINT / NEURAL_TIMEOUT_MS; nullopt when unset.
  static std::optional<Config> config_from_env();

  NeuralScore score(const Document& doc) const override;
  std::string identity() const override;

 private:
  Config config_;
  std::unique_ptr<detail::InFlightLimit> limit_;
};

// Fixed value, for demos and tests.
class StubNeuralScorer final : public NeuralScorer {
 public:
  explicit StubNeuralScorer(double value);
  NeuralScore score(const Document&) const override;
  std::string identity() const override;

 private:
  double value_;
};

// Applies the range rules to a raw backend value.
double checked_probability(double raw);

// Convenience over score_remote's wire format; exposed for tests.
NeuralScore score_remote(const std::string& endpoint, const Document& doc, int timeout_ms);

struct DatasetRecord;

// Reads the precomputed bert_ai_score column. Throws Error{MissingColumn}
// when absent and Error{OutOfRange} when outside [0,1].
NeuralScore score_precomputed(const DatasetRecord& record);

}  // namespace notai
