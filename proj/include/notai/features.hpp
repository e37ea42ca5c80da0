#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace notai {

inline constexpr std::size_t kFeatureCount = 17;

// Canonical feature order. The snake_case names are the wire/model contract.
enum class Feature : std::size_t {
  curvature,
  bert_ai_score,
  flesch_reading_ease,
  sentence_count,
  avg_sentence_length,
  token_count,
  avg_word_length,
  type_token_ratio,
  hapax_legomena_ratio,
  stopword_ratio,
  cliche_ratio,
  max_freq_2gram,
  max_freq_3gram,
  max_freq_4gram,
  punctuation_count,
  comma_count,
  semicolon_and_colon_count,
};

constexpr std::size_t index_of(Feature f) noexcept { return static_cast<std::size_t>(f); }

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "curvature",          "bert_ai_score",       "flesch_reading_ease",
    "sentence_count",     "avg_sentence_length", "token_count",
    "avg_word_length",    "type_token_ratio",    "hapax_legomena_ratio",
    "stopword_ratio",     "cliche_ratio",        "max_freq_2gram",
    "max_freq_3gram",     "max_freq_4gram",      "punctuation_count",
    "comma_count",        "semicolon_and_colon_count",
};

std::string_view feature_name(Feature f) noexcept;
std::string_view feature_label(Feature f) noexcept;
std::string_view feature_description(Feature f) noexcept;
std::optional<Feature> feature_from_name(std::string_view name) noexcept;

// Throws Error{UnknownFeature}.
Feature parse_feature(std::string_view name);

// The 15 features computed from the text alone.
inline constexpr std::array<Feature, 15> kStylometricFeatures = {
    Feature::flesch_reading_ease, Feature::sentence_count,
    Feature::avg_sentence_length, Feature::token_count,
    Feature::avg_word_length,     Feature::type_token_ratio,
    Feature::hapax_legomena_ratio, Feature::stopword_ratio,
    Feature::cliche_ratio,        Feature::max_freq_2gram,
    Feature::max_freq_3gram,      Feature::max_freq_4gram,
    Feature::punctuation_count,   Feature::comma_count,
    Feature::semicolon_and_colon_count,
};

class FeatureVector {
 public:
  FeatureVector() { values_.fill(0.0); }
  explicit FeatureVector(const std::array<double, kFeatureCount>& values) : values_(values) {}

  double& operator[](Feature f) noexcept { return values_[index_of(f)]; }
  double operator[](Feature f) const noexcept { return values_[index_of(f)]; }
  double& at(std::size_t i) { return values_.at(i); }
  double at(std::size_t i) const { return values_.at(i); }

  const std::array<double, kFeatureCount>& values() const noexcept { return values_; }
  std::array<double, kFeatureCount>& values() noexcept { return values_; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::array<double, kFeatureCount> values_;
};

// A subset of the canonical features, e.g. an ablation family or a mask.
class FeatureSet {
 public:
  FeatureSet() { bits_.fill(false); }
  static FeatureSet all();

  void insert(Feature f) noexcept { bits_[index_of(f)] = true; }
  void erase(Feature f) noexcept { bits_[index_of(f)] = false; }
  bool contains(Feature f) const noexcept { return bits_[index_of(f)]; }
  bool contains(std::size_t i) const noexcept { return bits_[i]; }
  std::size_t size() const noexcept;
  bool empty() const noexcept { return size() == 0; }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::array<bool, kFeatureCount> bits_;
};

}  // namespace notai
