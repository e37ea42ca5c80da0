#include "notai/features.hpp"

#include <string>

#include "notai/error.hpp"

namespace notai {

namespace {

struct FeatureDoc {
  std::string_view label;
  std::string_view description;
};

constexpr std::array<FeatureDoc, kFeatureCount> kDocs = {{
    {"Probability curvature",
     "Observed log-likelihood under the proxy language model, standardized by the "
     "mean and spread expected when sampling from the same model."},
    {"Neural detector score", "AI-class probability from the neural encoder detector."},
    {"Flesch reading ease", "Flesch reading ease clamped to [0,100] and scaled to [0,1]."},
    {"Sentence count", "Number of sentences."},
    {"Average sentence length", "Word tokens per sentence."},
    {"Token count", "Number of word tokens."},
    {"Average word length", "Mean word length in characters."},
    {"Type-token ratio", "Distinct word types divided by word tokens."},
    {"Hapax legomena ratio", "Share of word tokens whose type occurs exactly once."},
    {"Stopword ratio", "Share of word tokens that are stopwords."},
    {"Cliche ratio", "Share of word tokens covered by stock phrases."},
    {"Max bigram frequency", "Count of the most frequent word bigram over all bigrams."},
    {"Max trigram frequency", "Count of the most frequent word trigram over all trigrams."},
    {"Max four-gram frequency", "Count of the most frequent word 4-gram over all 4-grams."},
    {"Punctuation share", "Punctuation tokens as a fraction of all tokens."},
    {"Comma share", "Commas as a fraction of all tokens."},
    {"Semicolon and colon share", "Semicolons and colons as a fraction of all tokens."},
}};

}  // namespace

std::string_view feature_name(Feature f) noexcept { return kFeatureNames[index_of(f)]; }
std::string_view feature_label(Feature f) noexcept { return kDocs[index_of(f)].label; }
std::string_view feature_description(Feature f) noexcept {
  return kDocs[index_of(f)].description;
}

std::optional<Feature> feature_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  return std::nullopt;
}

Feature parse_feature(std::string_view name) {
  if (auto f = feature_from_name(name)) return *f;
  throw Error(ErrorCode::UnknownFeature, "unknown feature '" + std::string(name) + "'");
}

FeatureSet FeatureSet::all() {
  FeatureSet s;
  s.bits_.fill(true);
  return s;
}

std::size_t FeatureSet::size() const noexcept {
  std::size_t n = 0;
  for (bool b : bits_) n += b ? 1 : 0;
  return n;
}

}  // namespace notai
