// Template rule table. One row per feature, in canonical order: values below
// the first edge read as low, above the second as high. Phrases carry no
// digits so every number in template output comes from the request.

#include <cmath>

#include "notai/rationale.hpp"

namespace notai {

namespace {

constexpr std::array<ValueBand, kFeatureCount> kBands = {{
    // curvature: standardized, positive when the text is more predictable
    // to the proxy model than its own samples
    {-1.0, 1.0, "less predictable to the proxy language model than its own samples",
     "about as predictable to the proxy language model as its own samples",
     "more predictable to the proxy language model than its own samples"},
    {0.3, 0.7, "a low score from the neural detector", "an undecided score from the neural detector",
     "a high score from the neural detector"},
    {0.3, 0.7, "hard to read", "of ordinary readability", "easy to read"},
    {3.0, 15.0, "only a few sentences", "a moderate number of sentences", "many sentences"},
    {12.0, 25.0, "short sentences on average", "sentences of typical length", "long sentences on average"},
    {60.0, 400.0, "a short text", "a text of moderate length", "a long text"},
    {4.2, 5.2, "short words on average", "words of typical length", "long words on average"},
    {0.4, 0.6, "low lexical diversity", "moderate lexical diversity", "unusually high lexical diversity"},
    {0.3, 0.6, "few words used only once", "a moderate share of words used only once",
     "many words used only once"},
    {0.3, 0.5, "few function words", "a typical share of function words", "many function words"},
    {0.001, 0.01, "almost no stock phrases", "a few stock phrases", "frequent stock phrases"},
    {0.02, 0.08, "little repetition of word pairs", "some repetition of word pairs",
     "heavy repetition of word pairs"},
    {0.01, 0.05, "little repetition of three-word phrases", "some repetition of three-word phrases",
     "heavy repetition of three-word phrases"},
    {0.01, 0.05, "little repetition of four-word phrases", "some repetition of four-word phrases",
     "heavy repetition of four-word phrases"},
    {0.08, 0.2, "sparse punctuation", "ordinary punctuation", "dense punctuation"},
    {0.03, 0.13, "few commas", "a typical share of commas", "many commas"},
    {0.002, 0.01, "almost no semicolons or colons", "occasional semicolons or colons",
     "frequent semicolons or colons"},
}};

}  // namespace

const ValueBand& value_band(Feature f) noexcept { return kBands[index_of(f)]; }

std::string_view band_phrase(Feature f, double value) noexcept {
  const auto& b = value_band(f);
  if (std::isnan(value)) return b.mid;
  if (value < b.low_below) return b.low;
  if (value > b.high_above) return b.high;
  return b.mid;
}

}  // namespace notai
