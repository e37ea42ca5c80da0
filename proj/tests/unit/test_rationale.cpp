#include <algorithm>
#include <cctype>
#include <cmath>

#include "doctest.h"
#include "notai/csv.hpp"
#include "notai/error.hpp"
#include "notai/rationale.hpp"
#include "support.hpp"

using namespace notai;
using namespace notai::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

ExplainRequest request() {
  ExplainRequest r;
  r.raw_text = "An example paragraph.";
  r.label = Label::Ai;
  r.probability_ai = 0.875;
  r.features_positive = {{Feature::curvature, {1.5, 2.25}}, {Feature::comma_count, {0.25, 0.15}}};
  r.features_negative = {{Feature::type_token_ratio, {-0.5, 0.7}}};
  return r;
}

bool has_digit(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

ExplainRequest random_request(SplitMix64& rng) {
  ExplainRequest r;
  r.raw_text = random_text(rng);
  r.probability_ai = rng.uniform();
  r.label = r.probability_ai >= 0.5 ? Label::Ai : Label::Human;
  std::vector<int> feats(kFeatureCount);
  for (int i = 0; i < static_cast<int>(kFeatureCount); ++i) feats[static_cast<std::size_t>(i)] = i;
  shuffle(feats, rng);
  const auto np = rng.bounded(4);
  const auto nn = rng.bounded(4);
  for (std::size_t i = 0; i < np + nn; ++i) {
    const auto f = static_cast<Feature>(feats[i]);
    const double raw = rng.normal() * std::pow(10.0, static_cast<double>(rng.bounded(5)) - 2.0);
    const double phi = 0.01 + rng.uniform();
    if (i < np) r.features_positive.emplace_back(f, EvidenceValue{phi, raw});
    else r.features_negative.emplace_back(f, EvidenceValue{-phi, raw});
  }
  return r;
}

}  // namespace

TEST_CASE("prompt carries instructions, schema and request") {
  const auto req = request();
  const auto p = build_prompt(req);
  CHECK(p.rfind("You are an explainer of the AI detector output.", 0) == 0);
  CHECK(p.find("Keep explanations concise, non-technical, and strictly grounded in the supplied values.") !=
        std::string::npos);
  CHECK(p.find("\"top_ai_evidence\"") != std::string::npos);
  CHECK(p.find("\"summary\"") != std::string::npos);
  CHECK(p.find(request_to_json(req).dump(2)) != std::string::npos);
}

TEST_CASE("request json round trip and validation") {
  const auto req = request();
  const auto j = request_to_json(req);
  CHECK(j["label"] == "ai");
  CHECK(j["features_positive"]["curvature"]["importance_score"] == 1.5);
  CHECK(j["features_positive"]["curvature"]["raw_value"] == 2.25);
  const auto back = request_from_json(nlohmann::ordered_json::parse(j.dump()));
  CHECK(request_to_json(back).dump() == j.dump());

  auto bad = req;
  bad.probability_ai = 1.5;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  bad = req;
  bad.features_negative[0].second.importance_score = 0.1;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  bad = req;
  bad.features_positive[0].second.raw_value = std::nan("");
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("template rationale") {
  const auto req = request();
  const auto r = explain_template(req);
  CHECK(r.source == RationaleSource::Template);
  CHECK(r == explain_template(req));
  REQUIRE(r.top_ai_evidence.size() == 2);
  CHECK(r.top_ai_evidence[0].first == Feature::curvature);
  CHECK(r.top_ai_evidence[0].second.find(std::string(feature_label(Feature::curvature)) + " = 2.25, ") == 0);
  CHECK(r.top_ai_evidence[0].second.find("supports the AI decision.") != std::string::npos);
  REQUIRE(r.top_human_evidence.size() == 1);
  CHECK(r.top_human_evidence[0].second.find("supports the human decision.") != std::string::npos);
  CHECK(r.summary.rfind("Classified as AI with probability_ai = 0.875.", 0) == 0);

  auto empty = req;
  empty.label = Label::Human;
  empty.probability_ai = 0.25;
  empty.features_positive.clear();
  empty.features_negative.clear();
  CHECK(explain_template(empty).summary ==
        "Classified as human with probability_ai = 0.25; decision driven by base rate, as no feature moved the score.");

  const auto j = rationale_to_json(r);
  CHECK(j["source"] == "template");
  CHECK(j["top_ai_evidence"].contains("curvature"));
}

TEST_CASE("property: template output is grounded in the request") {
  SplitMix64 rng(51);
  for (int i = 0; i < 1000; ++i) {
    const auto req = random_request(rng);
    const auto r = explain_template(req);
    CHECK(r.top_ai_evidence.size() == req.features_positive.size());
    CHECK(r.top_human_evidence.size() == req.features_negative.size());
    auto check_side = [](const EvidenceMap& in, const std::vector<std::pair<Feature, std::string>>& out) {
      for (std::size_t k = 0; k < out.size(); ++k) {
        CHECK(out[k].first == in[k].first);
        std::string s = out[k].second;
        const std::string head = std::string(feature_label(in[k].first)) + " = " + format_number(in[k].second.raw_value);
        REQUIRE(s.rfind(head, 0) == 0);
        CHECK_FALSE(has_digit(s.substr(head.size())));
      }
    };
    check_side(req.features_positive, r.top_ai_evidence);
    check_side(req.features_negative, r.top_human_evidence);
    std::string summary = r.summary;
    const auto num = format_number(req.probability_ai);
    const auto at = summary.find(num);
    REQUIRE(at != std::string::npos);
    summary.erase(at, num.size());
    CHECK_FALSE(has_digit(summary));
  }
}

TEST_CASE("reply validation") {
  const auto req = request();
  const auto good = parse_explanation(
      req, R"(Sure! {"top_ai_evidence": {"curvature": "a", "token_count": "b"}, "top_human_evidence": {}, "summary": "s"})");
  CHECK(good.top_ai_evidence.size() == 1);
  CHECK(good.top_human_evidence.empty());
  CHECK(good.source == RationaleSource::Llm);

  // Citing a positive feature on the human side is not grounded.
  const auto swapped = parse_explanation(
      req, R"({"top_ai_evidence": {}, "top_human_evidence": {"curvature": "x"}, "summary": "s"})");
  CHECK(swapped.top_human_evidence.empty());

  for (const char* bad : {R"({"top_ai_evidence": {}, "summary": "s"})",
                          R"({"top_ai_evidence": {}, "top_human_evidence": {}, "summary": ""})",
                          R"({"top_ai_evidence": {"curvature": 3}, "top_human_evidence": {}, "summary": "s"})",
                          R"({"top_ai_evidence": [], "top_human_evidence": {}, "summary": "s"})",
                          R"(no json here)", R"([1, 2])"}) {
    CHECK(code_of([&] { parse_explanation(req, bad); }) == ErrorCode::MalformedExplanation);
  }
}

TEST_CASE("value bands") {
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto feat = static_cast<Feature>(f);
    const auto& b = value_band(feat);
    CHECK(b.low_below < b.high_above);
    CHECK(band_phrase(feat, b.low_below - 1e-9) == b.low);
    CHECK(band_phrase(feat, b.high_above + 1e-9) == b.high);
    CHECK(band_phrase(feat, (b.low_below + b.high_above) / 2) == b.mid);
    CHECK(band_phrase(feat, std::nan("")) == b.mid);
    CHECK_FALSE(has_digit(b.low));
    CHECK_FALSE(has_digit(b.mid));
    CHECK_FALSE(has_digit(b.high));
    CHECK_FALSE(has_digit(feature_label(feat)));
  }
}
