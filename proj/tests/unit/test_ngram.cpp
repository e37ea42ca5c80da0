#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "notai/error.hpp"
#include "notai/ngram_lm.hpp"
#include "support.hpp"

using namespace notai;
using namespace notai::testing;

namespace {

std::vector<Document> docs(std::initializer_list<const char*> texts) {
  std::vector<Document> out;
  for (const char* t : texts) out.push_back(Document::from_text(t));
  return out;
}

const NgramLanguageModel& small_lm() {
  static const auto lm = NgramLanguageModel::fit(
      docs({"The cat sat on the mat.", "The dog sat on the log.", "A cat and a dog met."}), 3, 0.1);
  return lm;
}

}  // namespace

TEST_CASE("fit rejects bad arguments") {
  CHECK_THROWS_AS(NgramLanguageModel::fit(docs({"a b"}), 0, 0.1), Error);
  CHECK_THROWS_AS(NgramLanguageModel::fit(docs({"a b"}), 6, 0.1), Error);
  CHECK_THROWS_AS(NgramLanguageModel::fit(docs({"a b"}), 2, 0.0), Error);
  try {
    NgramLanguageModel::fit(docs({"...", "!"}), 2, 0.1);
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCorpus);
  }
}

TEST_CASE("distributions are normalized and include sentence ends") {
  const auto& lm = small_lm();
  const auto seq = lm.distributions(Document::from_text("The cat sat. A zebra ran."));
  CHECK_NOTHROW(seq.validate());
  // Six words plus two sentence ends.
  CHECK(seq.positions.size() == 8);
  CHECK(seq.vocab_size == lm.vocab_size());
  CHECK(seq.positions[3].observed == NgramLanguageModel::kEos);
  CHECK(seq.positions[5].observed == NgramLanguageModel::kUnk);
}

TEST_CASE("seen contexts use the full order") {
  const auto& lm = small_lm();
  const std::vector<std::uint32_t> seen = {lm.id_of("the"), lm.id_of("cat")};
  CHECK(lm.effective_order(seen) == 3);
  const std::vector<std::uint32_t> unseen = {lm.id_of("mat"), lm.id_of("dog")};
  CHECK(lm.effective_order(unseen) < 3);
  const auto lp = lm.logprobs(seen);
  CHECK(logsumexp(lp) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lp[lm.id_of("sat")] > lp[lm.id_of("log")]);
}

TEST_CASE("serialization round-trips") {
  const auto& lm = small_lm();
  const auto copy = NgramLanguageModel::deserialize(lm.serialize());
  CHECK(copy.identity() == lm.identity());
  const auto doc = Document::from_text("The cat met a dog on the log.");
  const auto a = lm.distributions(doc);
  const auto b = copy.distributions(doc);
  REQUIRE(a.positions.size() == b.positions.size());
  for (std::size_t i = 0; i < a.positions.size(); ++i) CHECK(a.positions[i].logprobs == b.positions[i].logprobs);

  const auto path = std::filesystem::temp_directory_path() / "notai_test_lm.bin";
  lm.save(path);
  CHECK(NgramLanguageModel::load(path).identity() == lm.identity());
  std::filesystem::remove(path);

  auto bytes = lm.serialize();
  CHECK_THROWS_AS(NgramLanguageModel::deserialize(bytes.substr(0, bytes.size() / 2)), Error);
  bytes[0] = 'X';
  CHECK_THROWS_AS(NgramLanguageModel::deserialize(bytes), Error);
}

TEST_CASE("sampling is deterministic and never emits unknown words") {
  const auto& lm = small_lm();
  SplitMix64 a(5), b(5);
  for (int i = 0; i < 200; ++i) {
    const auto s = lm.sample_sentence(a, 0.8, 12);
    CHECK(s == lm.sample_sentence(b, 0.8, 12));
    CHECK(s.size() <= 12);
    for (auto id : s) {
      CHECK(id != NgramLanguageModel::kUnk);
      CHECK(id != NgramLanguageModel::kEos);
    }
  }
  SplitMix64 c(1);
  CHECK_THROWS_AS(lm.sample_sentence(c, 0.0, 5), Error);
}

TEST_CASE("low temperature text is more predictable") {
  const auto corpus = synthetic_corpus(40, 3);
  const auto& lm = *corpus.lm;
  SplitMix64 rng(8);
  double cool = 0.0, warm = 0.0;
  for (int i = 0; i < 60; ++i) {
    cool += cpc_score(lm.distributions(Document::from_text(lm.join(lm.sample_sentence(rng, 0.5, 20)) + "."))).score;
    warm += cpc_score(lm.distributions(Document::from_text(lm.join(lm.sample_sentence(rng, 1.0, 20)) + "."))).score;
  }
  CHECK(cool > warm);
}
