#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "notai/curvature.hpp"
#include "notai/random.hpp"

namespace notai {

// Word-level n-gram language model with add-alpha smoothing. A context that
// was never seen at order k backs off to the order k-1 distribution (and
// ultimately to the unigram one). Immutable after fit/load.
class NgramLanguageModel final : public LogitSource {
 public:
  static constexpr std::uint32_t kUnk = 0;
  static constexpr std::uint32_t kEos = 1;

  // Throws Error{EmptyCorpus} when the corpus has no word tokens and
  // Error{InvalidArgument} for order outside [1,5] or alpha <= 0.
  static NgramLanguageModel fit(const std::vector<Document>& corpus, int order, double alpha);

  // Binary file: magic `NGLM`, version, order, alpha, vocab, count tables.
  void save(const std::filesystem::path& path) const;
  static NgramLanguageModel load(const std::filesystem::path& path);
  std::string serialize() const;
  static NgramLanguageModel deserialize(const std::string& bytes);

  // One position per word token plus an end-of-sentence position per sentence.
  ConditionalDistributionSequence distributions(const Document& doc) const override;
  std::string identity() const override;

  // Next-token log-probabilities given the (unpadded) sentence history.
  std::vector<double> logprobs(const std::vector<std::uint32_t>& history) const;
  // Highest order whose context was seen for this history.
  int effective_order(const std::vector<std::uint32_t>& history) const;
  std::vector<double> logprobs_at_order(const std::vector<std::uint32_t>& history, int k) const;

  // Samples one sentence at the given temperature; <unk> is never emitted.
  std::vector<std::uint32_t> sample_sentence(SplitMix64& rng, double temperature,
                                             std::size_t max_words) const;
  std::vector<std::uint32_t> greedy_sentence(std::size_t max_words) const;

  // exp(-mean log-probability) over all positions of the documents.
  double perplexity(const std::vector<Document>& docs) const;

  std::uint32_t id_of(const std::string& word) const;
  const std::string& word_of(std::uint32_t id) const { return vocab_.at(id); }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  int order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }
  std::string join(const std::vector<std::uint32_t>& ids) const;

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<std::uint32_t, std::uint64_t> next;
  };
  using Table = std::unordered_map<std::string, ContextCounts>;

  NgramLanguageModel() = default;
  static std::string context_key(const std::vector<std::uint32_t>& history, int k);
  void rebuild_index();

  int order_ = 1;
  double alpha_ = 1.0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<Table> tables_;  // tables_[k-1] holds order-k counts
  std::string hash_;
};

}  // namespace notai
