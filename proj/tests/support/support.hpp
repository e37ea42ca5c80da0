#pragma once

// Generators and fakes shared by the unit, acceptance and benchmark targets.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "notai/boostedtree.hpp"
#include "notai/curvature.hpp"
#include "notai/datasetops.hpp"
#include "notai/lexicons.hpp"
#include "notai/ngram_lm.hpp"
#include "notai/random.hpp"

namespace httplib {
class Server;
struct Request;
struct Response;
}  // namespace httplib

namespace notai::testing {

// Raises the default logger threshold to errors.
void spdlog_quiet();

std::filesystem::path fixture_path(const std::string& name);
std::string read_file(const std::filesystem::path& path);

// Random ensemble over at most `max_features` distinct features with integer
// covers that add up from the leaves.
TreeEnsemble random_ensemble(SplitMix64& rng, std::size_t max_features = 6, int max_depth = 3,
                             int max_trees = 5);
// Uniform values in [-1, 1]; each entry is NaN with probability nan_rate.
FeatureVector random_input(SplitMix64& rng, double nan_rate = 0.1);

// Random normalized log-probability rows. Each observed token is uniform over
// the vocabulary with probability `uniform_observed`, else drawn from its row.
ConditionalDistributionSequence random_sequence(SplitMix64& rng, std::size_t max_positions, std::size_t max_vocab,
                                                double uniform_observed = 0.5);

// Mixed-script text with words, digits, apostrophes, punctuation and
// irregular whitespace. May contain no words at all.
std::string random_text(SplitMix64& rng);

struct LabeledRows {
  std::vector<FeatureVector> rows;
  std::vector<int> labels;
};

// Standard normal features; label = [curvature > 0], then exactly
// round(flip * n) labels flipped.
LabeledRows noisy_separable(std::size_t n, double flip, std::uint64_t seed);

// Word-level Markov "true" model used as the source of human text.
class MarkovSource {
 public:
  MarkovSource(std::size_t vocab, std::uint64_t seed);
  std::vector<std::string> sentence(SplitMix64& rng, std::size_t max_words) const;

 private:
  std::vector<std::string> words_;
  std::vector<std::vector<std::pair<std::size_t, double>>> next_;  // cumulative
  std::vector<std::pair<std::size_t, double>> start_;
};

struct SyntheticCorpus {
  Dataset dataset;
  std::shared_ptr<const NgramLanguageModel> lm;
};

// Human rows come from a Markov source, AI rows are samples of a bigram LM
// fitted on separate source text at temperatures in [0.45, 1.0]. Each row
// also gets a class-leaning punctuation style and a precomputed
// bert_ai_score drawn from Beta(5,2) for AI and Beta(2,5) for human.
SyntheticCorpus synthetic_corpus(std::size_t docs, std::uint64_t seed);

// Minimal HTTP server on a free loopback port, for backend fakes.
class FakeServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  FakeServer();
  ~FakeServer();
  void post(const std::string& path, Handler handler);
  void start();
  std::string url(const std::string& path) const;
  int port() const noexcept { return port_; }

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

// A loopback URL nothing listens on.
std::string dead_url(const std::string& path);

}  // namespace notai::testing
