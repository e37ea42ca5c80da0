#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "notai/error.hpp"

#ifndef NOTAI_FIXTURE_DIR
#define NOTAI_FIXTURE_DIR "tests/fixtures"
#endif

namespace notai::testing {

void spdlog_quiet() { spdlog::set_level(spdlog::level::err); }

std::filesystem::path fixture_path(const std::string& name) { return std::filesystem::path(NOTAI_FIXTURE_DIR) / name; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- random models ----------------------------------------------------------

namespace {

int grow(Tree& t, SplitMix64& rng, const std::vector<int>& feats, int depth_left) {
  const int index = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (depth_left == 0 || rng.uniform() < 0.25) {
    TreeNode leaf;
    leaf.weight = rng.normal();
    leaf.cover = static_cast<double>(1 + rng.bounded(10));
    t.nodes[static_cast<std::size_t>(index)] = leaf;
    return index;
  }
  TreeNode n;
  n.feature = feats[rng.bounded(feats.size())];
  n.threshold = rng.uniform() * 2.0 - 1.0;
  n.default_left = rng.bounded(2) == 0;
  n.left = grow(t, rng, feats, depth_left - 1);
  n.right = grow(t, rng, feats, depth_left - 1);
  n.cover = t.nodes[static_cast<std::size_t>(n.left)].cover + t.nodes[static_cast<std::size_t>(n.right)].cover;
  t.nodes[static_cast<std::size_t>(index)] = n;
  return index;
}

}  // namespace

TreeEnsemble random_ensemble(SplitMix64& rng, std::size_t max_features, int max_depth, int max_trees) {
  std::vector<int> all(kFeatureCount);
  std::iota(all.begin(), all.end(), 0);
  shuffle(all, rng);
  const std::size_t m = 1 + static_cast<std::size_t>(rng.bounded(max_features));
  const std::vector<int> feats(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));

  TreeEnsemble model;
  model.base_score = rng.normal() * 0.5;
  const int trees = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_trees)));
  for (int i = 0; i < trees; ++i) {
    Tree t;
    grow(t, rng, feats, 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_depth))));
    model.trees.push_back(std::move(t));
  }
  return model;
}

FeatureVector random_input(SplitMix64& rng, double nan_rate) {
  FeatureVector x;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    x.at(f) = rng.uniform() < nan_rate ? std::nan("") : rng.uniform() * 2.0 - 1.0;
  }
  return x;
}

ConditionalDistributionSequence random_sequence(SplitMix64& rng, std::size_t max_positions, std::size_t max_vocab,
                                                double uniform_observed) {
  ConditionalDistributionSequence seq;
  seq.vocab_size = 2 + static_cast<std::size_t>(rng.bounded(max_vocab - 1));
  const std::size_t n = 1 + static_cast<std::size_t>(rng.bounded(max_positions));
  for (std::size_t j = 0; j < n; ++j) {
    const double scale = 0.5 + 2.5 * rng.uniform();
    std::vector<double> lp(seq.vocab_size);
    for (auto& l : lp) l = scale * rng.normal();
    const double z = logsumexp(lp);
    for (auto& l : lp) l -= z;
    std::size_t observed = 0;
    if (rng.uniform() < uniform_observed) {
      observed = static_cast<std::size_t>(rng.bounded(seq.vocab_size));
    } else {
      const double u = rng.uniform();
      double acc = 0.0;
      for (std::size_t k = 0; k < lp.size(); ++k) {
        acc += std::exp(lp[k]);
        observed = k;
        if (u < acc) break;
      }
    }
    seq.positions.push_back({observed, std::move(lp)});
  }
  return seq;
}

std::string random_text(SplitMix64& rng) {
  static const std::vector<std::string> words = {
      "the",  "cat",  "Dog",       "naïve", "café",   "über",  "東京",  "don't", "rock'n'roll",
      "42",   "x",    "Ünïcödé",   "and",   "of",     "ГОРОД", "word",  "a",     "I",
      "e.g.", "Dr.",  "it's",      "well",  "runs",   "Mr",    "year",  "ζ",     "in",
      "to",   "data", "at the end of the day", "by",   "3.14",  "naive", "état"};
  static const std::vector<std::string> punct = {".", ",", ";", ":", "!", "?", "-", "\"", "'", "(",
                                                 ")", "…", "—", "“",  "”", "...", "!?", "/", "#"};
  static const std::vector<std::string> spaces = {" ", " ", " ", "  ", "\n", "\t", ""};
  std::string out;
  const std::size_t pieces = static_cast<std::size_t>(rng.bounded(60));
  for (std::size_t i = 0; i < pieces; ++i) {
    if (rng.uniform() < 0.7) out += words[rng.bounded(words.size())];
    else out += punct[rng.bounded(punct.size())];
    out += spaces[rng.bounded(spaces.size())];
  }
  return out;
}

LabeledRows noisy_separable(std::size_t n, double flip, std::uint64_t seed) {
  SplitMix64 rng(seed);
  LabeledRows d;
  d.rows.resize(n);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) d.rows[i].at(f) = rng.normal();
    d.labels[i] = d.rows[i][Feature::curvature] > 0.0 ? 1 : 0;
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  shuffle(idx, rng);
  const auto flips = static_cast<std::size_t>(std::llround(flip * static_cast<double>(n)));
  for (std::size_t k = 0; k < flips; ++k) d.labels[idx[k]] = 1 - d.labels[idx[k]];
  return d;
}

// --- Markov source --------------------------------------------------------

MarkovSource::MarkovSource(std::size_t vocab, std::uint64_t seed) {
  SplitMix64 rng(seed);
  words_ = {"the", "of", "and", "to", "a", "in", "is", "it", "that", "was", "for", "on"};
  static const std::vector<std::string> syl = {"ka", "lo", "mi", "ren", "tu", "sa", "vel", "dor", "pi",
                                               "nak", "ye", "bru", "os", "fen", "ga", "ti", "mur", "el"};
  std::vector<std::string> made;
  while (words_.size() < vocab) {
    std::string w;
    const std::size_t parts = 1 + static_cast<std::size_t>(rng.bounded(3));
    for (std::size_t p = 0; p < parts; ++p) w += syl[rng.bounded(syl.size())];
    if (std::find(words_.begin(), words_.end(), w) == words_.end()) words_.push_back(w);
  }
  auto zipf_row = [&](std::size_t fanout) {
    std::vector<std::pair<std::size_t, double>> row;
    std::vector<std::size_t> pick(words_.size());
    std::iota(pick.begin(), pick.end(), 0);
    shuffle(pick, rng);
    double acc = 0.0;
    for (std::size_t r = 0; r < fanout; ++r) {
      acc += 1.0 / static_cast<double>(r + 1);
      row.emplace_back(pick[r], acc);
    }
    for (auto& [w, c] : row) c /= acc;
    return row;
  };
  next_.resize(words_.size());
  for (auto& row : next_) row = zipf_row(12);
  start_ = zipf_row(30);
}

std::vector<std::string> MarkovSource::sentence(SplitMix64& rng, std::size_t max_words) const {
  auto draw = [&](const std::vector<std::pair<std::size_t, double>>& row) {
    const double u = rng.uniform();
    for (const auto& [w, c] : row) {
      if (u < c) return w;
    }
    return row.back().first;
  };
  std::vector<std::string> out;
  std::size_t w = draw(start_);
  out.push_back(words_[w]);
  while (out.size() < max_words) {
    if (out.size() >= 4 && rng.uniform() < 0.15) break;
    w = draw(next_[w]);
    out.push_back(words_[w]);
  }
  return out;
}

// --- synthetic corpus -----------------------------------------------------

namespace {

// k-th smallest of n uniforms ~ Beta(k, n + 1 - k).
double beta_order_statistic(SplitMix64& rng, int k, int n) {
  std::vector<double> u(static_cast<std::size_t>(n));
  for (auto& v : u) v = rng.uniform();
  std::nth_element(u.begin(), u.begin() + (k - 1), u.end());
  return u[static_cast<std::size_t>(k - 1)];
}

std::string render(const std::vector<std::vector<std::string>>& sentences, bool ai_style, SplitMix64& rng) {
  const double comma = ai_style ? 0.16 : 0.04;
  const double colon = ai_style ? 0.05 : 0.005;
  std::string text;
  for (const auto& s : sentences) {
    if (!text.empty()) text += ' ';
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::string w = s[i];
      if (i == 0 && !w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
      text += w;
      if (i + 1 < s.size()) {
        const double u = rng.uniform();
        if (u < colon) text += rng.bounded(2) ? ";" : ":";
        else if (u < colon + comma) text += ",";
        text += ' ';
      }
    }
    text += '.';
  }
  return text;
}

}  // namespace

SyntheticCorpus synthetic_corpus(std::size_t docs, std::uint64_t seed) {
  const MarkovSource source(300, stream_seed(seed, 1));
  SplitMix64 fit_rng(stream_seed(seed, 2));
  std::vector<Document> fit_docs;
  for (int i = 0; i < 6000; ++i) {
    std::string line;
    for (const auto& w : source.sentence(fit_rng, 20)) line += w + " ";
    line += ".";
    fit_docs.push_back(Document::from_text(line));
  }
  auto lm = std::make_shared<const NgramLanguageModel>(NgramLanguageModel::fit(fit_docs, 2, 0.05));

  static const std::vector<std::string> topics = {"news", "reviews", "science"};
  SplitMix64 rng(stream_seed(seed, 3));
  SyntheticCorpus out;
  out.lm = lm;
  out.dataset.has_generator = true;
  out.dataset.has_topic = true;
  for (std::size_t i = 0; i < docs; ++i) {
    const bool ai = i % 2 == 1;
    const std::size_t n_sent = 3 + static_cast<std::size_t>(rng.bounded(3));
    std::vector<std::vector<std::string>> sentences;
    DatasetRecord r;
    r.id = "doc-" + std::to_string(i);
    r.label = ai ? Label::Ai : Label::Human;
    if (ai) {
      const double temperature = 0.45 + 0.55 * rng.uniform();
      r.generator = temperature < 0.725 ? "lm-cool" : "lm-warm";
      while (sentences.size() < n_sent) {
        const auto ids = lm->sample_sentence(rng, temperature, 20);
        if (ids.empty()) continue;
        std::vector<std::string> s;
        for (auto id : ids) s.push_back(lm->word_of(id));
        sentences.push_back(std::move(s));
      }
    } else {
      r.generator = "human";
      while (sentences.size() < n_sent) sentences.push_back(source.sentence(rng, 20));
    }
    const bool ai_style = rng.uniform() < 0.75 ? ai : !ai;
    r.text = render(sentences, ai_style, rng);
    r.domain_topic = topics[rng.bounded(topics.size())];
    r.features[index_of(Feature::bert_ai_score)] = ai ? beta_order_statistic(rng, 5, 6) : beta_order_statistic(rng, 2, 6);
    out.dataset.records.push_back(std::move(r));
  }
  return out;
}

// --- fake HTTP server -------------------------------------------------------

FakeServer::FakeServer() : server_(std::make_unique<httplib::Server>()) {
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ < 0) throw Error(ErrorCode::Io, "fake server cannot bind");
}

FakeServer::~FakeServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void FakeServer::post(const std::string& path, Handler handler) { server_->Post(path, std::move(handler)); }

void FakeServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  for (int i = 0; i < 500 && !server_->is_running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

std::string FakeServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

std::string dead_url(const std::string& path) { return "http://127.0.0.1:1" + path; }

}  // namespace notai::testing
