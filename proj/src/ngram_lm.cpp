#include "notai/ngram_lm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

#include "notai/error.hpp"
#include "notai/hashing.hpp"
#include "notai/textstats.hpp"

namespace notai {

namespace {

constexpr char kMagic[4] = {'N', 'G', 'L', 'M'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kBos = std::numeric_limits<std::uint32_t>::max();

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::CorruptModel, "truncated NGLM file");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::vector<std::string>> sentences_of(const Document& doc) {
  std::vector<std::vector<std::string>> out;
  if (doc.normalized.empty()) return out;
  TokenView tv;
  try {
    tv = tokenize(doc);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyDocument) return out;
    throw;
  }
  for (const auto& s : tv.sentences) {
    out.emplace_back(tv.word_tokens.begin() + static_cast<std::ptrdiff_t>(s.begin),
                     tv.word_tokens.begin() + static_cast<std::ptrdiff_t>(s.end));
  }
  return out;
}

}  // namespace

std::string NgramLanguageModel::context_key(const std::vector<std::uint32_t>& history, int k) {
  std::string key;
  key.reserve(static_cast<std::size_t>(k - 1) * 4);
  for (int i = k - 1; i >= 1; --i) {
    const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(history.size()) - i;
    put<std::uint32_t>(key, idx >= 0 ? history[static_cast<std::size_t>(idx)] : kBos);
  }
  return key;
}

NgramLanguageModel NgramLanguageModel::fit(const std::vector<Document>& corpus, int order,
                                           double alpha) {
  if (order < 1 || order > 5) throw Error(ErrorCode::InvalidArgument, "order must be in [1,5]");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");

  std::vector<std::vector<std::vector<std::string>>> docs;
  std::set<std::string> words;
  for (const auto& d : corpus) {
    auto sents = sentences_of(d);
    for (const auto& s : sents) words.insert(s.begin(), s.end());
    docs.push_back(std::move(sents));
  }
  if (words.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no word tokens");

  NgramLanguageModel lm;
  lm.order_ = order;
  lm.alpha_ = alpha;
  lm.vocab_ = {"<unk>", "</s>"};
  words.erase("<unk>");
  words.erase("</s>");
  lm.vocab_.insert(lm.vocab_.end(), words.begin(), words.end());
  lm.rebuild_index();
  lm.tables_.assign(static_cast<std::size_t>(order), Table{});

  for (const auto& sents : docs) {
    for (const auto& s : sents) {
      std::vector<std::uint32_t> history;
      auto count = [&](std::uint32_t id) {
        for (int k = 1; k <= order; ++k) {
          auto& ctx = lm.tables_[static_cast<std::size_t>(k - 1)][context_key(history, k)];
          ++ctx.total;
          ++ctx.next[id];
        }
        history.push_back(id);
      };
      for (const auto& w : s) count(lm.index_.at(w));
      count(kEos);
    }
  }
  lm.hash_ = sha256_hex(lm.serialize());
  return lm;
}

void NgramLanguageModel::rebuild_index() {
  index_.clear();
  for (std::uint32_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], i);
}

std::uint32_t NgramLanguageModel::id_of(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

int NgramLanguageModel::effective_order(const std::vector<std::uint32_t>& history) const {
  for (int k = order_; k > 1; --k) {
    const auto& table = tables_[static_cast<std::size_t>(k - 1)];
    auto it = table.find(context_key(history, k));
    if (it != table.end() && it->second.total > 0) return k;
  }
  return 1;
}

std::vector<double> NgramLanguageModel::logprobs_at_order(const std::vector<std::uint32_t>& history,
                                                          int k) const {
  const double v = static_cast<double>(vocab_.size());
  const auto& table = tables_[static_cast<std::size_t>(k - 1)];
  auto it = table.find(context_key(history, k));
  const double total = it == table.end() ? 0.0 : static_cast<double>(it->second.total);
  const double denom = std::log(total + alpha_ * v);
  std::vector<double> out(vocab_.size(), std::log(alpha_) - denom);
  if (it != table.end()) {
    for (const auto& [id, c] : it->second.next) {
      out[id] = std::log(static_cast<double>(c) + alpha_) - denom;
    }
  }
  return out;
}

std::vector<double> NgramLanguageModel::logprobs(const std::vector<std::uint32_t>& history) const {
  return logprobs_at_order(history, effective_order(history));
}

ConditionalDistributionSequence NgramLanguageModel::distributions(const Document& doc) const {
  const TokenView tv = tokenize(doc);
  ConditionalDistributionSequence seq;
  seq.vocab_size = vocab_.size();
  for (const auto& s : tv.sentences) {
    std::vector<std::uint32_t> history;
    for (std::size_t i = s.begin; i < s.end; ++i) {
      const std::uint32_t id = id_of(tv.word_tokens[i]);
      seq.positions.push_back({id, logprobs(history)});
      history.push_back(id);
    }
    seq.positions.push_back({kEos, logprobs(history)});
  }
  return seq;
}

std::string NgramLanguageModel::identity() const {
  return "ngram:order=" + std::to_string(order_) + ":sha256=" + hash_.substr(0, 16);
}

std::vector<std::uint32_t> NgramLanguageModel::sample_sentence(SplitMix64& rng, double temperature,
                                                               std::size_t max_words) const {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  std::vector<std::uint32_t> history;
  while (history.size() < max_words) {
    std::vector<double> lp = logprobs(history);
    lp[kUnk] = -std::numeric_limits<double>::infinity();
    if (history.empty()) lp[kEos] = -std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    for (double& l : lp) {
      l /= temperature;
      max = std::max(max, l);
    }
    double z = 0.0;
    for (double l : lp) z += std::exp(l - max);
    const double u = rng.uniform() * z;
    double acc = 0.0;
    std::uint32_t pick = kEos;
    for (std::uint32_t k = 0; k < lp.size(); ++k) {
      const double p = std::exp(lp[k] - max);
      if (p == 0.0) continue;
      acc += p;
      pick = k;
      if (u < acc) break;
    }
    if (pick == kEos) break;
    history.push_back(pick);
  }
  return history;
}

std::vector<std::uint32_t> NgramLanguageModel::greedy_sentence(std::size_t max_words) const {
  std::vector<std::uint32_t> history;
  while (history.size() < max_words) {
    std::vector<double> lp = logprobs(history);
    lp[kUnk] = -std::numeric_limits<double>::infinity();
    if (history.empty()) lp[kEos] = -std::numeric_limits<double>::infinity();
    const auto best = static_cast<std::uint32_t>(
        std::distance(lp.begin(), std::max_element(lp.begin(), lp.end())));
    if (best == kEos) break;
    history.push_back(best);
  }
  return history;
}

std::string NgramLanguageModel::join(const std::vector<std::uint32_t>& ids) const {
  std::string out;
  for (auto id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += vocab_.at(id);
  }
  return out;
}

double NgramLanguageModel::perplexity(const std::vector<Document>& docs) const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& d : docs) {
    if (d.normalized.empty()) continue;
    const auto seq = distributions(d);
    for (const auto& pos : seq.positions) total += pos.logprobs[pos.observed];
    n += seq.positions.size();
  }
  if (n == 0) throw Error(ErrorCode::EmptyCorpus, "no tokens to score");
  return std::exp(-total / static_cast<double>(n));
}

std::string NgramLanguageModel::serialize() const {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(order_));
  put<double>(out, alpha_);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vocab_.size()));
  for (const auto& w : vocab_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.size()));
    out += w;
  }
  for (int k = 1; k <= order_; ++k) {
    const auto& table = tables_[static_cast<std::size_t>(k - 1)];
    std::size_t entries = 0;
    for (const auto& [ctx, counts] : table) entries += counts.next.size();
    put<std::uint64_t>(out, entries);
    std::vector<std::string> contexts;
    contexts.reserve(table.size());
    for (const auto& [ctx, _] : table) contexts.push_back(ctx);
    std::sort(contexts.begin(), contexts.end());
    for (const auto& ctx : contexts) {
      const auto& counts = table.at(ctx);
      std::vector<std::pair<std::uint32_t, std::uint64_t>> next(counts.next.begin(), counts.next.end());
      std::sort(next.begin(), next.end());
      for (const auto& [id, c] : next) {
        out += ctx;
        put<std::uint32_t>(out, id);
        put<std::uint64_t>(out, c);
      }
    }
  }
  return out;
}

NgramLanguageModel NgramLanguageModel::deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_string(4) != std::string(kMagic, 4)) {
    throw Error(ErrorCode::CorruptModel, "not an NGLM file");
  }
  if (r.get<std::uint32_t>() != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "unsupported NGLM version");
  }
  NgramLanguageModel lm;
  lm.order_ = static_cast<int>(r.get<std::uint32_t>());
  lm.alpha_ = r.get<double>();
  if (lm.order_ < 1 || lm.order_ > 5 || !(lm.alpha_ > 0.0)) {
    throw Error(ErrorCode::CorruptModel, "bad NGLM header");
  }
  const auto vocab = r.get<std::uint32_t>();
  if (vocab < 2) throw Error(ErrorCode::CorruptModel, "bad NGLM vocabulary");
  lm.vocab_.reserve(vocab);
  for (std::uint32_t i = 0; i < vocab; ++i) lm.vocab_.push_back(r.get_string(r.get<std::uint32_t>()));
  lm.rebuild_index();
  lm.tables_.assign(static_cast<std::size_t>(lm.order_), Table{});
  for (int k = 1; k <= lm.order_; ++k) {
    const auto entries = r.get<std::uint64_t>();
    auto& table = lm.tables_[static_cast<std::size_t>(k - 1)];
    for (std::uint64_t e = 0; e < entries; ++e) {
      std::string ctx = r.get_string(static_cast<std::size_t>(k - 1) * 4);
      const auto id = r.get<std::uint32_t>();
      const auto c = r.get<std::uint64_t>();
      if (id >= vocab) throw Error(ErrorCode::CorruptModel, "NGLM token id out of range");
      auto& counts = table[ctx];
      counts.total += c;
      counts.next[id] += c;
    }
  }
  if (!r.done()) throw Error(ErrorCode::CorruptModel, "trailing bytes in NGLM file");
  lm.hash_ = sha256_hex(bytes);
  return lm;
}

void NgramLanguageModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

NgramLanguageModel NgramLanguageModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace notai
