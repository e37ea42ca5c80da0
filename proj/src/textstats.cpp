#include "notai/textstats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string_view>
#include <unordered_map>

#include "notai/error.hpp"

namespace notai {

namespace {

// Lowercased, without the trailing period.
constexpr std::array<std::string_view, 28> kAbbreviations = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "e.g", "i.e",
    "cf", "approx", "fig", "figs", "inc", "ltd", "co", "corp", "mt", "gen",
    "gov", "sen", "rep", "rev", "est", "dept", "u.s",
};

bool is_abbreviation(std::string_view chunk) {
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), chunk) != kAbbreviations.end();
}

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

bool is_closer(char32_t c) {
  return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == U'}';
}

std::string slice(const std::string& s, const std::vector<CodePoint>& cps, std::size_t from,
                  std::size_t to) {
  if (from >= to) return {};
  const std::size_t begin = cps[from].offset;
  const std::size_t end = cps[to - 1].offset + cps[to - 1].length;
  return s.substr(begin, end - begin);
}

// Whitespace-delimited chunk ending just before the period at `dot`, with
// leading non-word characters removed.
std::string chunk_before(const std::string& s, const std::vector<CodePoint>& cps, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(cps[start - 1].value)) --start;
  while (start < dot && !is_word_char(cps[start].value)) ++start;
  return to_lower(slice(s, cps, start, dot));
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

}  // namespace

TokenView tokenize(const Document& doc) {
  const std::string& text = doc.normalized;
  const auto cps = decode_utf8(text);
  const std::size_t n = cps.size();

  TokenView tv;
  std::size_t sentence_begin = 0;
  auto close_sentence = [&] {
    const std::size_t words = tv.word_tokens.size();
    if (words > sentence_begin) {
      tv.sentences.push_back({sentence_begin, words});
      sentence_begin = words;
    }
  };

  std::size_t i = 0;
  while (i < n) {
    const char32_t c = cps[i].value;
    if (is_word_char(c)) {
      std::size_t j = i + 1;
      while (j < n) {
        if (is_word_char(cps[j].value)) {
          ++j;
        } else if (cps[j].value == U'\'' && j + 1 < n && is_word_char(cps[j + 1].value)) {
          j += 2;
        } else {
          break;
        }
      }
      std::string word = to_lower(slice(text, cps, i, j));
      tv.all_tokens.push_back({word, TokenKind::Word});
      tv.word_tokens.push_back(std::move(word));
      i = j;
      continue;
    }
    if (is_punctuation(c)) {
      std::string p = slice(text, cps, i, i + 1);
      tv.all_tokens.push_back({p, TokenKind::Punct});
      tv.punct_tokens.push_back(std::move(p));
      if (is_terminator(c)) {
        std::size_t k = i + 1;
        while (k < n && is_closer(cps[k].value)) ++k;
        const bool boundary = k == n || is_space(cps[k].value);
        if (boundary && !(c == U'.' && is_abbreviation(chunk_before(text, cps, i)))) {
          close_sentence();
        }
      }
    }
    ++i;
  }
  close_sentence();

  if (tv.word_tokens.empty()) throw Error(ErrorCode::EmptyDocument, "document has no word tokens");
  return tv;
}

int count_syllables(std::string_view word) {
  std::string letters;
  for (char ch : word) {
    if (ch >= 'a' && ch <= 'z') letters.push_back(ch);
  }
  int groups = 0;
  bool in_vowel = false;
  for (char ch : letters) {
    const bool v = is_vowel(ch);
    if (v && !in_vowel) ++groups;
    in_vowel = v;
  }
  const std::size_t len = letters.size();
  if (groups > 1 && len >= 2 && letters[len - 1] == 'e') {
    // "-le" after a consonant is voiced (table, little).
    const bool voiced_le = len >= 3 && letters[len - 2] == 'l' && !is_vowel(letters[len - 3]);
    if (!voiced_le && !is_vowel(letters[len - 2])) --groups;
  }
  return std::max(groups, 1);
}

double flesch_raw(const TokenView& tv) {
  if (tv.word_tokens.empty() || tv.sentences.empty()) {
    throw Error(ErrorCode::EmptyDocument, "flesch reading ease needs words and sentences");
  }
  long syllables = 0;
  for (const auto& w : tv.word_tokens) syllables += count_syllables(w);
  const double words = static_cast<double>(tv.word_tokens.size());
  const double sentences = static_cast<double>(tv.sentences.size());
  return 206.835 - 1.015 * (words / sentences) - 84.6 * (static_cast<double>(syllables) / words);
}

double flesch_reading_ease(const TokenView& tv) {
  return std::clamp(flesch_raw(tv), 0.0, 100.0) / 100.0;
}

double max_ngram_frequency(const TokenView& tv, std::size_t n) {
  if (n == 0 || n > 4) throw Error(ErrorCode::InvalidArgument, "n-gram order must be in [1,4]");
  std::unordered_map<std::string_view, std::uint32_t> ids;
  std::vector<std::uint32_t> word_ids;
  word_ids.reserve(tv.word_tokens.size());
  for (const auto& w : tv.word_tokens) {
    auto [it, _] = ids.emplace(w, static_cast<std::uint32_t>(ids.size()));
    word_ids.push_back(it->second);
  }

  std::vector<std::array<std::uint32_t, 4>> grams;
  for (const auto& s : tv.sentences) {
    if (s.size() < n) continue;
    for (std::size_t i = s.begin; i + n <= s.end; ++i) {
      std::array<std::uint32_t, 4> g{};
      for (std::size_t k = 0; k < n; ++k) g[k] = word_ids[i + k];
      grams.push_back(g);
    }
  }
  if (grams.empty()) return 0.0;
  std::sort(grams.begin(), grams.end());
  std::size_t best = 1;
  std::size_t run = 1;
  for (std::size_t i = 1; i < grams.size(); ++i) {
    run = grams[i] == grams[i - 1] ? run + 1 : 1;
    best = std::max(best, run);
  }
  return static_cast<double>(best) / static_cast<double>(grams.size());
}

FeatureVector extract_stylometrics(const TokenView& tv, const Lexicons& lex) {
  const std::size_t words = tv.word_tokens.size();
  if (words == 0) throw Error(ErrorCode::EmptyDocument, "document has no word tokens");
  const double w = static_cast<double>(words);
  const double all = static_cast<double>(tv.all_tokens.size());

  std::unordered_map<std::string_view, std::size_t> type_counts;
  std::size_t stop = 0;
  std::size_t chars = 0;
  for (const auto& tok : tv.word_tokens) {
    ++type_counts[tok];
    if (lex.is_stopword(tok)) ++stop;
    chars += utf8_length(tok);
  }
  std::size_t hapax = 0;
  for (const auto& [_, count] : type_counts) hapax += count == 1 ? 1 : 0;

  // Greedy longest match, non-overlapping, within sentences.
  std::size_t covered = 0;
  const std::size_t max_len = lex.max_cliche_words();
  for (const auto& s : tv.sentences) {
    std::size_t i = s.begin;
    while (i < s.end) {
      std::size_t matched = 0;
      for (std::size_t len = std::min(max_len, s.end - i); len >= 1; --len) {
        std::string joined = tv.word_tokens[i];
        for (std::size_t k = 1; k < len; ++k) {
          joined.push_back(' ');
          joined += tv.word_tokens[i + k];
        }
        if (lex.is_cliche(joined)) {
          matched = len;
          break;
        }
      }
      if (matched > 0) {
        covered += matched;
        i += matched;
      } else {
        ++i;
      }
    }
  }

  std::size_t commas = 0;
  std::size_t semis = 0;
  for (const auto& p : tv.punct_tokens) {
    if (p == ",") ++commas;
    if (p == ";" || p == ":") ++semis;
  }

  FeatureVector fv;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  fv[Feature::curvature] = nan;
  fv[Feature::bert_ai_score] = nan;
  fv[Feature::flesch_reading_ease] = flesch_reading_ease(tv);
  fv[Feature::sentence_count] = static_cast<double>(tv.sentences.size());
  fv[Feature::avg_sentence_length] = w / static_cast<double>(tv.sentences.size());
  fv[Feature::token_count] = w;
  fv[Feature::avg_word_length] = static_cast<double>(chars) / w;
  fv[Feature::type_token_ratio] = static_cast<double>(type_counts.size()) / w;
  fv[Feature::hapax_legomena_ratio] = static_cast<double>(hapax) / w;
  fv[Feature::stopword_ratio] = static_cast<double>(stop) / w;
  fv[Feature::cliche_ratio] = static_cast<double>(covered) / w;
  fv[Feature::max_freq_2gram] = max_ngram_frequency(tv, 2);
  fv[Feature::max_freq_3gram] = max_ngram_frequency(tv, 3);
  fv[Feature::max_freq_4gram] = max_ngram_frequency(tv, 4);
  fv[Feature::punctuation_count] = static_cast<double>(tv.punct_tokens.size()) / all;
  fv[Feature::comma_count] = static_cast<double>(commas) / all;
  fv[Feature::semicolon_and_colon_count] = static_cast<double>(semis) / all;
  return fv;
}

FeatureVector extract_stylometrics(std::string_view text, const Lexicons& lex) {
  const Document doc = Document::from_text(text);
  if (doc.normalized.empty()) throw Error(ErrorCode::EmptyDocument, "document is empty");
  return extract_stylometrics(tokenize(doc), lex);
}

}  // namespace notai
