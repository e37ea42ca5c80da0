#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "notai/features.hpp"
#include "notai/lexicons.hpp"
#include "notai/unicode_text.hpp"

namespace notai {

enum class TokenKind { Word, Punct };

struct Token {
  std::string text;
  TokenKind kind;
};

// Half-open range of word-token indices.
struct SentenceRange {
  std::size_t begin;
  std::size_t end;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const SentenceRange&, const SentenceRange&) = default;
};

struct TokenView {
  std::vector<std::string> word_tokens;   // lowercased
  std::vector<std::string> punct_tokens;
  std::vector<Token> all_tokens;          // document order
  std::vector<SentenceRange> sentences;
};

// Word tokens are maximal runs of letters/digits, with an apostrophe kept
// when it sits between two word characters. Every punctuation character is
// its own token. Sentences end at `.`, `!` or `?` followed (after optional
// closing quotes/brackets) by whitespace or end of text, except after a
// guarded abbreviation. Throws Error{EmptyDocument} without word tokens.
TokenView tokenize(const Document& doc);

// Vowel-group syllable estimate with silent-e and minimum-1 rules.
int count_syllables(std::string_view word);

// Flesch reading ease, clamped to [0,100] and divided by 100.
double flesch_reading_ease(const TokenView& tv);
double flesch_raw(const TokenView& tv);

// Fills every text-derived field; curvature and bert_ai_score are NaN.
FeatureVector extract_stylometrics(const TokenView& tv, const Lexicons& lex);

// Convenience: normalize, tokenize, extract.
FeatureVector extract_stylometrics(std::string_view text, const Lexicons& lex);

// (max count of any within-sentence word n-gram) / (number of such n-grams);
// 0 when no sentence has n words.
double max_ngram_frequency(const TokenView& tv, std::size_t n);

}  // namespace notai
