#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace notai {

// A decoded code point with its byte span in the source string.
struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

// Invalid sequences decode to U+FFFD.
std::vector<CodePoint> decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t cp);

// Curly quotes and dashes to ASCII, NFC, whitespace runs collapsed to one
// space, trimmed. Idempotent.
std::string normalize_text(std::string_view raw);

std::string to_lower(std::string_view utf8);

bool is_word_char(char32_t cp) noexcept;
bool is_punctuation(char32_t cp) noexcept;
bool is_space(char32_t cp) noexcept;

struct Document {
  std::string raw;
  std::string normalized;

  static Document from_text(std::string_view raw);
};

}  // namespace notai
