#include "notai/unicode_text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>
#include <unicode/locid.h>

#include <stdexcept>

namespace notai {

std::vector<CodePoint> decode_utf8(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(s, i, length, c);
    if (c < 0) c = 0xFFFD;
    out.push_back({static_cast<char32_t>(c), static_cast<std::size_t>(start),
                   static_cast<std::size_t>(i - start)});
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  uint8_t buf[4];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf, len, 4, static_cast<UChar32>(cp), error);
  if (error) {
    out.append("\xEF\xBF\xBD");
    return;
  }
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
}

bool is_space(char32_t cp) noexcept {
  return u_isUWhiteSpace(static_cast<UChar32>(cp)) || cp == 0x200B;
}

bool is_word_char(char32_t cp) noexcept {
  const auto c = static_cast<UChar32>(cp);
  const int8_t type = u_charType(c);
  switch (type) {
    case U_UPPERCASE_LETTER:
    case U_LOWERCASE_LETTER:
    case U_TITLECASE_LETTER:
    case U_MODIFIER_LETTER:
    case U_OTHER_LETTER:
    case U_NON_SPACING_MARK:
    case U_COMBINING_SPACING_MARK:
    case U_ENCLOSING_MARK:
    case U_DECIMAL_DIGIT_NUMBER:
      return true;
    default:
      return false;
  }
}

bool is_punctuation(char32_t cp) noexcept { return u_ispunct(static_cast<UChar32>(cp)); }

namespace {

char32_t ascii_fold(char32_t cp) {
  switch (cp) {
    case 0x2018: case 0x2019: case 0x201A: case 0x201B: case 0x2032: case 0x02BC:
      return U'\'';
    case 0x201C: case 0x201D: case 0x201E: case 0x201F: case 0x2033:
    case 0x00AB: case 0x00BB:
      return U'"';
    case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014:
    case 0x2015: case 0x2212:
      return U'-';
    default:
      return cp;
  }
}

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw std::runtime_error("ICU NFC unavailable");
  return *n;
}

}  // namespace

std::string normalize_text(std::string_view raw) {
  std::string folded;
  folded.reserve(raw.size());
  for (const auto& cp : decode_utf8(raw)) append_utf8(folded, ascii_fold(cp.value));

  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(folded);
  icu::UnicodeString composed = nfc().normalize(u, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string nfc_text;
  composed.toUTF8String(nfc_text);

  std::string out;
  out.reserve(nfc_text.size());
  bool pending_space = false;
  for (const auto& cp : decode_utf8(nfc_text)) {
    if (is_space(cp.value) || cp.value == 0) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(nfc_text, cp.offset, cp.length);
  }
  return out;
}

std::string to_lower(std::string_view utf8) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

Document Document::from_text(std::string_view raw) {
  return Document{std::string(raw), normalize_text(raw)};
}

}  // namespace notai
