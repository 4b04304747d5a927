#ifndef UTTPROBE_UNICODE_HPP
#define UTTPROBE_UNICODE_HPP

// Thin wrappers over ICU for the handful of Unicode operations the toolkit
// needs: NFC, case folding, code point iteration and whitespace classes.

#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace uttprobe::unicode {

inline std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(text);
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString out = norm->normalize(src, status);
  if (U_FAILURE(status)) return std::string(text);
  std::string result;
  out.toUTF8String(result);
  return result;
}

/// Full Unicode case folding ("Dzień" and "dzień" fold to the same string).
inline std::string fold_case(std::string_view text) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  s.foldCase();
  std::string result;
  s.toUTF8String(result);
  return result;
}

inline std::u32string to_u32(std::string_view text) {
  std::u32string out;
  int32_t i = 0;
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    out.push_back(c < 0 ? 0xFFFD : static_cast<char32_t>(c));
  }
  return out;
}

inline std::string from_u32(std::u32string_view text) {
  std::string out;
  for (char32_t c : text) {
    char buf[4];
    int32_t n = 0;
    UBool err = false;
    U8_APPEND(reinterpret_cast<uint8_t*>(buf), n, 4, static_cast<UChar32>(c), err);
    if (!err) out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

/// Number of Unicode code points (what we call "characters" in reports).
inline std::size_t length(std::string_view text) { return to_u32(text).size(); }

inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

inline bool is_alnum(char32_t c) {
  return u_isalpha(static_cast<UChar32>(c)) || u_isdigit(static_cast<UChar32>(c));
}

inline bool has_alnum(std::string_view text) {
  for (char32_t c : to_u32(text))
    if (is_alnum(c)) return true;
  return false;
}

/// Strip leading and trailing Unicode whitespace.
inline std::string trim(std::string_view text) {
  std::u32string cps = to_u32(text);
  std::size_t b = 0, e = cps.size();
  while (b < e && is_space(cps[b])) ++b;
  while (e > b && is_space(cps[e - 1])) --e;
  return from_u32(std::u32string_view(cps).substr(b, e - b));
}

}  // namespace uttprobe::unicode

#endif  // UTTPROBE_UNICODE_HPP
