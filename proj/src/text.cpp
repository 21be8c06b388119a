#include "sexism_alert/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "sexism_alert/common.hpp"

namespace sexism_alert {

namespace {

icu::UnicodeString to_unicode(std::string_view text) {
  // Validate first: fromUTF8 silently substitutes U+FFFD.
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) {
      fail(ErrorKind::kInvalidArgument, "text is not valid UTF-8");
    }
  }
  return icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), length));
}

}  // namespace

std::string normalize_text(std::string_view text) {
  icu::UnicodeString source = to_unicode(text);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    fail(ErrorKind::kUnavailable, "ICU NFC normalizer unavailable");
  }
  icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) {
    fail(ErrorKind::kInvalidArgument, "text could not be normalized");
  }

  int32_t begin = 0;
  int32_t end = normalized.length();
  while (begin < end && u_isUWhiteSpace(normalized.char32At(begin))) {
    begin = normalized.moveIndex32(begin, 1);
  }
  while (end > begin) {
    const int32_t prev = normalized.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(normalized.char32At(prev))) break;
    end = prev;
  }
  std::string out;
  normalized.tempSubStringBetween(begin, end).toUTF8String(out);
  return out;
}

bool is_blank(std::string_view text) {
  return normalize_text(text).empty();
}

std::vector<std::string> tokenize(std::string_view text) {
  icu::UnicodeString source = to_unicode(text);
  source.foldCase();

  std::vector<std::string> tokens;
  icu::UnicodeString current;
  auto flush = [&] {
    if (!current.isEmpty()) {
      std::string token;
      current.toUTF8String(token);
      tokens.push_back(std::move(token));
      current.remove();
    }
  };

  for (int32_t i = 0; i < source.length(); i = source.moveIndex32(i, 1)) {
    const UChar32 c = source.char32At(i);
    if (u_isalnum(c) || u_getCombiningClass(c) != 0 ||
        u_charType(c) == U_NON_SPACING_MARK) {
      current.append(c);
    } else if (u_isUWhiteSpace(c)) {
      flush();
    } else {
      flush();
      current.append(c);
      flush();
    }
  }
  flush();
  return tokens;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t keyed_hash(std::string_view key, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h ^ splitmix64(seed));
}

}  // namespace sexism_alert
