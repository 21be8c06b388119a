#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sexism_alert {

/// NFC-normalizes UTF-8 text and trims leading/trailing Unicode whitespace.
/// Casing, emoji and misspellings are left untouched. Invalid UTF-8 raises
/// kInvalidArgument.
std::string normalize_text(std::string_view text);

/// True when the text is empty or whitespace-only.
bool is_blank(std::string_view text);

/// Case-folded word tokens: maximal runs of letters/digits, plus every other
/// non-space code point (emoji, punctuation) as a token of its own.
std::vector<std::string> tokenize(std::string_view text);

/// 64-bit FNV-1a over the bytes, finished with a splitmix64 round keyed by
/// `seed`. Portable across platforms; used wherever selection must depend on
/// a stable key and a seed but not on container order.
std::uint64_t keyed_hash(std::string_view key, std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sexism_alert
