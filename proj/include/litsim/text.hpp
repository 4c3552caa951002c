#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace litsim::text {

/// Lowercased word tokens of `input` in order of appearance.
///
/// A token is a maximal run of word characters: ASCII letters and digits,
/// plus any non-ASCII code point outside the common punctuation and space
/// blocks. Case folding covers ASCII, Latin-1, Latin Extended-A, Greek and
/// Cyrillic. No stemming and no stop-word removal, so the output is
/// bit-reproducible and trivially matched by test oracles.
std::vector<std::string> tokenize(std::string_view input);

/// Decodes one code point starting at `pos`, advancing it. Malformed
/// sequences decode to U+FFFD and consume one byte.
char32_t decode_utf8(std::string_view input, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

char32_t fold_case(char32_t cp);

bool is_word_char(char32_t cp);

}  // namespace litsim::text
