#include "litsim/text.hpp"

namespace litsim::text {

char32_t decode_utf8(std::string_view input, std::size_t& pos)
{
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(input[i]); };
    const unsigned char lead = byte(pos);
    if (lead < 0x80) {
        ++pos;
        return lead;
    }
    std::size_t extra = 0;
    char32_t cp = 0;
    if ((lead >> 5) == 0x6) {
        extra = 1;
        cp = lead & 0x1F;
    } else if ((lead >> 4) == 0xE) {
        extra = 2;
        cp = lead & 0x0F;
    } else if ((lead >> 3) == 0x1E) {
        extra = 3;
        cp = lead & 0x07;
    } else {
        ++pos;
        return U'�';
    }
    if (pos + extra >= input.size()) {
        ++pos;
        return U'�';
    }
    for (std::size_t i = 1; i <= extra; ++i) {
        if ((byte(pos + i) >> 6) != 0x2) {
            ++pos;
            return U'�';
        }
        cp = (cp << 6) | (byte(pos + i) & 0x3F);
    }
    pos += extra + 1;
    return cp;
}

void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

char32_t fold_case(char32_t cp)
{
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    if (cp < 0x80) return cp;
    // Latin-1 Supplement, skipping the multiplication sign
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    // Latin Extended-A: alternating upper/lower pairs
    if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177)) return cp | 1;
    if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) return (cp & 1) ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    // Greek capitals (0x3A2 is unassigned)
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
    // Cyrillic
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

bool is_word_char(char32_t cp)
{
    if (cp < 0x80) {
        return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
    }
    if (cp == U'�') return false;
    // Latin-1 punctuation and symbols, keeping ª µ º
    if (cp >= 0x80 && cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;
    // General Punctuation, super/subscripts, currency, letterlike arrows etc.
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;
    // CJK symbols and punctuation
    if (cp >= 0x3000 && cp <= 0x303F) return false;
    // full-width ASCII punctuation
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    if (cp == 0xFEFF) return false;
    return true;
}

std::vector<std::string> tokenize(std::string_view input)
{
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < input.size()) {
        const char32_t cp = decode_utf8(input, pos);
        if (is_word_char(cp)) {
            append_utf8(current, fold_case(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

}  // namespace litsim::text
