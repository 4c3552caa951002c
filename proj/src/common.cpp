#include "litsim/common.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace litsim {

namespace {

std::optional<unsigned> parse_digits(std::string_view s)
{
    unsigned value = 0;
    if (s.empty()) {
        return std::nullopt;
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

std::size_t utf8_sequence_length(unsigned char lead)
{
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) : year_(year), month_(month), day_(day)
{
    using namespace std::chrono;
    if (!year_month_day{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}.ok()) {
        throw Error("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                    std::to_string(day));
    }
}

std::optional<Date> Date::try_parse(std::string_view text)
{
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    if (text.size() > 10 && text[10] != 'T' && text[10] != 't' && text[10] != ' ') {
        return std::nullopt;
    }
    auto y = parse_digits(text.substr(0, 4));
    auto m = parse_digits(text.substr(5, 2));
    auto d = parse_digits(text.substr(8, 2));
    if (!y || !m || !d) {
        return std::nullopt;
    }
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{static_cast<int>(*y)}, std::chrono::month{*m}, std::chrono::day{*d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{static_cast<int>(*y), *m, *d};
}

Date Date::parse(std::string_view text)
{
    auto parsed = try_parse(text);
    if (!parsed) {
        throw Error("unparseable date '" + std::string(text) + "'");
    }
    return *parsed;
}

std::string Date::to_string() const
{
    std::array<char, 16> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02u", year_, month_, day_);
    return buf.data();
}

std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::size_t utf8_length(std::string_view text)
{
    std::size_t count = 0;
    for (std::size_t i = 0; i < text.size(); ++count) {
        i += utf8_sequence_length(static_cast<unsigned char>(text[i]));
    }
    return count;
}

std::string_view utf8_truncate(std::string_view text, std::size_t max_chars)
{
    std::size_t i = 0;
    for (std::size_t n = 0; i < text.size() && n < max_chars; ++n) {
        i += utf8_sequence_length(static_cast<unsigned char>(text[i]));
    }
    return text.substr(0, std::min(i, text.size()));
}

std::string trim(std::string_view text)
{
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    return std::string(text);
}

}  // namespace litsim
