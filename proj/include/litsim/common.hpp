#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace litsim {

/// Base class for hard failures surfaced to callers (bad input files,
/// contract violations). Recoverable conditions use result types instead.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Calendar date at day precision.
class Date {
  public:
    constexpr Date() = default;
    Date(int year, unsigned month, unsigned day);

    /// Accepts `YYYY-MM-DD` optionally followed by a time part
    /// (`T...` or ` ...`), which is discarded.
    static std::optional<Date> try_parse(std::string_view text);
    static Date parse(std::string_view text);

    int year() const noexcept { return year_; }
    unsigned month() const noexcept { return month_; }
    unsigned day() const noexcept { return day_; }

    std::string to_string() const;

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

  private:
    int year_ = 1970;
    unsigned month_ = 1;
    unsigned day_ = 1;
};

/// Inclusive date range.
struct DateWindow {
    Date first{1990, 1, 1};
    Date last{2024, 12, 31};

    bool contains(const Date& d) const noexcept { return first <= d && d <= last; }
};

std::string sha256_hex(std::string_view data);

/// Number of UTF-8 code points (invalid bytes count as one each).
std::size_t utf8_length(std::string_view text);

/// Prefix of `text` holding at most `max_chars` code points.
std::string_view utf8_truncate(std::string_view text, std::size_t max_chars);

std::string trim(std::string_view text);

}  // namespace litsim
