#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace labrisk {

// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
struct Date {
  std::int32_t days = 0;

  auto operator<=>(const Date&) const = default;

  static Date from_ymd(int y, int m, int d) {
    // Howard Hinnant's days_from_civil.
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return Date{static_cast<std::int32_t>(era) * 146097 +
                static_cast<std::int32_t>(doe) - 719468};
  }

  struct Ymd {
    int year, month, day;
  };

  Ymd to_ymd() const {
    // Howard Hinnant's civil_from_days.
    std::int32_t z = days + 719468;
    const std::int32_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int32_t y = static_cast<std::int32_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
  }

  std::string to_string() const {
    auto [y, m, d] = to_ymd();
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
  }
};

namespace detail {
inline bool parse_int(std::string_view s, int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}
inline bool valid_ymd(int y, int m, int d) {
  if (m < 1 || m > 12 || d < 1) return false;
  static const int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int dim = len[m - 1];
  if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) dim = 29;
  return d <= dim;
}
}  // namespace detail

// Strict ISO-8601 "YYYY-MM-DD".
inline std::optional<Date> parse_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y, m, d;
  if (!detail::parse_int(s.substr(0, 4), y) ||
      !detail::parse_int(s.substr(5, 2), m) ||
      !detail::parse_int(s.substr(8, 2), d))
    return std::nullopt;
  if (!detail::valid_ymd(y, m, d)) return std::nullopt;
  return Date::from_ymd(y, m, d);
}

// Permissive scan for free-text date fields that may pack several dates into
// one string. Recognizes YYYY-MM-DD and MM/DD/YYYY tokens anywhere in the
// input and returns the earliest; nullopt when no token parses.
inline std::optional<Date> earliest_date_in(std::string_view s) {
  std::optional<Date> best;
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  for (std::size_t i = 0; i + 10 <= s.size(); ++i) {
    std::optional<Date> d;
    if (s[i + 4] == '-') {
      d = parse_iso_date(s.substr(i, 10));
    } else if (s[i + 2] == '/' && s[i + 5] == '/' && digit(s[i]) &&
               digit(s[i + 1]) && digit(s[i + 3]) && digit(s[i + 4])) {
      int mo, da, yr;
      if (detail::parse_int(s.substr(i, 2), mo) &&
          detail::parse_int(s.substr(i + 3, 2), da) &&
          detail::parse_int(s.substr(i + 6, 4), yr) &&
          detail::valid_ymd(yr, mo, da))
        d = Date::from_ymd(yr, mo, da);
    }
    if (d && (!best || *d < *best)) best = d;
  }
  return best;
}

inline double years_between(Date from, Date to) {
  return static_cast<double>(to.days - from.days) / 365.25;
}

}  // namespace labrisk
