#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "sthgcn/error.hpp"

// Naive local timestamps stored as minutes since 1970-01-01 00:00.

namespace sthgcn::data {

using Minutes = std::int64_t;

inline constexpr Minutes kMinutesPerDay = 1440;
inline constexpr Minutes kMinutesPerWeek = 7 * kMinutesPerDay;

namespace detail {

inline Minutes days_from_civil(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw InputError("invalid calendar date");
  return sys_days{ymd}.time_since_epoch().count();
}

inline Minutes floor_div(Minutes a, Minutes b) {
  Minutes q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace detail

/// Parses `YYYY-MM-DD HH:MM:SS` or `YYYY-MM-DD HH:MM`.
inline Minutes parse_timestamp(std::string_view text) {
  const std::string s(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char tail = 0;
  const int got = std::sscanf(s.c_str(), "%4d-%2d-%2d %2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &sec,
                              &tail);
  if (got != 5 && got != 6)
    throw InputError("malformed timestamp '" + s + "' (expected YYYY-MM-DD HH:MM:SS)");
  if (h > 23 || mi > 59 || sec > 59 || h < 0 || mi < 0 || sec < 0)
    throw InputError("timestamp out of range: '" + s + "'");
  if (sec != 0) throw InputError("timestamp '" + s + "' is not on a whole minute");
  try {
    return detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) *
               kMinutesPerDay +
           h * 60 + mi;
  } catch (const InputError&) {
    throw InputError("invalid date in timestamp '" + s + "'");
  }
}

/// Parses `YYYY-MM-DD` to midnight of that day.
inline Minutes parse_date(std::string_view text) {
  const std::string s(text);
  int y = 0, mo = 0, d = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &mo, &d, &tail) != 3)
    throw InputError("malformed date '" + s + "' (expected YYYY-MM-DD)");
  try {
    return detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) *
           kMinutesPerDay;
  } catch (const InputError&) {
    throw InputError("invalid date '" + s + "'");
  }
}

inline Minutes day_of(Minutes t) { return detail::floor_div(t, kMinutesPerDay); }

inline Minutes minute_of_day(Minutes t) { return t - day_of(t) * kMinutesPerDay; }

/// ISO weekday index, Monday = 0 ... Sunday = 6.
inline int weekday(Minutes t) {
  // 1970-01-01 was a Thursday.
  const Minutes d = day_of(t);
  return static_cast<int>(((d + 3) % 7 + 7) % 7);
}

inline bool is_weekend(Minutes t) { return weekday(t) >= 5; }

/// Minutes elapsed since the most recent Monday 00:00.
inline Minutes minute_of_week(Minutes t) {
  return static_cast<Minutes>(weekday(t)) * kMinutesPerDay + minute_of_day(t);
}

inline std::string format_date(Minutes t) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day_of(t)}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_timestamp(Minutes t) {
  const Minutes m = minute_of_day(t);
  char buf[16];
  std::snprintf(buf, sizeof buf, " %02d:%02d:00", static_cast<int>(m / 60),
                static_cast<int>(m % 60));
  return format_date(t) + buf;
}

}  // namespace sthgcn::data
