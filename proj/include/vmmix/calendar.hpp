#pragma once

#include <cstdint>

namespace vmmix {

// UTC calendar helpers for epoch-second timestamps.

inline constexpr int64_t kSecondsPerHour = 3600;
inline constexpr int64_t kHoursPerYear = 8760;

struct CivilTime {
  int year;
  int month;         // 1..12
  int day_of_month;  // 1..31
  int day_of_week;   // 0 = Monday .. 6 = Sunday
  int hour;          // 0..23
};

CivilTime ToCivil(int64_t epoch_seconds);

// Months since 1970-01 for the calendar month containing the timestamp.
int64_t MonthIndex(int64_t epoch_seconds);

// Epoch seconds at the first instant of a month index.
int64_t MonthStart(int64_t month_index);

double MonthHours(int64_t month_index);

inline bool IsWeekend(int day_of_week) { return day_of_week >= 5; }

}  // namespace vmmix
