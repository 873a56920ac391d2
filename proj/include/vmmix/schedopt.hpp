#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vmmix/calendar.hpp"
#include "vmmix/catalog.hpp"

namespace vmmix {

enum class SchedulePeriod : uint8_t { kDaily, kWeekly, kMonthly };

// A repeating reservation window. Weekly candidates carry a weekday mask
// (bit 0 = Monday); monthly candidates a day-of-month mask over days 1..28
// (bit 0 = day 1). Daily candidates cover every day.
struct ScheduleCandidate {
  SchedulePeriod period = SchedulePeriod::kDaily;
  uint32_t days = 0;
  int start_hour = 0;
  int length_hours = 0;
  double annual_hours = 0;
  double blended_rate = 0;
  double utilization = 0;
  double normalized_rate = 0;
  double value = 0;

  int EndHour() const { return start_hour + length_hours; }
  int DayCount() const;
  bool CoversDay(const CivilTime& t) const;
  bool Covers(const CivilTime& t) const { return t.hour >= start_hour && t.hour < EndHour() && CoversDay(t); }
};

// Candidates conflict when their hour windows overlap on a shared day. Daily
// and weekly conflicts are exact on the hour-of-week grid, monthly against
// monthly on the hour-of-month grid. A weekly and a monthly candidate with
// overlapping hours are treated as conflicting, since over a year every
// day of the month falls on every weekday.
bool Conflicts(const ScheduleCandidate& a, const ScheduleCandidate& b);

inline constexpr int kMinScheduleHoursPerDay = 4;
inline constexpr int kMonthlyScheduleDays = 28;
inline constexpr int kDefaultMonthlyCap = 5000;

// All non-wrapping windows of 4..24 hours: 231 shells.
std::vector<ScheduleCandidate> EnumerateDaily(const PricingCatalog& catalog);

// Proper weekday subsets with one shared window, admitted when
// 52 * days * length reaches the yearly minimum.
std::vector<ScheduleCandidate> EnumerateWeekly(const PricingCatalog& catalog);

// Day-of-month subsets of days 1..28 with one shared window, admitted when
// 12 * days * length reaches the yearly minimum. Emitted by coverage
// (days * length) descending, then more days first, then start hour and day
// mask ascending, and truncated at `cap`.
std::vector<ScheduleCandidate> EnumerateMonthly(const PricingCatalog& catalog, int cap);

// Fills utilization, normalized rate and value. Drops candidates with zero
// utilization or a normalized rate not below min(competing_rate, 1).
std::vector<ScheduleCandidate> PriceCandidates(const PricingCatalog& catalog,
                                               const std::vector<ScheduleCandidate>& shells,
                                               const std::function<double(const ScheduleCandidate&)>& utilization,
                                               double competing_rate);

// Exact weighted-interval DP over daily candidates (intervals on [0, 24)).
// Returns indices into `candidates` in ascending order.
std::vector<size_t> SelectDaily(const std::vector<ScheduleCandidate>& candidates);

// Daily DP, then weekly and monthly candidates admitted greedily by value
// per annual hour against everything already chosen. Falls back to the best
// single candidate when that is worth more. Returns ascending indices.
std::vector<size_t> SelectSchedules(const std::vector<ScheduleCandidate>& candidates);

double TotalValue(const std::vector<ScheduleCandidate>& candidates, const std::vector<size_t>& chosen);

}  // namespace vmmix
