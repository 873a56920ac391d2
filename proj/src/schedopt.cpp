#include "vmmix/schedopt.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "vmmix/costmodel.hpp"
#include "vmmix/error.hpp"

namespace vmmix {

namespace {

constexpr uint32_t kAllMonthDays = (1U << kMonthlyScheduleDays) - 1;

// Blended rate of a day-of-month schedule: each of days 1..28 falls on a
// weekend 2/7 of the time across a year.
double MonthlyBlendedRate(const PricingCatalog& catalog) {
  return (5 * catalog.scheduled_peak + 2 * catalog.scheduled_offpeak) / 7.0;
}

ScheduleCandidate Shell(SchedulePeriod period, uint32_t days, int start, int length, double annual_hours,
                        double blended) {
  ScheduleCandidate c;
  c.period = period;
  c.days = days;
  c.start_hour = start;
  c.length_hours = length;
  c.annual_hours = annual_hours;
  c.blended_rate = blended;
  return c;
}

bool HoursOverlap(const ScheduleCandidate& a, const ScheduleCandidate& b) {
  return a.start_hour < b.EndHour() && b.start_hour < a.EndHour();
}

}  // namespace

int ScheduleCandidate::DayCount() const {
  switch (period) {
    case SchedulePeriod::kDaily:
      return 7;
    case SchedulePeriod::kWeekly:
    case SchedulePeriod::kMonthly:
      return std::popcount(days);
  }
  return 0;
}

bool ScheduleCandidate::CoversDay(const CivilTime& t) const {
  switch (period) {
    case SchedulePeriod::kDaily:
      return true;
    case SchedulePeriod::kWeekly:
      return (days >> t.day_of_week) & 1U;
    case SchedulePeriod::kMonthly:
      return t.day_of_month <= kMonthlyScheduleDays && ((days >> (t.day_of_month - 1)) & 1U);
  }
  return false;
}

bool Conflicts(const ScheduleCandidate& a, const ScheduleCandidate& b) {
  if (!HoursOverlap(a, b)) return false;
  if (a.period == SchedulePeriod::kDaily || b.period == SchedulePeriod::kDaily) return true;
  if (a.period == b.period) return (a.days & b.days) != 0;
  return true;
}

std::vector<ScheduleCandidate> EnumerateDaily(const PricingCatalog& catalog) {
  const double blended = ScheduledBlendedRate(catalog, kAllWeekdays);
  std::vector<ScheduleCandidate> out;
  for (int length = kMinScheduleHoursPerDay; length <= 24; ++length) {
    for (int start = 0; start + length <= 24; ++start) {
      out.push_back(Shell(SchedulePeriod::kDaily, kAllWeekdays, start, length, 365.0 * length, blended));
    }
  }
  return out;
}

std::vector<ScheduleCandidate> EnumerateWeekly(const PricingCatalog& catalog) {
  std::vector<ScheduleCandidate> out;
  for (uint32_t mask = 1; mask < kAllWeekdays; ++mask) {
    const int n = std::popcount(mask);
    const double blended = ScheduledBlendedRate(catalog, static_cast<WeekdayMask>(mask));
    for (int length = kMinScheduleHoursPerDay; length <= 24; ++length) {
      const double annual = 52.0 * n * length;
      if (annual < catalog.scheduled_min_hours_per_year) continue;
      for (int start = 0; start + length <= 24; ++start) {
        out.push_back(Shell(SchedulePeriod::kWeekly, mask, start, length, annual, blended));
      }
    }
  }
  return out;
}

std::vector<ScheduleCandidate> EnumerateMonthly(const PricingCatalog& catalog, int cap) {
  if (cap <= 0) throw DataError("enumerate_monthly: cap must be positive");
  struct Shape {
    int days;
    int length;
  };
  std::vector<Shape> shapes;
  for (int days = 1; days <= kMonthlyScheduleDays; ++days) {
    for (int length = kMinScheduleHoursPerDay; length <= 24; ++length) {
      if (12.0 * days * length >= catalog.scheduled_min_hours_per_year) shapes.push_back({days, length});
    }
  }
  std::sort(shapes.begin(), shapes.end(), [](const Shape& a, const Shape& b) {
    const int ca = a.days * a.length;
    const int cb = b.days * b.length;
    if (ca != cb) return ca > cb;
    return a.days > b.days;
  });

  const double blended = MonthlyBlendedRate(catalog);
  std::vector<ScheduleCandidate> out;
  for (const Shape& s : shapes) {
    for (int start = 0; start + s.length <= 24; ++start) {
      // Gosper's hack walks k-subsets in increasing mask order.
      uint32_t mask = (1U << s.days) - 1;
      while (mask <= kAllMonthDays) {
        out.push_back(Shell(SchedulePeriod::kMonthly, mask, start, s.length, 12.0 * s.days * s.length, blended));
        if (static_cast<int>(out.size()) >= cap) return out;
        const uint32_t low = mask & -mask;
        const uint32_t ripple = mask + low;
        if (ripple == 0) break;
        mask = ripple | (((mask ^ ripple) >> 2) / low);
      }
    }
  }
  return out;
}

std::vector<ScheduleCandidate> PriceCandidates(const PricingCatalog& catalog,
                                               const std::vector<ScheduleCandidate>& shells,
                                               const std::function<double(const ScheduleCandidate&)>& utilization,
                                               double competing_rate) {
  (void)catalog;
  if (!(competing_rate > 0)) throw DataError("price_candidates: competing rate must be positive");
  const double ceiling = std::min(competing_rate, 1.0);
  std::vector<ScheduleCandidate> out;
  for (const ScheduleCandidate& shell : shells) {
    const double util = utilization(shell);
    if (!(util > 0)) continue;
    ScheduleCandidate c = shell;
    c.utilization = std::min(util, 1.0);
    c.normalized_rate = c.blended_rate / c.utilization;
    if (c.normalized_rate >= ceiling) continue;
    c.value = (ceiling - c.normalized_rate) * c.utilization * c.annual_hours;
    out.push_back(c);
  }
  return out;
}

std::vector<size_t> SelectDaily(const std::vector<ScheduleCandidate>& candidates) {
  std::vector<size_t> order;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].period == SchedulePeriod::kDaily && candidates[i].value > 0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return candidates[a].EndHour() < candidates[b].EndHour(); });

  const size_t n = order.size();
  // prev[j]: number of sorted intervals ending at or before interval j starts.
  std::vector<size_t> prev(n);
  for (size_t j = 0; j < n; ++j) {
    const int start = candidates[order[j]].start_hour;
    prev[j] = static_cast<size_t>(
        std::upper_bound(order.begin(), order.begin() + j, start,
                         [&](int s, size_t idx) { return s < candidates[idx].EndHour(); }) -
        order.begin());
  }
  std::vector<double> best(n + 1, 0.0);
  for (size_t j = 0; j < n; ++j) {
    best[j + 1] = std::max(best[j], candidates[order[j]].value + best[prev[j]]);
  }
  std::vector<size_t> chosen;
  for (size_t j = n; j > 0;) {
    if (best[j] == best[j - 1]) {
      --j;
    } else {
      chosen.push_back(order[j - 1]);
      j = prev[j - 1];
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

double TotalValue(const std::vector<ScheduleCandidate>& candidates, const std::vector<size_t>& chosen) {
  double total = 0;
  for (size_t i : chosen) total += candidates[i].value;
  return total;
}

std::vector<size_t> SelectSchedules(const std::vector<ScheduleCandidate>& candidates) {
  std::vector<size_t> chosen = SelectDaily(candidates);

  std::vector<size_t> rest;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].period != SchedulePeriod::kDaily && candidates[i].value > 0) rest.push_back(i);
  }
  std::stable_sort(rest.begin(), rest.end(), [&](size_t a, size_t b) {
    return candidates[a].value / candidates[a].annual_hours > candidates[b].value / candidates[b].annual_hours;
  });
  for (size_t i : rest) {
    const bool clash =
        std::any_of(chosen.begin(), chosen.end(), [&](size_t j) { return Conflicts(candidates[i], candidates[j]); });
    if (!clash) chosen.push_back(i);
  }
  std::sort(chosen.begin(), chosen.end());

  size_t single = candidates.size();
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].value > 0 && (single == candidates.size() || candidates[i].value > candidates[single].value)) {
      single = i;
    }
  }
  if (single != candidates.size() && candidates[single].value > TotalValue(candidates, chosen)) return {single};
  return chosen;
}

}  // namespace vmmix
