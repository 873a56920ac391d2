#include <algorithm>
#include <bitset>
#include <random>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "vmmix/costmodel.hpp"
#include "vmmix/schedopt.hpp"

namespace vmmix {
namespace {

const PricingCatalog kCat = DefaultCatalog();

ScheduleCandidate Daily(int start, int length, double value) {
  ScheduleCandidate c;
  c.period = SchedulePeriod::kDaily;
  c.days = kAllWeekdays;
  c.start_hour = start;
  c.length_hours = length;
  c.annual_hours = 365.0 * length;
  c.value = value;
  return c;
}

TEST(EnumerateDaily, Counts) {
  const auto shells = EnumerateDaily(kCat);
  EXPECT_EQ(shells.size(), 231u);
  int four_hour = 0;
  bool has_first = false;
  std::set<std::pair<int, int>> seen;
  for (const auto& c : shells) {
    EXPECT_GE(c.length_hours, kMinScheduleHoursPerDay);
    EXPECT_LE(c.EndHour(), 24);
    EXPECT_GE(c.annual_hours, kCat.scheduled_min_hours_per_year);
    EXPECT_NEAR(c.blended_rate, (5 * 0.95 + 2 * 0.90) / 7, 1e-12);
    four_hour += c.length_hours == 4;
    has_first |= c.start_hour == 0 && c.length_hours == 4;
    EXPECT_TRUE(seen.insert({c.start_hour, c.length_hours}).second);
  }
  EXPECT_EQ(four_hour, 21);
  EXPECT_TRUE(has_first);
}

TEST(EnumerateWeekly, ThresholdRule) {
  const auto shells = EnumerateWeekly(kCat);
  ASSERT_FALSE(shells.empty());
  bool weekend4 = false;
  bool all7_4 = false;
  for (const auto& c : shells) {
    const int days = std::popcount(c.days);
    EXPECT_GE(52.0 * days * c.length_hours, 1200);
    EXPECT_DOUBLE_EQ(c.annual_hours, 52.0 * days * c.length_hours);
    EXPECT_GE(c.annual_hours, kCat.scheduled_min_hours_per_year);
    EXPECT_NEAR(c.blended_rate, ScheduledBlendedRate(kCat, static_cast<WeekdayMask>(c.days)), 1e-12);
    weekend4 |= c.days == 0x60 && c.length_hours == 4;
    all7_4 |= c.days == kAllWeekdays && c.length_hours == 4;
  }
  EXPECT_FALSE(weekend4);
  // Every-day windows are the daily family; weekly keeps proper subsets.
  EXPECT_FALSE(all7_4);
  const auto again = EnumerateWeekly(kCat);
  ASSERT_EQ(again.size(), shells.size());
  for (size_t i = 0; i < shells.size(); ++i) {
    EXPECT_EQ(std::tie(again[i].days, again[i].start_hour, again[i].length_hours),
              std::tie(shells[i].days, shells[i].start_hour, shells[i].length_hours));
  }
}

TEST(EnumerateMonthly, ThresholdRuleAndCap) {
  const auto shells = EnumerateMonthly(kCat, 1000);
  EXPECT_LE(shells.size(), 1000u);
  EXPECT_EQ(shells.size(), 1000u);
  for (const auto& c : shells) {
    const int days = std::popcount(c.days);
    EXPECT_GE(12.0 * days * c.length_hours, 1200);
    EXPECT_LE(c.days >> kMonthlyScheduleDays, 0u);
  }
  // Coverage ordering puts all 28 days x 24 hours first.
  EXPECT_EQ(std::popcount(shells.front().days), 28);
  EXPECT_EQ(shells.front().length_hours, 24);
  const auto again = EnumerateMonthly(kCat, 1000);
  for (size_t i = 0; i < shells.size(); ++i) {
    EXPECT_EQ(std::tie(again[i].days, again[i].start_hour, again[i].length_hours),
              std::tie(shells[i].days, shells[i].start_hour, shells[i].length_hours));
  }
  const auto big = EnumerateMonthly(kCat, 5000);
  for (size_t i = 1; i < big.size(); ++i) {
    EXPECT_GE(std::popcount(big[i - 1].days) * big[i - 1].length_hours,
              std::popcount(big[i].days) * big[i].length_hours);
  }
  for (const auto& c : big) EXPECT_FALSE(std::popcount(c.days) == 2 && c.length_hours == 24);
}

TEST(PriceCandidates, Examples) {
  ScheduleCandidate weekday;
  weekday.period = SchedulePeriod::kWeekly;
  weekday.days = 0x1F;
  weekday.start_hour = 8;
  weekday.length_hours = 10;
  weekday.annual_hours = 52.0 * 5 * 10;
  weekday.blended_rate = 0.95;

  auto priced = PriceCandidates(kCat, {weekday}, [](const ScheduleCandidate&) { return 1.0; }, 1.0);
  ASSERT_EQ(priced.size(), 1u);
  EXPECT_DOUBLE_EQ(priced[0].normalized_rate, 0.95);
  EXPECT_NEAR(priced[0].value, 0.05 * weekday.annual_hours, 1e-9);

  EXPECT_TRUE(PriceCandidates(kCat, {weekday}, [](const ScheduleCandidate&) { return 0.9; }, 1.0).empty());
  EXPECT_TRUE(PriceCandidates(kCat, {weekday}, [](const ScheduleCandidate&) { return 0.0; }, 1.0).empty());
  // Competing rates above on-demand are capped at 1.
  auto capped = PriceCandidates(kCat, {weekday}, [](const ScheduleCandidate&) { return 1.0; }, 1.7);
  ASSERT_EQ(capped.size(), 1u);
  EXPECT_NEAR(capped[0].value, 0.05 * weekday.annual_hours, 1e-9);
  EXPECT_TRUE(PriceCandidates(kCat, {weekday}, [](const ScheduleCandidate&) { return 1.0; }, 0.9).empty());
}

TEST(PriceCandidates, SurvivorsBeatCompetingRate) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> util(0, 1);
  auto shells = EnumerateDaily(kCat);
  for (const auto& w : EnumerateWeekly(kCat)) shells.push_back(w);
  for (double competing : {0.6, 0.95, 1.0, 1.3}) {
    const auto priced = PriceCandidates(kCat, shells, [&](const ScheduleCandidate&) { return util(rng); }, competing);
    for (const auto& c : priced) {
      EXPECT_LT(c.normalized_rate, std::min(competing, 1.0));
      EXPECT_NEAR(c.normalized_rate, c.blended_rate / c.utilization, 1e-12);
      EXPECT_NEAR(c.value, (std::min(competing, 1.0) - c.normalized_rate) * c.utilization * c.annual_hours, 1e-9);
      EXPECT_GT(c.value, 0);
    }
  }
}

TEST(SelectSchedules, Trivial) {
  EXPECT_TRUE(SelectSchedules({}).empty());
  EXPECT_EQ(TotalValue({}, {}), 0.0);
  const std::vector<ScheduleCandidate> two = {Daily(0, 6, 3), Daily(4, 6, 5)};
  EXPECT_EQ(SelectSchedules(two), (std::vector<size_t>{1}));
}

// Hour-of-week or hour-of-month cells a candidate occupies.
std::bitset<168> WeekCells(const ScheduleCandidate& c) {
  std::bitset<168> out;
  for (int d = 0; d < 7; ++d) {
    if (c.period == SchedulePeriod::kDaily || (c.days >> d) & 1U) {
      for (int h = c.start_hour; h < c.EndHour(); ++h) out.set(d * 24 + h);
    }
  }
  return out;
}

std::bitset<672> MonthCells(const ScheduleCandidate& c) {
  std::bitset<672> out;
  for (int d = 0; d < 28; ++d) {
    if ((c.days >> d) & 1U) {
      for (int h = c.start_hour; h < c.EndHour(); ++h) out.set(d * 24 + h);
    }
  }
  return out;
}

TEST(Conflicts, MatchesCellIntersection) {
  std::mt19937_64 rng(8);
  const auto weekly = EnumerateWeekly(kCat);
  const auto daily = EnumerateDaily(kCat);
  const auto monthly = EnumerateMonthly(kCat, 3000);
  std::uniform_int_distribution<size_t> pw(0, weekly.size() - 1), pd(0, daily.size() - 1),
      pm(0, monthly.size() - 1);
  for (int i = 0; i < 5000; ++i) {
    const auto& a = i % 2 ? weekly[pw(rng)] : daily[pd(rng)];
    const auto& b = weekly[pw(rng)];
    EXPECT_EQ(Conflicts(a, b), (WeekCells(a) & WeekCells(b)).any());
    EXPECT_EQ(Conflicts(a, b), Conflicts(b, a));
    const auto& m1 = monthly[pm(rng)];
    const auto& m2 = monthly[pm(rng)];
    EXPECT_EQ(Conflicts(m1, m2), (MonthCells(m1) & MonthCells(m2)).any());
  }
}

double BruteForceBest(const std::vector<ScheduleCandidate>& cands) {
  const size_t n = cands.size();
  double best = 0;
  for (uint32_t mask = 0; mask < (1U << n); ++mask) {
    double value = 0;
    bool ok = true;
    for (size_t i = 0; i < n && ok; ++i) {
      if (!((mask >> i) & 1U)) continue;
      value += cands[i].value;
      for (size_t j = i + 1; j < n && ok; ++j) {
        if ((mask >> j) & 1U) {
          ok = cands[i].EndHour() <= cands[j].start_hour || cands[j].EndHour() <= cands[i].start_hour;
        }
      }
    }
    if (ok) best = std::max(best, value);
  }
  return best;
}

std::vector<ScheduleCandidate> RandomDaily(std::mt19937_64& rng, size_t n) {
  std::uniform_int_distribution<int> length(4, 24);
  std::uniform_int_distribution<int> value(1, 50);
  std::vector<ScheduleCandidate> out;
  for (size_t i = 0; i < n; ++i) {
    const int l = length(rng);
    std::uniform_int_distribution<int> start(0, 24 - l);
    out.push_back(Daily(start(rng), l, value(rng) * 0.25));
  }
  return out;
}

TEST(SelectDaily, EqualsBruteForce) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + trial % 15;
    const auto cands = RandomDaily(rng, n);
    const auto chosen = SelectDaily(cands);
    EXPECT_EQ(TotalValue(cands, chosen), BruteForceBest(cands));
    EXPECT_EQ(TotalValue(cands, SelectSchedules(cands)), BruteForceBest(cands));
    EXPECT_TRUE(std::is_sorted(chosen.begin(), chosen.end()));
    for (size_t i = 0; i < chosen.size(); ++i) {
      for (size_t j = i + 1; j < chosen.size(); ++j) EXPECT_FALSE(Conflicts(cands[chosen[i]], cands[chosen[j]]));
    }
  }
}

TEST(SelectDaily, AddingCandidateNeverHurts) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto cands = RandomDaily(rng, 12);
    const double before = TotalValue(cands, SelectDaily(cands));
    cands.push_back(RandomDaily(rng, 1).front());
    EXPECT_GE(TotalValue(cands, SelectDaily(cands)), before);
  }
}

TEST(SelectSchedules, MixedFamiliesConflictFreeAndBeatSingles) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> util(0.93, 1.0);
  auto shells = EnumerateDaily(kCat);
  for (const auto& w : EnumerateWeekly(kCat)) shells.push_back(w);
  for (const auto& m : EnumerateMonthly(kCat, 500)) shells.push_back(m);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ScheduleCandidate> subset;
    std::uniform_int_distribution<size_t> pick(0, shells.size() - 1);
    for (int i = 0; i < 60; ++i) subset.push_back(shells[pick(rng)]);
    const auto priced = PriceCandidates(kCat, subset, [&](const ScheduleCandidate&) { return util(rng); }, 1.0);
    const auto chosen = SelectSchedules(priced);
    for (size_t i = 0; i < chosen.size(); ++i) {
      for (size_t j = i + 1; j < chosen.size(); ++j) EXPECT_FALSE(Conflicts(priced[chosen[i]], priced[chosen[j]]));
    }
    const double total = TotalValue(priced, chosen);
    for (const auto& c : priced) EXPECT_GE(total, c.value - 1e-12);
  }
}

}  // namespace
}  // namespace vmmix
