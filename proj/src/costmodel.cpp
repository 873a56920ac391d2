#include "vmmix/costmodel.hpp"

#include <bit>
#include <algorithm>
#include <cmath>

#include "vmmix/calendar.hpp"
#include "vmmix/error.hpp"

namespace vmmix {

CostQuote OnDemandQuote(const PricingCatalog& catalog, double runtime_hours) {
  CostQuote q;
  q.option = Option::kOnDemand;
  q.runtime_hours = runtime_hours;
  q.normalized_rate = catalog.on_demand;
  q.expected_cost = catalog.on_demand * runtime_hours;
  q.expected_runtime_hours = runtime_hours;
  return q;
}

CostQuote TransientQuote(const PricingCatalog& catalog, const RevocationModel& model, double runtime_hours) {
  if (!(runtime_hours > 0)) throw DataError("transient_quote: runtime must be positive");
  const auto [revoked, revoked_runtime] = GetRevocationStats(model, runtime_hours);
  const double p_t = catalog.transient;
  const double p_od = catalog.on_demand;
  const double t = runtime_hours;
  CostQuote q;
  q.option = Option::kTransient;
  q.runtime_hours = t;
  q.expected_cost = (1 - revoked) * p_t * t + revoked * (p_t * revoked_runtime + p_od * t);
  q.expected_runtime_hours = (1 - revoked) * t + revoked * (revoked_runtime + t);
  q.normalized_rate = q.expected_cost / q.expected_runtime_hours;
  return q;
}

double SpotBlockRate(const PricingCatalog& catalog, int block_hours) {
  return catalog.spot_block_base + catalog.spot_block_step * (block_hours - 1);
}

std::optional<CostQuote> SpotBlockQuote(const PricingCatalog& catalog, double runtime_hours) {
  if (!(runtime_hours > 0)) throw DataError("spot_block_quote: runtime must be positive");
  const double block = std::ceil(runtime_hours);
  if (block > catalog.spot_block_max_hours) return std::nullopt;
  CostQuote q;
  q.option = Option::kSpotBlock;
  q.block_hours = static_cast<int>(block);
  q.runtime_hours = runtime_hours;
  q.normalized_rate = SpotBlockRate(catalog, q.block_hours);
  q.expected_cost = q.normalized_rate * runtime_hours;  // early termination pays only for use
  q.expected_runtime_hours = runtime_hours;
  return q;
}

double SustainedTierCost(const PricingCatalog& catalog, double usage_fraction) {
  if (!(usage_fraction >= 0 && usage_fraction <= 1)) {
    throw DataError("sustained_tier_cost: usage fraction must lie in [0, 1]");
  }
  double cost = 0;
  double lower = 0;
  for (const auto& [breakpoint, pay] : catalog.sustained_tiers) {
    if (usage_fraction <= lower) break;
    cost += pay * (std::min(usage_fraction, breakpoint) - lower);
    lower = breakpoint;
  }
  return cost;
}

double SustainedMonthlyBill(const PricingCatalog& catalog, double avg_demand, double month_hours) {
  if (avg_demand < 0 || !(month_hours > 0)) throw DataError("sustained_monthly_bill: invalid arguments");
  const double full_units = std::floor(avg_demand);
  const double remainder = avg_demand - full_units;
  return (full_units * SustainedTierCost(catalog, 1.0) + SustainedTierCost(catalog, remainder)) * month_hours;
}

SustainedSplit SplitSustainedBill(const PricingCatalog& catalog, double avg_demand, double month_hours) {
  SustainedSplit split;
  const double first_tier = catalog.sustained_tiers.front().first;
  const double full_units = std::floor(avg_demand);
  const double remainder = avg_demand - full_units;
  split.full_price_hours = (full_units * first_tier + std::min(remainder, first_tier)) * month_hours;
  split.discounted_hours = avg_demand * month_hours - split.full_price_hours;
  split.discounted_cost =
      SustainedMonthlyBill(catalog, avg_demand, month_hours) - split.full_price_hours * catalog.on_demand;
  return split;
}

std::optional<double> ReservedQuote(double term_rate, double utilization) {
  if (!(utilization > 0)) return std::nullopt;
  return term_rate / utilization;
}

double ScheduledBlendedRate(const PricingCatalog& catalog, WeekdayMask days) {
  days &= kAllWeekdays;
  if (days == 0) throw DataError("scheduled_blended_rate: empty day set");
  double sum = 0;
  for (int d = 0; d < 7; ++d) {
    if (days & (1U << d)) sum += IsWeekend(d) ? catalog.scheduled_offpeak : catalog.scheduled_peak;
  }
  return sum / std::popcount(days);
}

std::vector<CostQuote> NonreservedQuotes(double runtime_hours, OptionSet options, const RevocationModel& revocation,
                                         const PricingCatalog& catalog) {
  std::vector<CostQuote> quotes;
  quotes.push_back(OnDemandQuote(catalog, runtime_hours));
  if (options.Contains(Option::kTransient)) quotes.push_back(TransientQuote(catalog, revocation, runtime_hours));
  if (options.Contains(Option::kSpotBlock)) {
    if (auto q = SpotBlockQuote(catalog, runtime_hours)) quotes.push_back(*q);
  }
  return quotes;
}

std::vector<CostQuote> JobNonreservedQuotes(const JobRecord& job, const ProviderProfile& profile,
                                            const PricingCatalog& catalog) {
  return NonreservedQuotes(job.RuntimeHours(), profile.enabled_options, profile.revocation, catalog);
}

int TieRank(Option option) {
  switch (option) {
    case Option::kReserved3y:
      return 0;
    case Option::kReserved1y:
      return 1;
    case Option::kScheduledReserved:
      return 2;
    case Option::kTransient:
      return 3;
    case Option::kSpotBlock:
      return 4;
    case Option::kSustainedUse:
      return 5;
    case Option::kOnDemand:
      return 6;
  }
  return 7;
}

const CostQuote& CheapestQuote(const std::vector<CostQuote>& quotes) {
  if (quotes.empty()) throw DataError("no quotes to choose from");
  const CostQuote* best = &quotes.front();
  for (const CostQuote& q : quotes) {
    const double a = q.DemandRate();
    const double b = best->DemandRate();
    if (a < b || (a == b && TieRank(q.option) < TieRank(best->option))) best = &q;
  }
  return *best;
}

}  // namespace vmmix
