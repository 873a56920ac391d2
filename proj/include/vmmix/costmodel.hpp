#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vmmix/catalog.hpp"
#include "vmmix/trace.hpp"

namespace vmmix {

// Per-option cost of running work, in units of the on-demand price.
//
// normalized_rate is expected cost divided by expected running time (a
// revoked transient job runs longer because it restarts). demand_rate is
// expected cost divided by the job's own runtime, i.e. the price paid per
// demanded resource-hour; option selection compares demand rates.
struct CostQuote {
  Option option = Option::kOnDemand;
  int block_hours = 0;  // spot block length, 0 otherwise
  double runtime_hours = 0;
  double normalized_rate = 1.0;
  double expected_cost = 0;
  double expected_runtime_hours = 0;

  double DemandRate() const { return expected_cost / runtime_hours; }
};

CostQuote OnDemandQuote(const PricingCatalog& catalog, double runtime_hours);

// Restart-once model: a revoked transient run is restarted from scratch on
// on-demand.
CostQuote TransientQuote(const PricingCatalog& catalog, const RevocationModel& model, double runtime_hours);

// Smallest block at least as long as the runtime; nullopt past the longest block.
std::optional<CostQuote> SpotBlockQuote(const PricingCatalog& catalog, double runtime_hours);
double SpotBlockRate(const PricingCatalog& catalog, int block_hours);

// Cumulative cost of one resource unit used for fraction f of a month, in
// month-fractions of the on-demand price (1.0 = a full month at on-demand).
double SustainedTierCost(const PricingCatalog& catalog, double usage_fraction);

// Bill for a month whose on-demand usage averages avg_demand units.
double SustainedMonthlyBill(const PricingCatalog& catalog, double avg_demand, double month_hours);

// The hours of a month billed at the full on-demand price (the first tier of
// every packed unit) versus the discounted remainder.
struct SustainedSplit {
  double full_price_hours = 0;
  double discounted_hours = 0;
  double discounted_cost = 0;
};
SustainedSplit SplitSustainedBill(const PricingCatalog& catalog, double avg_demand, double month_hours);

// term_rate / utilization; nullopt when the unit is never used.
std::optional<double> ReservedQuote(double term_rate, double utilization);

// Bit d set = day d of the week, 0 = Monday .. 6 = Sunday.
using WeekdayMask = uint8_t;
inline constexpr WeekdayMask kAllWeekdays = 0x7F;

double ScheduledBlendedRate(const PricingCatalog& catalog, WeekdayMask days);

// Quotes for the non-reserved options the profile enables. On-demand is
// always present; transient and spot block only when enabled and applicable.
std::vector<CostQuote> JobNonreservedQuotes(const JobRecord& job, const ProviderProfile& profile,
                                            const PricingCatalog& catalog);
std::vector<CostQuote> NonreservedQuotes(double runtime_hours, OptionSet options, const RevocationModel& revocation,
                                         const PricingCatalog& catalog);

// Tie-break order when rates are equal: reserved, scheduled, transient, spot
// block, on-demand. Lower rank wins.
int TieRank(Option option);

// Lowest demand rate, ties by TieRank.
const CostQuote& CheapestQuote(const std::vector<CostQuote>& quotes);

}  // namespace vmmix
