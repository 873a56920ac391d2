#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vmmix/catalog.hpp"
#include "vmmix/schedopt.hpp"
#include "vmmix/trace.hpp"

namespace vmmix {

// typed: every job is first rounded to its matched VM shape and billed as
// 1-core/4-GB bundles. fractional: cores and memory are billed as separate
// divisible resources.
enum class OfflineMode : uint8_t { kFractional, kTyped };

std::string_view ModeName(OfflineMode mode);
OfflineMode ParseMode(std::string_view text);
// fractional for providers with customized VMs, typed otherwise.
OfflineMode DefaultMode(const ProviderProfile& profile);

// Options actually usable: the provider's set intersected with the request.
// On-demand is always kept.
OptionSet EffectiveOptions(const ProviderProfile& profile, OptionSet requested);

// A job's contribution to one priced resource dimension. `amount` is in
// layer units (bundles, cores or GB, with any customized surcharge folded
// in); `rate` is the job's cheapest non-reserved price per unit-hour.
struct LayerJob {
  int64_t begin;
  int64_t end;
  double amount;
  double rate;
  Option option;
};

struct OfflineLayer {
  std::string name;
  double weight;  // bundle units per layer unit
  std::vector<LayerJob> jobs;
};

std::vector<OfflineLayer> BuildLayers(const JobTrace& trace, const ProviderProfile& profile,
                                      const PricingCatalog& catalog, OfflineMode mode, OptionSet options);

// Cheapest job-level prices stacked from the bottom: breakpoints are
// (cumulative level, rate) with rates non-decreasing.
struct SlotCostStack {
  size_t slot = 0;
  std::vector<std::pair<double, double>> breakpoints;
  double Demand() const { return breakpoints.empty() ? 0.0 : breakpoints.back().first; }
};

SlotCostStack BuildSlotCostStack(const OfflineLayer& layer, int64_t series_start, int64_t slot_seconds, size_t slot);

// Mean stack price over the levels of `unit` (1-based), capped by
// `sustained_rate`; on-demand when the unit carries no demand.
double NonreservedRate(const SlotCostStack& stack, int unit, double sustained_rate, const PricingCatalog& catalog);

// Per-hour price of on-demand usage averaging `avg_demand` units over a
// month under sustained-use packing; 1.0 at zero.
double SustainedSelectionRate(const PricingCatalog& catalog, double avg_demand);

struct ReservationTerm {
  Option option;
  size_t length_slots;
  double rate;
};

// Exact minimum-cost cover of one unit's cell costs by non-reserved cells and
// reservation windows. Windows start on multiples of window_step and must
// end inside the series. Returns (start slot, term index) per commitment.
struct ReservationChoice {
  size_t start;
  size_t term;
};
double CommitReservations(const std::vector<double>& cell_cost, const std::vector<ReservationTerm>& terms,
                          size_t window_step, std::vector<ReservationChoice>* chosen);

struct OfflineOptions {
  OptionSet options = kEveryOption;
  OfflineMode mode = OfflineMode::kTyped;
  double slot_hours = 1.0;
  int window_step_slots = 168;
  int monthly_cap = kDefaultMonthlyCap;
  int threads = 0;  // 0 = hardware concurrency
};

struct OptionTotals {
  double resource_hours = 0;  // billed bundle-hours
  double relative_cost = 0;   // bundle-hours at on-demand price
};

struct ReservationCommitment {
  int layer;
  int unit;
  Option term;
  size_t start_slot;
  size_t length_slots;
};

struct ScheduledCommitment {
  int layer;
  int unit;
  int year;  // index of the 8760-slot block
  ScheduleCandidate candidate;
};

struct LayerSummary {
  std::string name;
  double weight = 0;
  double peak = 0;
  double demanded_hours = 0;  // layer units x hours
};

struct AllocationPlan {
  std::string provider;
  OfflineMode mode = OfflineMode::kTyped;
  OptionSet options;
  double slot_hours = 1.0;
  int64_t series_start = 0;
  size_t slot_count = 0;
  uint64_t trace_fingerprint = 0;
  std::vector<LayerSummary> layers;
  std::array<OptionTotals, kAllOptions.size()> totals{};
  std::vector<ReservationCommitment> reservations;
  std::vector<ScheduledCommitment> schedules;
  // Billed bundle-hours per slot and option, for plotting.
  std::vector<std::array<double, kAllOptions.size()>> slot_mix;
  std::vector<std::string> warnings;

  double TotalCost() const;
  double BilledResourceHours() const;
  double DemandedResourceHours() const;  // bundle-hours
};

AllocationPlan OptimizeOffline(const JobTrace& trace, const ProviderProfile& profile, const PricingCatalog& catalog,
                               const OfflineOptions& options);

}  // namespace vmmix
