#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vmmix/catalog.hpp"
#include "vmmix/costmodel.hpp"
#include "vmmix/offline.hpp"
#include "vmmix/trace.hpp"
#include "vmmix/vm_match.hpp"

namespace vmmix {

// Geometric mean of completed runtimes per class, falling back to all
// classes, then to a fixed default.
class RuntimePredictor {
 public:
  explicit RuntimePredictor(double default_hours = 1.0, int min_class_count = 3);

  double Predict(const JobRecord& job) const;
  void Update(const JobRecord& job, double actual_hours);

 private:
  struct Stats {
    int64_t count = 0;
    double log_sum = 0;
  };
  double default_hours_;
  int min_class_count_;
  std::unordered_map<std::string, Stats> classes_;
  Stats global_;
};

struct OptionDecision {
  Option option = Option::kOnDemand;
  int block_hours = 0;
  double predicted_rate = 1.0;  // expected cost per demanded hour at the prediction
};

struct Capacity {
  double cores = 0;
  double mem_gb = 0;
  bool Fits(const VmShape& shape) const { return shape.TotalCores() <= cores && shape.TotalMemGb() <= mem_gb; }
};

// Idle reserved capacity wins when the shape fits (3-year before 1-year);
// otherwise the cheapest of transient, spot block and on-demand at the
// predicted runtime.
OptionDecision ChooseOption(const VmShape& shape, double predicted_hours, OptionSet options,
                            const RevocationModel& revocation, const PricingCatalog& catalog,
                            const Capacity& idle_3y, const Capacity& idle_1y);

struct PoolTargets {
  int reserved_1y = 0;
  int reserved_3y = 0;
};

// Largest stacked level whose trailing utilization reaches term_rate / rho,
// for each term. Zero when the history is shorter than min_history_slots.
PoolTargets SizeReservedPool(const DemandSeries& history, SlotRange window, const PricingCatalog& catalog,
                             double rho, size_t min_history_slots);

struct SimConfig {
  double predictor_default_hours = 1.0;
  int predictor_min_class_count = 3;
  bool oracle_predictions = false;
  int epoch_months = 1;
  double history_min_days = 90;
  double history_window_days = 365;
  double pool_rho = 1.0;
  bool scheduled_online = false;
  std::optional<RevocationModel> revocation;  // overrides the provider's model
  OptionSet options = kEveryOption;
  // Test hook: replaces the seeded revocation draw. Returns hours until
  // revocation, nullopt for never.
  std::function<std::optional<double>(const JobRecord&)> revocation_sampler;
};

// Keys of the shared config document read by LoadSimConfig.
extern const std::vector<std::string_view> kSimConfigKeys;

// Applies the simulation keys found in `document`; other keys are ignored.
SimConfig LoadSimConfig(const nlohmann::json& document);

struct JobOutcome {
  Option option = Option::kOnDemand;
  VmShape shape;
  double predicted_hours = 0;
  double runtime_hours = 0;
  int block_hours = 0;
  std::optional<double> revoked_after_hours;  // transient or spot block only
  double billed_resource_hours = 0;           // bundle-hours including restarts
  double cost = 0;                            // before sustained-use adjustments
};

struct PoolPurchase {
  int64_t time;
  Option term;
  int units;
};

struct ScheduledPurchase {
  int64_t time;
  ScheduleCandidate candidate;
  int units;
};

struct SustainedAdjustment {
  int64_t month_index;
  std::string layer;
  double on_demand_hours;  // layer units x hours
  double discounted_hours;
  double discount;  // bundle units, subtracted from the on-demand bill
};

struct SimResult {
  std::string provider;
  uint64_t seed = 0;
  uint64_t trace_fingerprint = 0;
  std::vector<JobOutcome> jobs;  // trace order
  std::array<OptionTotals, kAllOptions.size()> totals{};
  std::vector<PoolPurchase> purchases;
  std::vector<ScheduledPurchase> scheduled;
  std::vector<SustainedAdjustment> sustained;
  double demanded_resource_hours = 0;  // requested shapes, bundle-hours
  std::vector<std::string> warnings;

  double TotalCost() const;
  double BilledResourceHours() const;
};

SimResult Simulate(const JobTrace& trace, const ProviderProfile& profile, const PricingCatalog& catalog,
                   const SimConfig& config, uint64_t seed);

}  // namespace vmmix
