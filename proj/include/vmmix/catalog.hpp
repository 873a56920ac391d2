#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace vmmix {

// Purchasing options. Declaration order is the report order and the
// deterministic tie-break order used wherever options are enumerated.
enum class Option : uint8_t {
  kOnDemand,
  kSustainedUse,
  kReserved1y,
  kReserved3y,
  kScheduledReserved,
  kTransient,
  kSpotBlock,
};

inline constexpr std::array<Option, 7> kAllOptions = {
    Option::kOnDemand,          Option::kSustainedUse, Option::kReserved1y, Option::kReserved3y,
    Option::kScheduledReserved, Option::kTransient,    Option::kSpotBlock,
};

std::string_view OptionName(Option option);
std::optional<Option> ParseOption(std::string_view name);

class OptionSet {
 public:
  constexpr OptionSet() = default;
  constexpr OptionSet(std::initializer_list<Option> options) {
    for (Option o : options) Insert(o);
  }

  constexpr bool Contains(Option o) const { return (bits_ >> static_cast<unsigned>(o)) & 1U; }
  constexpr void Insert(Option o) { bits_ |= static_cast<uint8_t>(1U << static_cast<unsigned>(o)); }
  constexpr void Erase(Option o) { bits_ &= static_cast<uint8_t>(~(1U << static_cast<unsigned>(o))); }
  constexpr bool IsSubsetOf(OptionSet other) const { return (bits_ & ~other.bits_) == 0; }

  std::vector<Option> ToVector() const;
  std::string ToString() const;

  friend constexpr bool operator==(OptionSet, OptionSet) = default;

 private:
  uint8_t bits_ = 0;
};

inline constexpr OptionSet kEveryOption = {
    Option::kOnDemand,          Option::kSustainedUse, Option::kReserved1y, Option::kReserved3y,
    Option::kScheduledReserved, Option::kTransient,    Option::kSpotBlock,
};

// Fractions of the on-demand price per resource-hour (1.0 = on-demand).
struct PricingCatalog {
  double on_demand = 1.0;
  double reserved_1y = 0.60;
  double reserved_3y = 0.40;
  double transient = 0.30;
  double spot_block_base = 0.55;
  double spot_block_step = 0.03;
  int spot_block_max_hours = 6;
  double scheduled_peak = 0.95;
  double scheduled_offpeak = 0.90;
  double scheduled_min_hours_per_year = 1200;
  // (fraction of month, pay fraction) with the breakpoint closing each tier.
  std::vector<std::pair<double, double>> sustained_tiers = {{0.25, 1.00}, {0.50, 0.80}, {0.75, 0.60}, {1.00, 0.40}};
  double customized_surcharge = 1.05;
  double base_dollar_rate = 0.0481;  // $/hour for a 1-core, 4 GB bundle
  double core_price_share = 0.75;

  // Rate of the longest spot block.
  double SpotBlockMaxRate() const { return spot_block_base + spot_block_step * (spot_block_max_hours - 1); }

  // Throws InvariantError naming the first violated invariant.
  void Validate() const;

  friend bool operator==(const PricingCatalog&, const PricingCatalog&) = default;
};

PricingCatalog DefaultCatalog();

// Flat JSON document with keys named after PricingCatalog fields. Missing keys
// keep their defaults; unknown keys and ill-typed values are errors.
PricingCatalog LoadCatalog(std::string_view config_text);
PricingCatalog LoadCatalog(const nlohmann::json& document);
inline PricingCatalog LoadCatalog(const char* config_text) { return LoadCatalog(std::string_view(config_text)); }
inline PricingCatalog LoadCatalog(const std::string& config_text) { return LoadCatalog(std::string_view(config_text)); }
std::string EmitCatalog(const PricingCatalog& catalog);

struct NoRevocation {
  friend bool operator==(NoRevocation, NoRevocation) = default;
};
struct UniformMaxLifetime {
  double max_hours;
  friend bool operator==(UniformMaxLifetime, UniformMaxLifetime) = default;
};
struct ExponentialMean {
  double mean_hours;
  friend bool operator==(ExponentialMean, ExponentialMean) = default;
};
using RevocationModel = std::variant<NoRevocation, UniformMaxLifetime, ExponentialMean>;

// "none", "uniform:24", "exponential:48".
RevocationModel ParseRevocationModel(std::string_view text);
std::string RevocationModelName(const RevocationModel& model);

struct RevocationStats {
  double prob_revoked;
  // Mean run time of a revoked job before its revocation; 0 when never revoked.
  double expected_runtime_given_revoked_hours;
};

RevocationStats GetRevocationStats(const RevocationModel& model, double runtime_hours);

// Time to revocation in hours drawn from a stream keyed by (seed, job id);
// nullopt means the instance is never revoked.
std::optional<double> SampleRevocation(const RevocationModel& model, uint64_t seed, std::string_view job_id);

// Hourly price of a shape in units of the on-demand 1-core/4-GB bundle.
double RateForShape(const PricingCatalog& catalog, double cores, double mem_gb, bool customized);

struct VmType {
  int cores;
  double mem_gb;
  friend bool operator==(const VmType&, const VmType&) = default;
};

std::vector<VmType> DefaultVmMenu();

enum class ProviderId : uint8_t { kAws, kAzure, kGcpStandard, kGcpCustom };

std::string_view ProviderName(ProviderId id);

struct ProviderProfile {
  ProviderId id;
  OptionSet enabled_options;
  RevocationModel revocation;
  std::vector<VmType> vm_types;
  bool allows_customized = false;
  double customized_max_gb_per_core = 6.5;

  std::string_view Name() const { return ProviderName(id); }
  bool SustainedUse() const { return enabled_options.Contains(Option::kSustainedUse); }
};

ProviderProfile GetProviderProfile(ProviderId id);
// Accepts "aws", "azure", "gcp-standard", "gcp-custom"; throws DataError otherwise.
ProviderProfile GetProviderProfile(std::string_view id);

}  // namespace vmmix
