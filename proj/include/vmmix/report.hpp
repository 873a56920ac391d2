#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vmmix/catalog.hpp"
#include "vmmix/offline.hpp"
#include "vmmix/online.hpp"
#include "vmmix/trace.hpp"

namespace vmmix {

// Every job at on-demand on the shape the optimizer bills it on (matched VM
// type in typed mode, the divisible shape in fractional mode).
double BaselineOnDemand(const JobTrace& trace, const ProviderProfile& profile, const PricingCatalog& catalog,
                        OfflineMode mode);

// Peak demand reserved for the whole horizon at the 1-year rate, scaled by
// the layer's bundle weight. Throws on an empty or all-zero series.
double BaselineReservedPeak(const DemandSeries& demand, const PricingCatalog& catalog, double weight = 1.0);

struct Baselines {
  double on_demand = 0;
  double reserved_peak = 0;
  uint64_t trace_fingerprint = 0;
};

// Both baselines with the layering of `mode`; zero for an empty trace.
Baselines ComputeBaselines(const JobTrace& trace, const ProviderProfile& profile, const PricingCatalog& catalog,
                           OfflineMode mode, double slot_hours);

struct MixEntry {
  Option option = Option::kOnDemand;
  double resource_hours = 0;
  double relative_cost = 0;
  double dollar_cost = 0;
  double mix_fraction = 0;
  friend bool operator==(const MixEntry&, const MixEntry&) = default;
};

struct MixReport {
  std::string source;  // "offline" or "simulate"
  std::string provider;
  std::string mode;
  uint64_t trace_fingerprint = 0;
  std::optional<uint64_t> seed;
  std::vector<MixEntry> entries;  // enabled options in report order
  MixEntry totals;                // option field unused
  double baseline_on_demand = 0;
  double baseline_reserved_peak = 0;
  double base_dollar_rate = 0;
  double pct_of_on_demand = 0;
  double pct_of_reserved_peak = 0;
  std::vector<std::string> warnings;

  friend bool operator==(const MixReport&, const MixReport&) = default;
};

MixReport BuildMixReport(const AllocationPlan& plan, const Baselines& baselines, const PricingCatalog& catalog);
MixReport BuildMixReport(const SimResult& result, OptionSet options, OfflineMode mode, const Baselines& baselines,
                         const PricingCatalog& catalog);

enum class ReportFormat { kJson, kCsv };
ReportFormat ParseReportFormat(std::string_view text);

std::string EmitReport(const MixReport& report, ReportFormat format);
std::string EmitReports(const std::vector<MixReport>& reports, ReportFormat format);

// Reads a JSON document written by EmitReport or EmitReports.
std::vector<MixReport> ParseReports(std::string_view json_text);

// Per-slot demand and billed bundle-hours per option, as CSV.
std::string EmitSeries(const AllocationPlan& plan);

}  // namespace vmmix
