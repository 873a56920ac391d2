#include "vmmix/report.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "vmmix/error.hpp"

namespace vmmix {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string Number(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string Rounded(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

std::string Hex(uint64_t value) {
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

uint64_t ParseHex(const std::string& text) {
  uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, 16);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw DataError("report: bad trace_fingerprint");
  return value;
}

double Percent(double total, double baseline) { return baseline > 0 ? 100.0 * total / baseline : 0.0; }

void Finish(MixReport& r, const Baselines& b, const PricingCatalog& catalog) {
  r.base_dollar_rate = catalog.base_dollar_rate;
  r.baseline_on_demand = b.on_demand;
  r.baseline_reserved_peak = b.reserved_peak;
  for (MixEntry& e : r.entries) {
    e.dollar_cost = e.relative_cost * catalog.base_dollar_rate;
    r.totals.resource_hours += e.resource_hours;
    r.totals.relative_cost += e.relative_cost;
  }
  r.totals.dollar_cost = r.totals.relative_cost * catalog.base_dollar_rate;
  for (MixEntry& e : r.entries) {
    e.mix_fraction = r.totals.resource_hours > 0 ? e.resource_hours / r.totals.resource_hours : 0.0;
    r.totals.mix_fraction += e.mix_fraction;
  }
  r.pct_of_on_demand = Percent(r.totals.relative_cost, b.on_demand);
  r.pct_of_reserved_peak = Percent(r.totals.relative_cost, b.reserved_peak);
}

ordered_json ToJson(const MixReport& r) {
  ordered_json j;
  j["provider"] = r.provider;
  j["mode"] = r.mode;
  j["source"] = r.source;
  j["trace_fingerprint"] = Hex(r.trace_fingerprint);
  if (r.seed) j["seed"] = *r.seed;
  ordered_json options = ordered_json::object();
  ordered_json fractions = ordered_json::object();
  for (const MixEntry& e : r.entries) {
    const std::string name(OptionName(e.option));
    options[name] = {{"resource_hours", e.resource_hours},
                     {"relative_cost", e.relative_cost},
                     {"dollar_cost", e.dollar_cost},
                     {"mix_fraction", e.mix_fraction}};
    fractions[name] = e.mix_fraction;
  }
  j["options"] = options;
  j["totals"] = {{"resource_hours", r.totals.resource_hours},
                 {"relative_cost", r.totals.relative_cost},
                 {"dollar_cost", r.totals.dollar_cost}};
  j["baselines"] = {{"base_dollar_rate", r.base_dollar_rate},
                    {"on_demand", {{"relative_cost", r.baseline_on_demand},
                                   {"dollar_cost", r.baseline_on_demand * r.base_dollar_rate}}},
                    {"reserved_peak", {{"relative_cost", r.baseline_reserved_peak},
                                       {"dollar_cost", r.baseline_reserved_peak * r.base_dollar_rate}}}};
  j["mix_fractions"] = fractions;
  j["pct_of_on_demand"] = r.pct_of_on_demand;
  j["pct_of_reserved_peak"] = r.pct_of_reserved_peak;
  j["display"] = {{"total_dollar_cost", Rounded(r.totals.dollar_cost)},
                  {"pct_of_on_demand", Rounded(r.pct_of_on_demand)},
                  {"pct_of_reserved_peak", Rounded(r.pct_of_reserved_peak)}};
  j["warnings"] = r.warnings;
  return j;
}

MixReport FromJson(const ordered_json& j) {
  MixReport r;
  try {
    r.provider = j.at("provider").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.trace_fingerprint = ParseHex(j.at("trace_fingerprint").get<std::string>());
    if (j.contains("seed")) r.seed = j.at("seed").get<uint64_t>();
    for (const auto& [name, e] : j.at("options").items()) {
      const std::optional<Option> option = ParseOption(name);
      if (!option) throw DataError("report: unknown option '" + name + "'");
      r.entries.push_back(MixEntry{*option, e.at("resource_hours").get<double>(), e.at("relative_cost").get<double>(),
                                   e.at("dollar_cost").get<double>(), e.at("mix_fraction").get<double>()});
      r.totals.mix_fraction += r.entries.back().mix_fraction;
    }
    const auto& t = j.at("totals");
    r.totals.resource_hours = t.at("resource_hours").get<double>();
    r.totals.relative_cost = t.at("relative_cost").get<double>();
    r.totals.dollar_cost = t.at("dollar_cost").get<double>();
    const auto& b = j.at("baselines");
    r.base_dollar_rate = b.at("base_dollar_rate").get<double>();
    r.baseline_on_demand = b.at("on_demand").at("relative_cost").get<double>();
    r.baseline_reserved_peak = b.at("reserved_peak").at("relative_cost").get<double>();
    r.pct_of_on_demand = j.at("pct_of_on_demand").get<double>();
    r.pct_of_reserved_peak = j.at("pct_of_reserved_peak").get<double>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
  return r;
}

std::string Csv(const MixReport& r) {
  std::ostringstream out;
  out << "option,resource_hours,relative_cost,dollar_cost,mix_fraction\n";
  for (const MixEntry& e : r.entries) {
    out << OptionName(e.option) << ',' << Number(e.resource_hours) << ',' << Number(e.relative_cost) << ','
        << Number(e.dollar_cost) << ',' << Number(e.mix_fraction) << '\n';
  }
  out << "total," << Number(r.totals.resource_hours) << ',' << Number(r.totals.relative_cost) << ','
      << Number(r.totals.dollar_cost) << ',' << Number(r.totals.mix_fraction) << '\n';
  return out.str();
}

}  // namespace

double BaselineOnDemand(const JobTrace& trace, const ProviderProfile& profile, const PricingCatalog& catalog,
                        OfflineMode mode) {
  double total = 0;
  for (const OfflineLayer& layer : BuildLayers(trace, profile, catalog, mode, OptionSet{Option::kOnDemand})) {
    double sum = 0;
    for (const LayerJob& j : layer.jobs) sum += j.amount * static_cast<double>(j.end - j.begin) / 3600.0;
    total += sum * layer.weight;
  }
  return total * catalog.on_demand;
}

double BaselineReservedPeak(const DemandSeries& demand, const PricingCatalog& catalog, double weight) {
  if (demand.empty()) throw DataError("baseline_reserved_peak: empty demand series");
  const double peak = demand.Peak();
  if (!(peak > 0)) throw DataError("baseline_reserved_peak: demand is zero everywhere");
  return peak * static_cast<double>(demand.size()) * demand.slot_hours * catalog.reserved_1y * weight;
}

Baselines ComputeBaselines(const JobTrace& trace, const ProviderProfile& profile, const PricingCatalog& catalog,
                           OfflineMode mode, double slot_hours) {
  Baselines b;
  b.trace_fingerprint = trace.Fingerprint();
  if (trace.empty()) return b;
  b.on_demand = BaselineOnDemand(trace, profile, catalog, mode);
  const int64_t slot_seconds = SlotSeconds(slot_hours);
  const auto [start, count] = SeriesLayout(trace.horizon_start, trace.horizon_end, slot_seconds);
  for (const OfflineLayer& layer : BuildLayers(trace, profile, catalog, mode, OptionSet{Option::kOnDemand})) {
    std::vector<DemandInterval> intervals;
    intervals.reserve(layer.jobs.size());
    for (const LayerJob& j : layer.jobs) intervals.push_back(DemandInterval{j.begin, j.end, j.amount});
    DemandSeries series;
    series.slot_hours = slot_hours;
    series.start = start;
    series.values = AccumulateDemand(intervals, start, slot_seconds, count);
    b.reserved_peak += BaselineReservedPeak(series, catalog, layer.weight);
  }
  return b;
}

MixReport BuildMixReport(const AllocationPlan& plan, const Baselines& baselines, const PricingCatalog& catalog) {
  if (plan.trace_fingerprint != baselines.trace_fingerprint) {
    throw DataError("build_mix_report: plan and baselines come from different traces");
  }
  MixReport r;
  r.source = "offline";
  r.provider = plan.provider;
  r.mode = std::string(ModeName(plan.mode));
  r.trace_fingerprint = plan.trace_fingerprint;
  for (Option o : kAllOptions) {
    const OptionTotals& t = plan.totals[static_cast<size_t>(o)];
    if (plan.options.Contains(o) || t.resource_hours != 0 || t.relative_cost != 0) {
      r.entries.push_back(MixEntry{o, t.resource_hours, t.relative_cost, 0, 0});
    }
  }
  r.warnings = plan.warnings;
  Finish(r, baselines, catalog);
  return r;
}

MixReport BuildMixReport(const SimResult& result, OptionSet options, OfflineMode mode, const Baselines& baselines,
                         const PricingCatalog& catalog) {
  if (result.trace_fingerprint != baselines.trace_fingerprint) {
    throw DataError("build_mix_report: simulation and baselines come from different traces");
  }
  MixReport r;
  r.source = "simulate";
  r.provider = result.provider;
  r.mode = std::string(ModeName(mode));
  r.trace_fingerprint = result.trace_fingerprint;
  r.seed = result.seed;
  for (Option o : kAllOptions) {
    const OptionTotals& t = result.totals[static_cast<size_t>(o)];
    if (options.Contains(o) || t.resource_hours != 0 || t.relative_cost != 0) {
      r.entries.push_back(MixEntry{o, t.resource_hours, t.relative_cost, 0, 0});
    }
  }
  r.warnings = result.warnings;
  Finish(r, baselines, catalog);
  return r;
}

ReportFormat ParseReportFormat(std::string_view text) {
  if (text == "json") return ReportFormat::kJson;
  if (text == "csv") return ReportFormat::kCsv;
  throw DataError("unknown format '" + std::string(text) + "' (expected json or csv)");
}

std::string EmitReport(const MixReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) return Csv(report);
  return ToJson(report).dump(2) + "\n";
}

std::string EmitReports(const std::vector<MixReport>& reports, ReportFormat format) {
  if (reports.size() == 1) return EmitReport(reports.front(), format);
  if (format == ReportFormat::kCsv) {
    std::string out;
    for (const MixReport& r : reports) out += "# provider=" + r.provider + "\n" + Csv(r);
    return out;
  }
  ordered_json j;
  j["reports"] = ordered_json::array();
  for (const MixReport& r : reports) j["reports"].push_back(ToJson(r));
  return j.dump(2) + "\n";
}

std::vector<MixReport> ParseReports(std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report: invalid JSON: ") + e.what());
  }
  std::vector<MixReport> out;
  if (j.is_object() && j.contains("reports")) {
    for (const auto& item : j.at("reports")) out.push_back(FromJson(item));
  } else if (j.is_object()) {
    out.push_back(FromJson(j));
  } else {
    throw DataError("report: expected a JSON object");
  }
  return out;
}

std::string EmitSeries(const AllocationPlan& plan) {
  std::ostringstream out;
  out << "slot,start_time,demand";
  for (Option o : kAllOptions) out << ',' << OptionName(o);
  out << '\n';
  const int64_t slot_seconds = SlotSeconds(plan.slot_hours);
  for (size_t s = 0; s < plan.slot_mix.size(); ++s) {
    double demand = 0;
    for (double v : plan.slot_mix[s]) demand += v;
    out << s << ',' << plan.series_start + static_cast<int64_t>(s) * slot_seconds << ',' << Number(demand);
    for (double v : plan.slot_mix[s]) out << ',' << Number(v);
    out << '\n';
  }
  return out.str();
}

}  // namespace vmmix
