#include "vmmix/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmmix/catalog.hpp"
#include "vmmix/error.hpp"
#include "vmmix/offline.hpp"
#include "vmmix/online.hpp"
#include "vmmix/report.hpp"
#include "vmmix/trace.hpp"

namespace vmmix::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string trace_path;
  std::string config_path;
  std::vector<std::string> providers;
  std::vector<std::string> disabled;
  std::string mode;
  uint64_t seed = 1;
  double slot_hours = 1.0;
  int window_step_slots = 168;
  int monthly_cap = kDefaultMonthlyCap;
  int threads = 0;
  std::string out_path;
  std::string format = "json";
  std::string series_out;
  double years = 3.0;
  std::string in_path;
};

struct Inputs {
  PricingCatalog catalog = DefaultCatalog();
  SimConfig sim;
  std::optional<int> monthly_cap;
};

std::string ReadFile(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot read ") + what + " '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Inputs LoadInputs(const std::string& path) {
  Inputs inputs;
  if (path.empty()) return inputs;
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(ReadFile(path, "config"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!document.is_object()) throw DataError("config '" + path + "' must be a JSON object");
  inputs.sim = LoadSimConfig(document);
  nlohmann::json catalog_doc = nlohmann::json::object();
  for (const auto& [key, value] : document.items()) {
    if (std::find(kSimConfigKeys.begin(), kSimConfigKeys.end(), key) != kSimConfigKeys.end()) continue;
    if (key == "monthly_cap") {
      if (!value.is_number_integer() || value.get<int64_t>() < 1) {
        throw DataError("config key 'monthly_cap' must be a positive integer");
      }
      inputs.monthly_cap = value.get<int>();
      continue;
    }
    catalog_doc[key] = value;
  }
  try {
    inputs.catalog = LoadCatalog(catalog_doc);
  } catch (const InvariantError& e) {
    throw DataError(e.what());
  }
  return inputs;
}

JobTrace LoadTrace(const std::string& path) {
  std::istringstream in(ReadFile(path, "trace"));
  return ParseTrace(in);
}

void WriteOutput(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream file(temp, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot write '" + path + "'");
    file << text;
    file.close();
    if (!file) throw DataError("cannot write '" + path + "'");
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw DataError("cannot write '" + path + "'");
  }
}

std::vector<ProviderProfile> Profiles(const RunConfig& rc) {
  if (rc.providers.empty()) throw UsageError("--provider is required");
  std::vector<ProviderProfile> profiles;
  for (const std::string& id : rc.providers) profiles.push_back(GetProviderProfile(id));
  return profiles;
}

OptionSet RequestedOptions(const RunConfig& rc, const std::vector<ProviderProfile>& profiles) {
  OptionSet set = kEveryOption;
  for (const std::string& name : rc.disabled) {
    const std::optional<Option> option = ParseOption(name);
    if (!option) throw UsageError("unknown option '" + name + "'");
    if (*option == Option::kOnDemand) throw UsageError("on-demand cannot be disabled");
    const bool offered = std::any_of(profiles.begin(), profiles.end(), [&](const ProviderProfile& p) {
      return p.enabled_options.Contains(*option);
    });
    if (!offered) throw UsageError("option '" + name + "' is not offered by the selected provider");
    set.Erase(*option);
  }
  return set;
}

OfflineMode ModeFor(const RunConfig& rc, const ProviderProfile& profile) {
  return rc.mode.empty() ? DefaultMode(profile) : ParseMode(rc.mode);
}

int RunOffline(const RunConfig& rc, std::ostream& out) {
  const Inputs inputs = LoadInputs(rc.config_path);
  const std::vector<ProviderProfile> profiles = Profiles(rc);
  const OptionSet requested = RequestedOptions(rc, profiles);
  const JobTrace trace = LoadTrace(rc.trace_path);
  std::vector<MixReport> reports;
  std::string series;
  for (const ProviderProfile& profile : profiles) {
    OfflineOptions options;
    options.options = requested;
    options.mode = ModeFor(rc, profile);
    options.slot_hours = rc.slot_hours;
    options.window_step_slots = rc.window_step_slots;
    options.monthly_cap = inputs.monthly_cap.value_or(rc.monthly_cap);
    options.threads = rc.threads;
    const AllocationPlan plan = OptimizeOffline(trace, profile, inputs.catalog, options);
    const Baselines baselines = ComputeBaselines(trace, profile, inputs.catalog, options.mode, rc.slot_hours);
    reports.push_back(BuildMixReport(plan, baselines, inputs.catalog));
    if (!rc.series_out.empty()) {
      if (profiles.size() > 1) series += "# provider=" + std::string(profile.Name()) + "\n";
      series += EmitSeries(plan);
    }
  }
  const std::string text = EmitReports(reports, ParseReportFormat(rc.format));
  if (!rc.series_out.empty()) WriteOutput(rc.series_out, series, out);
  WriteOutput(rc.out_path, text, out);
  return kExitOk;
}

int RunSimulate(const RunConfig& rc, std::ostream& out) {
  const Inputs inputs = LoadInputs(rc.config_path);
  const std::vector<ProviderProfile> profiles = Profiles(rc);
  const OptionSet requested = RequestedOptions(rc, profiles);
  const JobTrace trace = LoadTrace(rc.trace_path);
  std::vector<MixReport> reports;
  for (const ProviderProfile& profile : profiles) {
    SimConfig config = inputs.sim;
    config.options = requested;
    const OfflineMode mode = ModeFor(rc, profile);
    const SimResult result = Simulate(trace, profile, inputs.catalog, config, rc.seed);
    const Baselines baselines = ComputeBaselines(trace, profile, inputs.catalog, mode, rc.slot_hours);
    reports.push_back(
        BuildMixReport(result, EffectiveOptions(profile, requested), mode, baselines, inputs.catalog));
  }
  WriteOutput(rc.out_path, EmitReports(reports, ParseReportFormat(rc.format)), out);
  return kExitOk;
}

int RunSynth(const RunConfig& rc, std::ostream& out) {
  if (!(rc.years > 0)) throw UsageError("--years must be positive");
  SynthConfig config = DefaultSynthConfig();
  config.horizon_hours = rc.years * 8760.0;
  const JobTrace trace = SynthTrace(config, rc.seed);
  std::ostringstream text;
  WriteTrace(trace, text);
  WriteOutput(rc.out_path, text.str(), out);
  return kExitOk;
}

int RunBaseline(const RunConfig& rc, std::ostream& out) {
  const Inputs inputs = LoadInputs(rc.config_path);
  const std::vector<ProviderProfile> profiles = Profiles(rc);
  const JobTrace trace = LoadTrace(rc.trace_path);
  const ReportFormat format = ParseReportFormat(rc.format);
  const double dollars = inputs.catalog.base_dollar_rate;
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << "provider,mode,baseline,relative_cost,dollar_cost\n";
  for (const ProviderProfile& profile : profiles) {
    const OfflineMode mode = ModeFor(rc, profile);
    const Baselines b = ComputeBaselines(trace, profile, inputs.catalog, mode, rc.slot_hours);
    const std::string name(profile.Name());
    const std::string mode_name(ModeName(mode));
    items.push_back({{"provider", name},
                     {"mode", mode_name},
                     {"on_demand", {{"relative_cost", b.on_demand}, {"dollar_cost", b.on_demand * dollars}}},
                     {"reserved_peak",
                      {{"relative_cost", b.reserved_peak}, {"dollar_cost", b.reserved_peak * dollars}}}});
    csv << name << ',' << mode_name << ",on-demand," << nlohmann::json(b.on_demand).dump() << ','
        << nlohmann::json(b.on_demand * dollars).dump() << '\n';
    csv << name << ',' << mode_name << ",reserved-peak," << nlohmann::json(b.reserved_peak).dump() << ','
        << nlohmann::json(b.reserved_peak * dollars).dump() << '\n';
  }
  std::string text;
  if (format == ReportFormat::kCsv) {
    text = csv.str();
  } else if (items.size() == 1) {
    text = items.front().dump(2) + "\n";
  } else {
    text = nlohmann::ordered_json{{"baselines", items}}.dump(2) + "\n";
  }
  WriteOutput(rc.out_path, text, out);
  return kExitOk;
}

int RunReport(const RunConfig& rc, std::ostream& out) {
  if (rc.in_path.empty()) throw UsageError("--in is required");
  const std::vector<MixReport> reports = ParseReports(ReadFile(rc.in_path, "report"));
  WriteOutput(rc.out_path, EmitReports(reports, ParseReportFormat(rc.format)), out);
  return kExitOk;
}

void AddCommon(CLI::App* cmd, RunConfig& rc, bool needs_trace) {
  auto* trace = cmd->add_option("--trace", rc.trace_path, "Job trace CSV (job_id,submit_time,runtime_seconds,cores,mem_gb,class)");
  if (needs_trace) trace->required();
  cmd->add_option("--config", rc.config_path, "Flat JSON document with catalog and simulation overrides");
  cmd->add_option("--provider", rc.providers, "aws, azure, gcp-standard or gcp-custom (repeatable)");
  cmd->add_option("--mode", rc.mode, "Billing mode; defaults to fractional for gcp-custom, typed otherwise")
      ->check(CLI::IsMember({"fractional", "typed"}));
  cmd->add_option("--slot-hours", rc.slot_hours, "Demand slot width in hours")->check(CLI::PositiveNumber);
  cmd->add_option("--out", rc.out_path, "Output file, written atomically; stdout when omitted");
  cmd->add_option("--format", rc.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

constexpr const char* kFooter =
    "Flags by subcommand:\n"
    "  offline   --trace --config --provider --no-option --mode --slot-hours --window-step-slots\n"
    "            --threads --series-out --out --format\n"
    "  simulate  --trace --config --provider --no-option --mode --seed --slot-hours --out --format\n"
    "  synth     --years --seed --out\n"
    "  baseline  --trace --config --provider --mode --slot-hours --out --format\n"
    "  report    --in --out --format\n"
    "Exit status: 0 ok, 1 usage error, 2 data error.";

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Cost-optimal mix of cloud VM purchasing options for a batch job trace", "vmmix"};
  app.require_subcommand(1);
  app.footer(kFooter);

  CLI::App* offline = app.add_subcommand("offline", "Optimal offline allocation with future knowledge");
  AddCommon(offline, rc, true);
  offline->add_option("--no-option", rc.disabled, "Disable a purchasing option (repeatable)");
  offline->add_option("--window-step-slots", rc.window_step_slots, "Spacing of reservation start slots")
      ->check(CLI::PositiveNumber);
  offline->add_option("--threads", rc.threads, "Worker threads; 0 uses every core")->check(CLI::NonNegativeNumber);
  offline->add_option("--series-out", rc.series_out, "Also write per-slot demand and option mix as CSV");

  CLI::App* simulate = app.add_subcommand("simulate", "Online policy replayed over the trace");
  AddCommon(simulate, rc, true);
  simulate->add_option("--no-option", rc.disabled, "Disable a purchasing option (repeatable)");
  simulate->add_option("--seed", rc.seed, "Seed for revocation draws");

  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic batch trace as CSV");
  synth->add_option("--years", rc.years, "Horizon length in years")->check(CLI::PositiveNumber);
  synth->add_option("--seed", rc.seed, "Generator seed");
  synth->add_option("--out", rc.out_path, "Output file, written atomically; stdout when omitted");

  CLI::App* baseline = app.add_subcommand("baseline", "All-on-demand and reserved-peak baseline costs");
  AddCommon(baseline, rc, true);

  CLI::App* report = app.add_subcommand("report", "Re-format a saved JSON report");
  report->add_option("--in", rc.in_path, "Report written by offline or simulate")->required();
  report->add_option("--out", rc.out_path, "Output file, written atomically; stdout when omitted");
  report->add_option("--format", rc.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (offline->parsed()) return RunOffline(rc, out);
    if (simulate->parsed()) return RunSimulate(rc, out);
    if (synth->parsed()) return RunSynth(rc, out);
    if (baseline->parsed()) return RunBaseline(rc, out);
    return RunReport(rc, out);
  } catch (const UsageError& e) {
    err << "vmmix: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "vmmix: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace vmmix::cli
