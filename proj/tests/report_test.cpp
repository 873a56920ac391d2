#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "vmmix/error.hpp"
#include "vmmix/report.hpp"

namespace vmmix {
namespace {

const PricingCatalog kCat = DefaultCatalog();
constexpr int64_t k2018 = 1514764800;
constexpr int64_t kHour = 3600;

JobRecord Job(std::string id, int64_t submit, int64_t runtime, int cores = 1, double mem = 4.0) {
  return JobRecord{std::move(id), submit, runtime, cores, mem, ""};
}

OfflineOptions Opts(OptionSet options, OfflineMode mode = OfflineMode::kTyped) {
  OfflineOptions o;
  o.options = options;
  o.mode = mode;
  return o;
}

TEST(Baselines, OnDemandExamples) {
  const ProviderProfile aws = GetProviderProfile("aws");
  EXPECT_EQ(BaselineOnDemand(JobTrace{}, aws, kCat, OfflineMode::kTyped), 0.0);
  const JobTrace one = JobTrace::FromJobs({Job("a", k2018, 10 * kHour)});
  EXPECT_NEAR(BaselineOnDemand(one, aws, kCat, OfflineMode::kTyped), 10.0, 1e-12);
  EXPECT_NEAR(BaselineOnDemand(one, aws, kCat, OfflineMode::kTyped) * kCat.base_dollar_rate, 0.481, 1e-12);
  // Three cores are billed on the 4-core type, or as 3 cores and 12 GB when divisible.
  const JobTrace three = JobTrace::FromJobs({Job("b", k2018, 10 * kHour, 3, 12)});
  EXPECT_NEAR(BaselineOnDemand(three, aws, kCat, OfflineMode::kTyped), 40.0, 1e-12);
  EXPECT_NEAR(BaselineOnDemand(three, aws, kCat, OfflineMode::kFractional), 30.0, 1e-12);
}

TEST(Baselines, ReservedPeakExamples) {
  DemandSeries s;
  s.values.assign(8760, 5.0);
  EXPECT_NEAR(BaselineReservedPeak(s, kCat), 0.6 * 5 * 8760, 1e-9);
  s.slot_hours = 2.0;
  EXPECT_NEAR(BaselineReservedPeak(s, kCat, 0.5), 0.6 * 5 * 8760 * 2 * 0.5, 1e-9);
  s.values.back() = 9.0;
  EXPECT_NEAR(BaselineReservedPeak(s, kCat, 0.5), 0.6 * 9 * 8760 * 2 * 0.5, 1e-9);

  EXPECT_THROW(BaselineReservedPeak(DemandSeries{}, kCat), DataError);
  DemandSeries zero;
  zero.values.assign(10, 0.0);
  EXPECT_THROW(BaselineReservedPeak(zero, kCat), DataError);
}

TEST(Baselines, ReservedPeakMatchesPerLayerSum) {
  SynthConfig c = DefaultSynthConfig();
  c.horizon_hours = 24 * 60;
  const JobTrace t = SynthTrace(c, 21);
  const ProviderProfile gcp = GetProviderProfile("gcp-standard");
  const Baselines b = ComputeBaselines(t, gcp, kCat, OfflineMode::kFractional, 1.0);
  // Peak of each layer's hourly demand, brute force over hours.
  const int64_t start = t.horizon_start - t.horizon_start % kHour;
  const size_t hours = static_cast<size_t>((t.horizon_end - start + kHour - 1) / kHour);
  std::vector<double> cores(hours, 0), mem(hours, 0);
  for (const JobRecord& j : t.jobs) {
    for (size_t h = 0; h < hours; ++h) {
      const int64_t lo = start + static_cast<int64_t>(h) * kHour;
      const int64_t overlap = std::min(j.EndTime(), lo + kHour) - std::max(j.submit_time, lo);
      if (overlap <= 0) continue;
      cores[h] += j.cores * static_cast<double>(overlap) / kHour;
      mem[h] += j.mem_gb * static_cast<double>(overlap) / kHour;
    }
  }
  const double expect = 0.6 * static_cast<double>(hours) *
                        (*std::max_element(cores.begin(), cores.end()) * 0.75 +
                         *std::max_element(mem.begin(), mem.end()) * 0.0625);
  EXPECT_NEAR(b.reserved_peak, expect, 1e-9 * expect);
  EXPECT_EQ(b.trace_fingerprint, t.Fingerprint());
  EXPECT_NEAR(b.on_demand, BaselineOnDemand(t, gcp, kCat, OfflineMode::kFractional), 1e-9 * b.on_demand);

  const Baselines empty = ComputeBaselines(JobTrace{}, gcp, kCat, OfflineMode::kFractional, 1.0);
  EXPECT_EQ(empty.on_demand, 0.0);
  EXPECT_EQ(empty.reserved_peak, 0.0);
}

struct Fixture {
  JobTrace trace;
  ProviderProfile profile;
  Baselines baselines;
  AllocationPlan plan;
};

Fixture Offline(const char* provider, OptionSet options, uint64_t seed = 2) {
  SynthConfig c = DefaultSynthConfig();
  c.horizon_hours = 24 * 90;
  Fixture f{SynthTrace(c, seed), GetProviderProfile(provider), {}, {}};
  const OfflineMode mode = DefaultMode(f.profile);
  f.baselines = ComputeBaselines(f.trace, f.profile, kCat, mode, 1.0);
  f.plan = OptimizeOffline(f.trace, f.profile, kCat, Opts(options, mode));
  return f;
}

TEST(BuildMixReport, OnDemandOnlyIsHundredPercent) {
  const Fixture f = Offline("aws", {Option::kOnDemand});
  const MixReport r = BuildMixReport(f.plan, f.baselines, kCat);
  EXPECT_NEAR(r.pct_of_on_demand, 100.0, 1e-9);
  EXPECT_LT(r.pct_of_reserved_peak, 100.0);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].option, Option::kOnDemand);
  EXPECT_DOUBLE_EQ(r.entries[0].mix_fraction, 1.0);
}

TEST(BuildMixReport, FractionsAndTotalsAddUp) {
  for (const char* provider : {"aws", "gcp-custom"}) {
    const Fixture f = Offline(provider, kEveryOption);
    const MixReport r = BuildMixReport(f.plan, f.baselines, kCat);
    double fraction = 0, hours = 0, cost = 0, dollars = 0;
    for (const MixEntry& e : r.entries) {
      EXPECT_GE(e.mix_fraction, 0.0);
      EXPECT_NEAR(e.dollar_cost, e.relative_cost * kCat.base_dollar_rate, 1e-9 * (1 + e.dollar_cost));
      fraction += e.mix_fraction;
      hours += e.resource_hours;
      cost += e.relative_cost;
      dollars += e.dollar_cost;
    }
    EXPECT_NEAR(fraction, 1.0, 1e-9);
    EXPECT_NEAR(r.totals.resource_hours, hours, 1e-9 * hours);
    EXPECT_NEAR(r.totals.relative_cost, cost, 1e-9 * cost);
    EXPECT_NEAR(r.totals.dollar_cost, dollars, 1e-9 * dollars);
    EXPECT_NEAR(r.pct_of_on_demand, 100 * cost / f.baselines.on_demand, 1e-9);
    EXPECT_NEAR(r.pct_of_reserved_peak, 100 * cost / f.baselines.reserved_peak, 1e-9);
    EXPECT_EQ(r.source, "offline");
    EXPECT_EQ(r.provider, provider);
    // One entry per option the provider offers.
    size_t offered = 0;
    for (Option o : kAllOptions) offered += f.profile.enabled_options.Contains(o);
    EXPECT_EQ(r.entries.size(), offered);
  }
}

TEST(BuildMixReport, FingerprintMismatchIsRejected) {
  const Fixture f = Offline("aws", kEveryOption);
  Baselines other = f.baselines;
  other.trace_fingerprint ^= 1;
  EXPECT_THROW(BuildMixReport(f.plan, other, kCat), DataError);
}

TEST(BuildMixReport, SimulationSource) {
  const Fixture f = Offline("azure", kEveryOption);
  const SimResult sim = Simulate(f.trace, f.profile, kCat, SimConfig{}, 9);
  const MixReport r = BuildMixReport(sim, f.profile.enabled_options, OfflineMode::kTyped, f.baselines, kCat);
  EXPECT_EQ(r.source, "simulate");
  EXPECT_EQ(r.seed, std::optional<uint64_t>(9));
  EXPECT_NEAR(r.totals.relative_cost, sim.TotalCost(), 1e-9 * sim.TotalCost());
  Baselines other = f.baselines;
  other.trace_fingerprint += 1;
  EXPECT_THROW(BuildMixReport(sim, f.profile.enabled_options, OfflineMode::kTyped, other, kCat), DataError);
}

TEST(EmitReport, JsonRoundTripAndStableBytes) {
  const Fixture f = Offline("aws", kEveryOption);
  MixReport r = BuildMixReport(f.plan, f.baselines, kCat);
  r.warnings.push_back("example warning");
  const std::string a = EmitReport(r, ReportFormat::kJson);
  const std::vector<MixReport> back = ParseReports(a);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], r);
  EXPECT_EQ(EmitReport(back[0], ReportFormat::kJson), a);

  const nlohmann::json doc = nlohmann::json::parse(a);
  EXPECT_EQ(doc["provider"], "aws");
  EXPECT_EQ(doc["trace_fingerprint"].get<std::string>().size(), 16u);
  EXPECT_TRUE(doc["options"].contains("transient"));
  EXPECT_TRUE(doc.contains("mix_fractions"));
  EXPECT_TRUE(doc["display"].contains("total_dollar_cost"));

  // Two independent builds print identical bytes.
  const Fixture g = Offline("aws", kEveryOption);
  EXPECT_EQ(EmitReport(BuildMixReport(f.plan, f.baselines, kCat), ReportFormat::kJson),
            EmitReport(BuildMixReport(g.plan, g.baselines, kCat), ReportFormat::kJson));
}

TEST(EmitReport, MultipleReports) {
  const Fixture a = Offline("aws", kEveryOption);
  const Fixture b = Offline("gcp-standard", kEveryOption);
  const std::vector<MixReport> both = {BuildMixReport(a.plan, a.baselines, kCat),
                                       BuildMixReport(b.plan, b.baselines, kCat)};
  const std::string json = EmitReports(both, ReportFormat::kJson);
  EXPECT_EQ(ParseReports(json), both);
  const std::string csv = EmitReports(both, ReportFormat::kCsv);
  EXPECT_NE(csv.find("# provider=aws"), std::string::npos);
  EXPECT_NE(csv.find("# provider=gcp-standard"), std::string::npos);
  EXPECT_THROW(ParseReports("not json"), DataError);
  EXPECT_THROW(ParseReports(R"({"reports": 3})"), DataError);
}

TEST(EmitReport, CsvRows) {
  const Fixture f = Offline("aws", kEveryOption);
  const MixReport r = BuildMixReport(f.plan, f.baselines, kCat);
  const std::string csv = EmitReport(r, ReportFormat::kCsv);
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  }
  ASSERT_EQ(rows.size(), r.entries.size() + 2);
  EXPECT_EQ(rows[0], "option,resource_hours,relative_cost,dollar_cost,mix_fraction");
  EXPECT_EQ(rows.back().rfind("total,", 0), 0u);
  for (size_t i = 0; i < r.entries.size(); ++i) {
    const std::string name(OptionName(r.entries[i].option));
    EXPECT_EQ(rows[i + 1].rfind(name + ",", 0), 0u);
    // Shortest round-trip numbers read back exactly.
    std::istringstream fields(rows[i + 1].substr(name.size() + 1));
    std::string cost;
    std::getline(fields, cost, ',');
    std::getline(fields, cost, ',');
    EXPECT_EQ(std::stod(cost), r.entries[i].relative_cost);
  }
  EXPECT_EQ(ParseReportFormat("csv"), ReportFormat::kCsv);
  EXPECT_EQ(ParseReportFormat("json"), ReportFormat::kJson);
  EXPECT_THROW(ParseReportFormat("xml"), DataError);
}

TEST(EmitSeries, OneRowPerSlot) {
  const Fixture f = Offline("aws", kEveryOption);
  const std::string csv = EmitSeries(f.plan);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("slot,start_time,demand,", 0), 0u);
  size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, f.plan.slot_mix.size());
}

}  // namespace
}  // namespace vmmix
