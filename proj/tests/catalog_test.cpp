#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "vmmix/catalog.hpp"
#include "vmmix/error.hpp"

namespace vmmix {
namespace {

TEST(DefaultCatalog, PublishedRates) {
  const PricingCatalog c = DefaultCatalog();
  EXPECT_EQ(c.reserved_1y, 0.60);
  EXPECT_EQ(c.reserved_3y, 0.40);
  EXPECT_NEAR(c.SpotBlockMaxRate(), 0.70, 1e-12);
  EXPECT_EQ(c.base_dollar_rate, 0.0481);
  EXPECT_EQ(c.scheduled_min_hours_per_year, 1200);
  EXPECT_NO_THROW(c.Validate());
}

TEST(LoadCatalog, EmptyDocumentIsDefault) { EXPECT_EQ(LoadCatalog("{}"), DefaultCatalog()); }

TEST(LoadCatalog, SingleOverride) {
  PricingCatalog expected = DefaultCatalog();
  expected.transient = 0.20;
  EXPECT_EQ(LoadCatalog(R"({"transient": 0.20})"), expected);
}

TEST(LoadCatalog, OrderingViolationNamesInvariant) {
  try {
    LoadCatalog(R"({"reserved_3y": 0.70})");
    FAIL() << "expected an invariant error";
  } catch (const InvariantError& e) {
    EXPECT_NE(std::string(e.what()).find("reserved"), std::string::npos);
  }
}

TEST(LoadCatalog, UnknownKeyNamesKey) {
  try {
    LoadCatalog(R"({"tranzient": 0.2})");
    FAIL() << "expected a data error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("tranzient"), std::string::npos);
  }
}

TEST(LoadCatalog, BadTypesAndSyntax) {
  EXPECT_THROW(LoadCatalog(R"({"transient": "cheap"})"), DataError);
  EXPECT_THROW(LoadCatalog(R"({"spot_block_max_hours": 6.5})"), DataError);
  EXPECT_THROW(LoadCatalog("{not json"), DataError);
  EXPECT_THROW(LoadCatalog("[1, 2]"), DataError);
}

TEST(LoadCatalog, TierInvariants) {
  EXPECT_THROW(LoadCatalog(R"({"sustained_tiers": [[0.5, 1.0], [0.25, 0.8], [1.0, 0.4]]})"), InvariantError);
  EXPECT_THROW(LoadCatalog(R"({"sustained_tiers": [[0.5, 1.0], [0.9, 0.8]]})"), InvariantError);
  EXPECT_THROW(LoadCatalog(R"({"sustained_tiers": [[0.5, 0.8], [1.0, 0.9]]})"), InvariantError);
}

TEST(LoadCatalog, RoundTripsEveryField) {
  PricingCatalog c = DefaultCatalog();
  c.transient = 0.1 / 3.0;
  c.reserved_1y = 0.61234567890123;
  c.sustained_tiers = {{0.3, 1.0}, {0.7, 0.65}, {1.0, 0.5}};
  c.spot_block_max_hours = 4;
  c.spot_block_base = 0.5;
  c.spot_block_step = 0.07;
  c.core_price_share = 0.6;
  EXPECT_EQ(LoadCatalog(EmitCatalog(c)), c);
  EXPECT_EQ(LoadCatalog(EmitCatalog(DefaultCatalog())), DefaultCatalog());
}

TEST(RevocationStats, UniformWorkedExample) {
  const RevocationStats s = GetRevocationStats(UniformMaxLifetime{24}, 18);
  EXPECT_DOUBLE_EQ(s.prob_revoked, 0.75);
  EXPECT_DOUBLE_EQ(s.expected_runtime_given_revoked_hours, 9.0);
}

TEST(RevocationStats, UniformBeyondMaxLifetime) {
  for (double t : {24.0, 30.0, 1000.0}) {
    const RevocationStats s = GetRevocationStats(UniformMaxLifetime{24}, t);
    EXPECT_EQ(s.prob_revoked, 1.0);
    EXPECT_DOUBLE_EQ(s.expected_runtime_given_revoked_hours, 12.0);
  }
}

TEST(RevocationStats, NoneNeverRevokes) {
  const RevocationStats s = GetRevocationStats(NoRevocation{}, 100);
  EXPECT_EQ(s.prob_revoked, 0.0);
  EXPECT_EQ(s.expected_runtime_given_revoked_hours, 0.0);
}

TEST(RevocationStats, NonPositiveRuntimeThrows) {
  EXPECT_THROW(GetRevocationStats(NoRevocation{}, 0), DataError);
  EXPECT_THROW(GetRevocationStats(ExponentialMean{48}, -1), DataError);
}

// Conditional mean of an exponential truncated below T, by direct sampling.
TEST(RevocationStats, ExponentialMatchesMonteCarlo) {
  const RevocationStats s = GetRevocationStats(ExponentialMean{48}, 12);
  EXPECT_NEAR(s.prob_revoked, 1 - std::exp(-0.25), 1e-12);
  EXPECT_NEAR(s.expected_runtime_given_revoked_hours, 5.75, 0.01);

  std::mt19937_64 rng(12345);
  std::exponential_distribution<double> draw(1.0 / 48.0);
  double sum = 0;
  int64_t hits = 0;
  const int64_t n = 2'000'000;
  for (int64_t i = 0; i < n; ++i) {
    const double x = draw(rng);
    if (x < 12) {
      sum += x;
      ++hits;
    }
  }
  const double p = static_cast<double>(hits) / n;
  EXPECT_NEAR(p, s.prob_revoked, 4 * std::sqrt(p * (1 - p) / n));
  EXPECT_NEAR(sum / hits, s.expected_runtime_given_revoked_hours, 0.02);
}

TEST(RevocationStats, MonotoneAndBelowRuntime) {
  for (const RevocationModel& m : {RevocationModel{UniformMaxLifetime{24}}, RevocationModel{ExponentialMean{48}},
                                   RevocationModel{UniformMaxLifetime{3.5}}, RevocationModel{ExponentialMean{0.7}}}) {
    double prev = 0;
    for (double t = 0.01; t < 200; t *= 1.07) {
      const RevocationStats s = GetRevocationStats(m, t);
      EXPECT_GE(s.prob_revoked, prev);
      EXPECT_LE(s.prob_revoked, 1.0);
      if (s.prob_revoked > 0) EXPECT_LT(s.expected_runtime_given_revoked_hours, t);
      prev = s.prob_revoked;
    }
  }
}

TEST(SampleRevocation, DeterministicPerKey) {
  const RevocationModel m = ExponentialMean{48};
  EXPECT_EQ(SampleRevocation(m, 7, "job-1"), SampleRevocation(m, 7, "job-1"));
  EXPECT_NE(SampleRevocation(m, 7, "job-1"), SampleRevocation(m, 8, "job-1"));
  EXPECT_NE(SampleRevocation(m, 7, "job-1"), SampleRevocation(m, 7, "job-2"));
  EXPECT_FALSE(SampleRevocation(NoRevocation{}, 7, "job-1").has_value());
}

TEST(SampleRevocation, UniformMeanAndRange) {
  const RevocationModel m = UniformMaxLifetime{24};
  double sum = 0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const double x = *SampleRevocation(m, 3, "u" + std::to_string(i));
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 24.0);
    sum += x;
  }
  EXPECT_NEAR(sum / n, 12.0, 0.05);
}

TEST(SampleRevocation, ExponentialMean) {
  const RevocationModel m = ExponentialMean{48};
  double sum = 0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += *SampleRevocation(m, 5, "e" + std::to_string(i));
  EXPECT_NEAR(sum / n, 48.0, 0.2);
}

TEST(RevocationModelText, ParseAndName) {
  EXPECT_EQ(ParseRevocationModel("none"), RevocationModel{NoRevocation{}});
  EXPECT_EQ(ParseRevocationModel("uniform:24"), RevocationModel{UniformMaxLifetime{24}});
  EXPECT_EQ(ParseRevocationModel("exponential:48"), RevocationModel{ExponentialMean{48}});
  for (const char* text : {"none", "uniform:24", "exponential:48"}) {
    EXPECT_EQ(ParseRevocationModel(RevocationModelName(ParseRevocationModel(text))), ParseRevocationModel(text));
  }
  EXPECT_THROW(ParseRevocationModel("weibull:3"), DataError);
  EXPECT_THROW(ParseRevocationModel("uniform:-1"), DataError);
  EXPECT_THROW(ParseRevocationModel("uniform"), DataError);
}

TEST(RateForShape, Examples) {
  const PricingCatalog c = DefaultCatalog();
  EXPECT_DOUBLE_EQ(RateForShape(c, 1, 4, false), 1.0);
  EXPECT_DOUBLE_EQ(RateForShape(c, 2, 8, false), 2.0);
  EXPECT_NEAR(RateForShape(c, 2, 13, true), 2.428125, 1e-12);
}

TEST(RateForShape, LinearAndBundleScaling) {
  const PricingCatalog c = DefaultCatalog();
  for (double cores : {0.25, 1.0, 3.0, 17.5, 64.0}) {
    EXPECT_NEAR(RateForShape(c, cores, 4 * cores, false), cores, 1e-12);
    EXPECT_NEAR(RateForShape(c, cores, 10, false) + RateForShape(c, 1, 3, false),
                RateForShape(c, cores + 1, 13, false), 1e-12);
    EXPECT_NEAR(RateForShape(c, cores, 10, true), 1.05 * RateForShape(c, cores, 10, false), 1e-12);
  }
}

TEST(VmMenu, PowersOfTwoWithFourGbPerCore) {
  const std::vector<VmType> menu = DefaultVmMenu();
  ASSERT_EQ(menu.size(), 7u);
  int cores = 1;
  for (const VmType& t : menu) {
    EXPECT_EQ(t.cores, cores);
    EXPECT_EQ(t.mem_gb, 4.0 * cores);
    cores *= 2;
  }
}

TEST(ProviderProfile, OptionSetsAndRevocation) {
  const ProviderProfile aws = GetProviderProfile("aws");
  EXPECT_EQ(aws.enabled_options, (OptionSet{Option::kOnDemand, Option::kReserved1y, Option::kReserved3y,
                                            Option::kTransient, Option::kSpotBlock, Option::kScheduledReserved}));
  EXPECT_EQ(aws.revocation, RevocationModel{ExponentialMean{48}});

  const ProviderProfile azure = GetProviderProfile("azure");
  EXPECT_EQ(azure.enabled_options,
            (OptionSet{Option::kOnDemand, Option::kReserved1y, Option::kReserved3y, Option::kTransient}));
  EXPECT_EQ(azure.revocation, RevocationModel{ExponentialMean{48}});

  for (const char* id : {"gcp-standard", "gcp-custom"}) {
    const ProviderProfile gcp = GetProviderProfile(id);
    EXPECT_EQ(gcp.enabled_options, (OptionSet{Option::kOnDemand, Option::kReserved1y, Option::kReserved3y,
                                              Option::kTransient, Option::kSustainedUse}));
    EXPECT_EQ(gcp.revocation, RevocationModel{UniformMaxLifetime{24}});
    EXPECT_TRUE(gcp.SustainedUse());
    EXPECT_EQ(gcp.Name(), id);
  }
  EXPECT_FALSE(GetProviderProfile("gcp-standard").allows_customized);
  EXPECT_TRUE(GetProviderProfile("gcp-custom").allows_customized);
  EXPECT_EQ(GetProviderProfile("gcp-custom").customized_max_gb_per_core, 6.5);
  EXPECT_THROW(GetProviderProfile("oracle-cloud"), DataError);
}

TEST(Options, NamesRoundTrip) {
  for (Option o : kAllOptions) EXPECT_EQ(ParseOption(OptionName(o)), o);
  EXPECT_FALSE(ParseOption("reserved").has_value());
  OptionSet s = kEveryOption;
  s.Erase(Option::kTransient);
  EXPECT_FALSE(s.Contains(Option::kTransient));
  EXPECT_TRUE(s.IsSubsetOf(kEveryOption));
  EXPECT_FALSE(kEveryOption.IsSubsetOf(s));
}

}  // namespace
}  // namespace vmmix
