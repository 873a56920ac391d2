#include "vmmix/catalog.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "vmmix/error.hpp"
#include "vmmix/hash.hpp"

namespace vmmix {

namespace {

constexpr std::array<std::string_view, 7> kOptionNames = {
    "on-demand", "sustained-use", "reserved-1y", "reserved-3y", "scheduled-reserved", "transient", "spot-block",
};

void Require(bool condition, const char* invariant) {
  if (!condition) throw InvariantError(std::string("catalog invariant violated: ") + invariant);
}

double NumberField(const nlohmann::json& value, const std::string& key) {
  if (!value.is_number()) throw DataError("catalog key '" + key + "' must be a number");
  return value.get<double>();
}

using FieldSetter = std::function<void(PricingCatalog&, const nlohmann::json&, const std::string&)>;

FieldSetter Real(double PricingCatalog::*field) {
  return [field](PricingCatalog& c, const nlohmann::json& v, const std::string& key) {
    c.*field = NumberField(v, key);
  };
}

const std::map<std::string, FieldSetter>& CatalogFields() {
  static const std::map<std::string, FieldSetter> fields = {
      {"on_demand", Real(&PricingCatalog::on_demand)},
      {"reserved_1y", Real(&PricingCatalog::reserved_1y)},
      {"reserved_3y", Real(&PricingCatalog::reserved_3y)},
      {"transient", Real(&PricingCatalog::transient)},
      {"spot_block_base", Real(&PricingCatalog::spot_block_base)},
      {"spot_block_step", Real(&PricingCatalog::spot_block_step)},
      {"spot_block_max_hours",
       [](PricingCatalog& c, const nlohmann::json& v, const std::string& key) {
         if (!v.is_number_integer()) throw DataError("catalog key '" + key + "' must be an integer");
         c.spot_block_max_hours = v.get<int>();
       }},
      {"scheduled_peak", Real(&PricingCatalog::scheduled_peak)},
      {"scheduled_offpeak", Real(&PricingCatalog::scheduled_offpeak)},
      {"scheduled_min_hours_per_year", Real(&PricingCatalog::scheduled_min_hours_per_year)},
      {"sustained_tiers",
       [](PricingCatalog& c, const nlohmann::json& v, const std::string& key) {
         if (!v.is_array()) throw DataError("catalog key '" + key + "' must be an array of [breakpoint, pay] pairs");
         std::vector<std::pair<double, double>> tiers;
         for (const auto& tier : v) {
           if (!tier.is_array() || tier.size() != 2 || !tier[0].is_number() || !tier[1].is_number()) {
             throw DataError("catalog key '" + key + "' must be an array of [breakpoint, pay] pairs");
           }
           tiers.emplace_back(tier[0].get<double>(), tier[1].get<double>());
         }
         c.sustained_tiers = std::move(tiers);
       }},
      {"customized_surcharge", Real(&PricingCatalog::customized_surcharge)},
      {"base_dollar_rate", Real(&PricingCatalog::base_dollar_rate)},
      {"core_price_share", Real(&PricingCatalog::core_price_share)},
  };
  return fields;
}

}  // namespace

std::string_view OptionName(Option option) { return kOptionNames[static_cast<size_t>(option)]; }

std::optional<Option> ParseOption(std::string_view name) {
  for (Option o : kAllOptions) {
    if (OptionName(o) == name) return o;
  }
  return std::nullopt;
}

std::vector<Option> OptionSet::ToVector() const {
  std::vector<Option> out;
  for (Option o : kAllOptions) {
    if (Contains(o)) out.push_back(o);
  }
  return out;
}

std::string OptionSet::ToString() const {
  std::string out;
  for (Option o : ToVector()) {
    if (!out.empty()) out += ',';
    out += OptionName(o);
  }
  return out;
}

void PricingCatalog::Validate() const {
  Require(on_demand == 1.0, "on_demand must equal 1.0");
  Require(reserved_1y > 0 && reserved_3y > 0 && transient > 0 && spot_block_base > 0 && scheduled_peak > 0 &&
              scheduled_offpeak > 0,
          "relative rates must be positive");
  Require(reserved_3y <= reserved_1y && reserved_1y <= on_demand, "reserved_3y <= reserved_1y <= on_demand");
  Require(transient <= on_demand, "transient <= on_demand");
  Require(spot_block_max_hours >= 1, "spot_block_max_hours >= 1");
  Require(spot_block_step >= 0, "spot_block_step >= 0");
  Require(SpotBlockMaxRate() <= on_demand, "longest spot block rate <= on_demand");
  Require(scheduled_peak <= on_demand && scheduled_offpeak <= on_demand, "scheduled rates <= on_demand");
  Require(scheduled_min_hours_per_year > 0, "scheduled_min_hours_per_year > 0");
  Require(!sustained_tiers.empty(), "sustained_tiers non-empty");
  double prev_break = 0.0;
  double prev_pay = on_demand;
  for (const auto& [breakpoint, pay] : sustained_tiers) {
    Require(breakpoint > prev_break, "sustained tier breakpoints strictly increasing");
    Require(pay > 0 && pay <= prev_pay, "sustained pay fractions positive and non-increasing");
    prev_break = breakpoint;
    prev_pay = pay;
  }
  Require(sustained_tiers.back().first == 1.0, "sustained tier breakpoints end at 1.0");
  Require(customized_surcharge > 0, "customized_surcharge > 0");
  Require(base_dollar_rate > 0, "base_dollar_rate > 0");
  Require(core_price_share > 0 && core_price_share < 1, "0 < core_price_share < 1");
}

PricingCatalog DefaultCatalog() { return PricingCatalog{}; }

PricingCatalog LoadCatalog(const nlohmann::json& document) {
  if (!document.is_object()) throw DataError("catalog config must be a JSON object");
  PricingCatalog catalog = DefaultCatalog();
  const auto& fields = CatalogFields();
  for (const auto& [key, value] : document.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) throw DataError("unknown catalog key '" + key + "'");
    it->second(catalog, value, key);
  }
  catalog.Validate();
  return catalog;
}

PricingCatalog LoadCatalog(std::string_view config_text) {
  const auto first = config_text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return DefaultCatalog();
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("catalog config is not valid JSON: ") + e.what());
  }
  return LoadCatalog(document);
}

std::string EmitCatalog(const PricingCatalog& c) {
  nlohmann::json tiers = nlohmann::json::array();
  for (const auto& [breakpoint, pay] : c.sustained_tiers) tiers.push_back({breakpoint, pay});
  nlohmann::json doc = {
      {"on_demand", c.on_demand},
      {"reserved_1y", c.reserved_1y},
      {"reserved_3y", c.reserved_3y},
      {"transient", c.transient},
      {"spot_block_base", c.spot_block_base},
      {"spot_block_step", c.spot_block_step},
      {"spot_block_max_hours", c.spot_block_max_hours},
      {"scheduled_peak", c.scheduled_peak},
      {"scheduled_offpeak", c.scheduled_offpeak},
      {"scheduled_min_hours_per_year", c.scheduled_min_hours_per_year},
      {"sustained_tiers", tiers},
      {"customized_surcharge", c.customized_surcharge},
      {"base_dollar_rate", c.base_dollar_rate},
      {"core_price_share", c.core_price_share},
  };
  return doc.dump(2);
}

RevocationModel ParseRevocationModel(std::string_view text) {
  if (text == "none") return NoRevocation{};
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw DataError("revocation model must be none, uniform:H or exponential:H");
  const std::string_view kind = text.substr(0, colon);
  const std::string_view number = text.substr(colon + 1);
  double hours = 0;
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), hours);
  if (ec != std::errc() || ptr != number.data() + number.size() || !(hours > 0)) {
    throw DataError("revocation model hours must be a positive number: " + std::string(text));
  }
  if (kind == "uniform") return UniformMaxLifetime{hours};
  if (kind == "exponential") return ExponentialMean{hours};
  throw DataError("unknown revocation model '" + std::string(kind) + "'");
}

std::string RevocationModelName(const RevocationModel& model) {
  std::ostringstream out;
  if (const auto* u = std::get_if<UniformMaxLifetime>(&model)) {
    out << "uniform:" << u->max_hours;
  } else if (const auto* e = std::get_if<ExponentialMean>(&model)) {
    out << "exponential:" << e->mean_hours;
  } else {
    out << "none";
  }
  return out.str();
}

RevocationStats GetRevocationStats(const RevocationModel& model, double runtime_hours) {
  if (!(runtime_hours > 0)) throw DataError("revocation_stats: runtime must be positive");
  if (const auto* u = std::get_if<UniformMaxLifetime>(&model)) {
    const double prob = std::min(runtime_hours / u->max_hours, 1.0);
    return {prob, std::min(runtime_hours, u->max_hours) / 2.0};
  }
  if (const auto* e = std::get_if<ExponentialMean>(&model)) {
    const double x = runtime_hours / e->mean_hours;
    const double prob = -std::expm1(-x);
    // E[X | X < T] = T * (1/x - 1/(e^x - 1)); the series avoids cancellation near 0.
    const double scaled = x < 1e-4 ? 0.5 - x / 12.0 : 1.0 / x - 1.0 / std::expm1(x);
    return {prob, runtime_hours * scaled};
  }
  return {0.0, 0.0};
}

std::optional<double> SampleRevocation(const RevocationModel& model, uint64_t seed, std::string_view job_id) {
  if (std::holds_alternative<NoRevocation>(model)) return std::nullopt;
  const uint64_t bits = SplitMix64(SplitMix64(seed) ^ Fnv1a(job_id));
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
  if (const auto* uni = std::get_if<UniformMaxLifetime>(&model)) return u * uni->max_hours;
  const auto& exp = std::get<ExponentialMean>(model);
  return -exp.mean_hours * std::log1p(-u);
}

double RateForShape(const PricingCatalog& catalog, double cores, double mem_gb, bool customized) {
  const double base = cores * catalog.core_price_share + mem_gb * (1.0 - catalog.core_price_share) / 4.0;
  return customized ? base * catalog.customized_surcharge : base;
}

std::vector<VmType> DefaultVmMenu() {
  std::vector<VmType> menu;
  for (int cores = 1; cores <= 64; cores *= 2) menu.push_back({cores, 4.0 * cores});
  return menu;
}

std::string_view ProviderName(ProviderId id) {
  switch (id) {
    case ProviderId::kAws:
      return "aws";
    case ProviderId::kAzure:
      return "azure";
    case ProviderId::kGcpStandard:
      return "gcp-standard";
    case ProviderId::kGcpCustom:
      return "gcp-custom";
  }
  return "unknown";
}

ProviderProfile GetProviderProfile(ProviderId id) {
  ProviderProfile profile{id, {}, NoRevocation{}, DefaultVmMenu()};
  const OptionSet common = {Option::kOnDemand, Option::kReserved1y, Option::kReserved3y, Option::kTransient};
  switch (id) {
    case ProviderId::kAws:
      profile.enabled_options = common;
      profile.enabled_options.Insert(Option::kSpotBlock);
      profile.enabled_options.Insert(Option::kScheduledReserved);
      profile.revocation = ExponentialMean{48.0};
      break;
    case ProviderId::kAzure:
      profile.enabled_options = common;
      profile.revocation = ExponentialMean{48.0};
      break;
    case ProviderId::kGcpStandard:
    case ProviderId::kGcpCustom:
      profile.enabled_options = common;
      profile.enabled_options.Insert(Option::kSustainedUse);
      profile.revocation = UniformMaxLifetime{24.0};
      profile.allows_customized = id == ProviderId::kGcpCustom;
      break;
  }
  return profile;
}

ProviderProfile GetProviderProfile(std::string_view id) {
  for (ProviderId p : {ProviderId::kAws, ProviderId::kAzure, ProviderId::kGcpStandard, ProviderId::kGcpCustom}) {
    if (ProviderName(p) == id) return GetProviderProfile(p);
  }
  throw DataError("unknown provider '" + std::string(id) + "'");
}

}  // namespace vmmix
