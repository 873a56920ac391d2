#include "vmmix/online.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "vmmix/calendar.hpp"
#include "vmmix/error.hpp"
#include "vmmix/schedopt.hpp"

namespace vmmix {

namespace {

constexpr int64_t kSecondsPerDay = 86400;

size_t Idx(Option o) { return static_cast<size_t>(o); }

double Hours(int64_t seconds) { return static_cast<double>(seconds) / 3600.0; }
int64_t Seconds(double hours) { return std::llround(hours * 3600.0); }

// A job finishing (learn) and/or a block of pool capacity coming free.
struct Completion {
  int64_t time;
  size_t job;
  bool learn;
  Option pool;  // reserved term or scheduled-reserved holding capacity, else on-demand
  size_t schedule;
  double cores;
  double mem_gb;
  bool operator>(const Completion& o) const {
    if (time != o.time) return time > o.time;
    if (job != o.job) return job > o.job;
    return learn > o.learn;
  }
};

// A purchased block of scheduled capacity, usable only inside its window.
struct ActiveSchedule {
  int64_t expiry;
  ScheduleCandidate candidate;
  Capacity capacity;
  Capacity in_use;
};

struct Commitment {
  int64_t expiry;
  Option term;
  int units;
};

}  // namespace

RuntimePredictor::RuntimePredictor(double default_hours, int min_class_count)
    : default_hours_(default_hours), min_class_count_(min_class_count) {
  if (!(default_hours > 0)) throw DataError("predictor default must be positive");
}

double RuntimePredictor::Predict(const JobRecord& job) const {
  const auto it = classes_.find(job.class_key);
  if (it != classes_.end() && it->second.count >= min_class_count_) {
    return std::exp(it->second.log_sum / static_cast<double>(it->second.count));
  }
  if (global_.count > 0) return std::exp(global_.log_sum / static_cast<double>(global_.count));
  return default_hours_;
}

void RuntimePredictor::Update(const JobRecord& job, double actual_hours) {
  if (!(actual_hours > 0)) return;
  const double l = std::log(actual_hours);
  Stats& s = classes_[job.class_key];
  ++s.count;
  s.log_sum += l;
  ++global_.count;
  global_.log_sum += l;
}

OptionDecision ChooseOption(const VmShape& shape, double predicted_hours, OptionSet options,
                            const RevocationModel& revocation, const PricingCatalog& catalog,
                            const Capacity& idle_3y, const Capacity& idle_1y) {
  if (!(predicted_hours > 0)) throw DataError("choose_option: predicted runtime must be positive");
  if (options.Contains(Option::kReserved3y) && idle_3y.Fits(shape)) return {Option::kReserved3y, 0, 0.0};
  if (options.Contains(Option::kReserved1y) && idle_1y.Fits(shape)) return {Option::kReserved1y, 0, 0.0};
  OptionSet job_level;
  for (Option o : {Option::kTransient, Option::kSpotBlock}) {
    if (options.Contains(o)) job_level.Insert(o);
  }
  const std::vector<CostQuote> quotes = NonreservedQuotes(predicted_hours, job_level, revocation, catalog);
  const CostQuote& best = CheapestQuote(quotes);
  return {best.option, best.block_hours, best.DemandRate()};
}

PoolTargets SizeReservedPool(const DemandSeries& history, SlotRange window, const PricingCatalog& catalog, double rho,
                             size_t min_history_slots) {
  if (!(rho > 0)) throw DataError("size_reserved_pool: rho must be positive");
  PoolTargets targets;
  if (window.size() == 0 || window.size() < min_history_slots) return targets;
  const UtilizationCdf cdf = ComputeUtilizationCdf(history, window);
  auto largest = [&](double threshold) {
    int u = 0;
    while (u + 1 <= static_cast<int>(std::ceil(cdf.Peak())) && cdf.Util(u + 1) >= threshold) ++u;
    return u;
  };
  targets.reserved_1y = largest(catalog.reserved_1y / rho);
  targets.reserved_3y = largest(catalog.reserved_3y / rho);
  return targets;
}

const std::vector<std::string_view> kSimConfigKeys = {
    "predictor_default_hours", "predictor_min_class_count", "oracle_predictions", "epoch_months",
    "history_min_days",        "history_window_days",       "pool_rho",           "scheduled_online",
    "revocation_model",
};

SimConfig LoadSimConfig(const nlohmann::json& document) {
  SimConfig config;
  if (!document.is_object()) throw DataError("config: expected a JSON object");
  auto get = [&](std::string_view key, auto& field) {
    const auto it = document.find(std::string(key));
    if (it == document.end()) return;
    try {
      field = it->template get<std::remove_reference_t<decltype(field)>>();
    } catch (const nlohmann::json::exception&) {
      throw DataError("config: invalid value for '" + std::string(key) + "'");
    }
  };
  get("predictor_default_hours", config.predictor_default_hours);
  get("predictor_min_class_count", config.predictor_min_class_count);
  get("oracle_predictions", config.oracle_predictions);
  get("epoch_months", config.epoch_months);
  get("history_min_days", config.history_min_days);
  get("history_window_days", config.history_window_days);
  get("pool_rho", config.pool_rho);
  get("scheduled_online", config.scheduled_online);
  std::string revocation;
  get("revocation_model", revocation);
  if (!revocation.empty()) config.revocation = ParseRevocationModel(revocation);

  if (!(config.predictor_default_hours > 0)) throw DataError("config: predictor_default_hours must be > 0");
  if (config.predictor_min_class_count < 1) throw DataError("config: predictor_min_class_count must be >= 1");
  if (config.epoch_months < 1) throw DataError("config: epoch_months must be >= 1");
  if (config.history_min_days < 0 || !(config.history_window_days > 0)) {
    throw DataError("config: history windows must be positive");
  }
  if (!(config.pool_rho > 0)) throw DataError("config: pool_rho must be > 0");
  return config;
}

double SimResult::TotalCost() const {
  double total = 0;
  for (const OptionTotals& t : totals) total += t.relative_cost;
  return total;
}

double SimResult::BilledResourceHours() const {
  double total = 0;
  for (const OptionTotals& t : totals) total += t.resource_hours;
  return total;
}

SimResult Simulate(const JobTrace& trace, const ProviderProfile& profile, const PricingCatalog& catalog,
                   const SimConfig& config, uint64_t seed) {
  catalog.Validate();
  const OptionSet options = EffectiveOptions(profile, config.options);
  const RevocationModel revocation = config.revocation.value_or(profile.revocation);
  const bool sustained = options.Contains(Option::kSustainedUse);
  const bool fractional = DefaultMode(profile) == OfflineMode::kFractional;

  SimResult result;
  result.provider = std::string(profile.Name());
  result.seed = seed;
  result.trace_fingerprint = trace.Fingerprint();
  result.jobs.resize(trace.jobs.size());
  if (trace.empty()) return result;

  const size_t n = trace.jobs.size();
  std::vector<VmShape> shapes(n);
  std::vector<DemandInterval> intervals;
  intervals.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const JobRecord& job = trace.jobs[i];
    shapes[i] = MatchVm(profile, catalog, job.cores, job.mem_gb);
    result.demanded_resource_hours += RateForShape(catalog, job.cores, job.mem_gb, false) * job.RuntimeHours();
    intervals.push_back(DemandInterval{job.submit_time, job.EndTime(), shapes[i].TotalCores()});
  }

  // Hourly core demand of the matched shapes; only slots before an epoch are
  // ever read when sizing the pool there.
  DemandSeries history;
  history.resource = Resource::kCores;
  history.slot_hours = 1.0;
  {
    const auto [start, count] = SeriesLayout(trace.horizon_start, trace.horizon_end, kSecondsPerHour);
    history.start = start;
    history.values = AccumulateDemand(intervals, start, kSecondsPerHour, count);
  }

  // On-demand usage per sustained-use layer and calendar month.
  struct UsageLayer {
    std::string name;
    double weight;
    std::map<int64_t, double> by_month;
  };
  std::vector<UsageLayer> layers;
  if (fractional) {
    layers.push_back({"cores", catalog.core_price_share, {}});
    layers.push_back({"mem_gb", (1.0 - catalog.core_price_share) / 4.0, {}});
  } else {
    layers.push_back({"bundle", 1.0, {}});
  }
  auto add_on_demand = [&](const VmShape& shape, int64_t begin, int64_t end) {
    std::vector<double> amount;
    if (fractional) {
      const double s = shape.customized ? catalog.customized_surcharge : 1.0;
      amount = {shape.TotalCores() * s, shape.TotalMemGb() * s};
    } else {
      amount = {shape.Rate(catalog)};
    }
    while (begin < end) {
      const int64_t m = MonthIndex(begin);
      const int64_t stop = std::min(end, MonthStart(m + 1));
      for (size_t l = 0; l < layers.size(); ++l) layers[l].by_month[m] += amount[l] * Hours(stop - begin);
      begin = stop;
    }
  };

  std::vector<int64_t> epochs;
  for (int64_t m = MonthIndex(trace.horizon_start) + 1;; m += config.epoch_months) {
    const int64_t t = MonthStart(m);
    if (t >= trace.horizon_end) break;
    epochs.push_back(t);
  }

  RuntimePredictor predictor(config.predictor_default_hours, config.predictor_min_class_count);
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> completions;
  std::vector<Commitment> commitments;
  std::vector<ActiveSchedule> schedules;
  Capacity cap_3y, cap_1y, used_3y, used_1y;

  const int64_t year = kHoursPerYear * kSecondsPerHour;
  auto term_fits = [&](int64_t now, int years) { return now + years * year <= trace.horizon_end; };

  auto run_epoch = [&](int64_t now) {
    for (auto it = commitments.begin(); it != commitments.end();) {
      if (it->expiry <= now) {
        Capacity& cap = it->term == Option::kReserved3y ? cap_3y : cap_1y;
        cap.cores -= it->units;
        cap.mem_gb -= 4.0 * it->units;
        it = commitments.erase(it);
      } else {
        ++it;
      }
    }

    const size_t end_slot = static_cast<size_t>((now - history.start) / kSecondsPerHour);
    const size_t window_slots = static_cast<size_t>(config.history_window_days * 24);
    const SlotRange window{end_slot > window_slots ? end_slot - window_slots : 0, std::min(end_slot, history.size())};
    const double elapsed_days = static_cast<double>(now - trace.horizon_start) / kSecondsPerDay;
    if (elapsed_days < config.history_min_days || window.size() == 0) return;
    const PoolTargets targets = SizeReservedPool(history, window, catalog, config.pool_rho,
                                                 static_cast<size_t>(config.history_min_days * 24));
    int active = static_cast<int>(std::lround(cap_3y.cores + cap_1y.cores));
    auto buy = [&](Option term, int years, int target, double rate) {
      if (!options.Contains(term) || !term_fits(now, years) || target <= active) return;
      const int units = target - active;
      commitments.push_back(Commitment{now + years * year, term, units});
      Capacity& cap = term == Option::kReserved3y ? cap_3y : cap_1y;
      cap.cores += units;
      cap.mem_gb += 4.0 * units;
      result.totals[Idx(term)].relative_cost += rate * static_cast<double>(years * kHoursPerYear) * units;
      result.purchases.push_back(PoolPurchase{now, term, units});
      active = target;
    };
    buy(Option::kReserved3y, 3, targets.reserved_3y, catalog.reserved_3y);
    buy(Option::kReserved1y, 1, targets.reserved_1y, catalog.reserved_1y);

    // Scheduled capacity above the pool, from the trailing year's hour-of-day
    // utilization. Bought once per year of simulated time.
    const bool holding = std::any_of(schedules.begin(), schedules.end(), [&](const ActiveSchedule& a) { return a.expiry > now; });
    if (!config.scheduled_online || !options.Contains(Option::kScheduledReserved) || holding) return;
    if (elapsed_days < 365 || !term_fits(now, 1) || window.size() < static_cast<size_t>(kHoursPerYear)) return;
    const SlotRange last_year{window.last - kHoursPerYear, window.last};
    double peak = 0;
    for (size_t s = last_year.first; s < last_year.last; ++s) peak = std::max(peak, history.values[s]);
    const std::vector<ScheduleCandidate> shells = EnumerateDaily(catalog);
    std::map<std::pair<int, int>, int> bought;  // (start, length) -> units
    for (int u = active + 1; u <= static_cast<int>(std::ceil(peak)); ++u) {
      std::array<double, 25> used{}, hours{};
      std::array<double, 24> by_hour{}, count{};
      for (size_t s = last_year.first; s < last_year.last; ++s) {
        const int h = ToCivil(history.SlotStart(s)).hour;
        by_hour[h] += std::clamp(history.values[s] - (u - 1), 0.0, 1.0);
        count[h] += 1;
      }
      for (int h = 0; h < 24; ++h) {
        used[h + 1] = used[h] + by_hour[h];
        hours[h + 1] = hours[h] + count[h];
      }
      auto util = [&](const ScheduleCandidate& c) {
        const double span = hours[c.EndHour()] - hours[c.start_hour];
        return span > 0 ? (used[c.EndHour()] - used[c.start_hour]) / span : 0.0;
      };
      const std::vector<ScheduleCandidate> priced = PriceCandidates(catalog, shells, util, 1.0);
      for (size_t i : SelectDaily(priced)) ++bought[{priced[i].start_hour, priced[i].length_hours}];
    }
    for (const auto& [window_key, units] : bought) {
      ScheduleCandidate c = shells.front();
      c.start_hour = window_key.first;
      c.length_hours = window_key.second;
      double spend = 0;
      for (int64_t t = now; t < now + year; t += kSecondsPerHour) {
        const CivilTime civil = ToCivil(t);
        if (c.Covers(civil)) spend += IsWeekend(civil.day_of_week) ? catalog.scheduled_offpeak : catalog.scheduled_peak;
      }
      result.totals[Idx(Option::kScheduledReserved)].relative_cost += spend * units;
      result.scheduled.push_back(ScheduledPurchase{now, c, units});
      schedules.push_back(ActiveSchedule{now + year, c, Capacity{double(units), 4.0 * units}, Capacity{}});
    }
  };

  auto complete = [&](const Completion& c) {
    if (c.learn) predictor.Update(trace.jobs[c.job], trace.jobs[c.job].RuntimeHours());
    if (c.pool == Option::kReserved3y) {
      used_3y.cores -= c.cores;
      used_3y.mem_gb -= c.mem_gb;
    } else if (c.pool == Option::kReserved1y) {
      used_1y.cores -= c.cores;
      used_1y.mem_gb -= c.mem_gb;
    } else if (c.pool == Option::kScheduledReserved && c.schedule < schedules.size()) {
      schedules[c.schedule].in_use.cores -= c.cores;
      schedules[c.schedule].in_use.mem_gb -= c.mem_gb;
    }
  };

  size_t next_epoch = 0;
  for (size_t i = 0; i < n; ++i) {
    const JobRecord& job = trace.jobs[i];
    const int64_t now = job.submit_time;
    // Completions, then epochs, at or before this arrival.
    while (true) {
      const bool has_c = !completions.empty() && completions.top().time <= now;
      const bool has_e = next_epoch < epochs.size() && epochs[next_epoch] <= now;
      if (!has_c && !has_e) break;
      if (has_c && (!has_e || completions.top().time <= epochs[next_epoch])) {
        complete(completions.top());
        completions.pop();
      } else {
        run_epoch(epochs[next_epoch++]);
      }
    }

    const VmShape& shape = shapes[i];
    const double rate = shape.Rate(catalog);
    const double actual = job.RuntimeHours();
    const double predicted = config.oracle_predictions ? actual : predictor.Predict(job);
    JobOutcome& out = result.jobs[i];
    out.shape = shape;
    out.predicted_hours = predicted;
    out.runtime_hours = actual;

    const Capacity idle_3y{cap_3y.cores - used_3y.cores, cap_3y.mem_gb - used_3y.mem_gb};
    const Capacity idle_1y{cap_1y.cores - used_1y.cores, cap_1y.mem_gb - used_1y.mem_gb};
    OptionDecision decision = ChooseOption(shape, predicted, options, revocation, catalog, idle_3y, idle_1y);

    // Scheduled capacity ranks after reserved and is only handed to jobs
    // predicted to finish inside today's window.
    size_t schedule_index = schedules.size();
    int64_t window_end = 0;
    if (decision.option != Option::kReserved3y && decision.option != Option::kReserved1y) {
      const CivilTime civil = ToCivil(now);
      for (size_t s = 0; s < schedules.size(); ++s) {
        const ActiveSchedule& a = schedules[s];
        if (a.expiry <= now || !a.candidate.Covers(civil)) continue;
        const int64_t end = now - (now % kSecondsPerHour) + (a.candidate.EndHour() - civil.hour) * kSecondsPerHour;
        const Capacity idle{a.capacity.cores - a.in_use.cores, a.capacity.mem_gb - a.in_use.mem_gb};
        if (now + Seconds(predicted) <= end && idle.Fits(shape)) {
          schedule_index = s;
          window_end = end;
          decision = {Option::kScheduledReserved, 0, 0.0};
          break;
        }
      }
    }
    out.option = decision.option;
    out.block_hours = decision.block_hours;

    Completion done{job.EndTime(), i, true, Option::kOnDemand, 0, shape.TotalCores(), shape.TotalMemGb()};
    auto restart = [&](int64_t at) {
      add_on_demand(shape, at, at + job.runtime_seconds);
      out.billed_resource_hours += rate * actual;
      out.cost += rate * actual * catalog.on_demand;
      done.time = at + job.runtime_seconds;
    };
    switch (decision.option) {
      case Option::kReserved3y:
      case Option::kReserved1y: {
        Capacity& used = decision.option == Option::kReserved3y ? used_3y : used_1y;
        used.cores += shape.TotalCores();
        used.mem_gb += shape.TotalMemGb();
        done.pool = decision.option;
        out.billed_resource_hours = rate * actual;
        result.totals[Idx(decision.option)].resource_hours += rate * actual;
        break;
      }
      case Option::kScheduledReserved: {
        ActiveSchedule& a = schedules[schedule_index];
        a.in_use.cores += shape.TotalCores();
        a.in_use.mem_gb += shape.TotalMemGb();
        done.pool = Option::kScheduledReserved;
        done.schedule = schedule_index;
        const int64_t held = std::min(job.runtime_seconds, window_end - now);
        out.billed_resource_hours = rate * Hours(held);
        result.totals[Idx(Option::kScheduledReserved)].resource_hours += rate * Hours(held);
        if (held < job.runtime_seconds) {
          // Terminated at the window end: capacity frees there and the job
          // restarts on on-demand.
          out.revoked_after_hours = Hours(held);
          completions.push(Completion{window_end, i, false, Option::kScheduledReserved, schedule_index,
                                      shape.TotalCores(), shape.TotalMemGb()});
          restart(window_end);
          done.pool = Option::kOnDemand;
        }
        break;
      }
      case Option::kTransient: {
        const std::optional<double> x =
            config.revocation_sampler ? config.revocation_sampler(job) : SampleRevocation(revocation, seed, job.job_id);
        const double held = x && *x < actual ? *x : actual;
        out.billed_resource_hours = rate * held;
        out.cost = rate * held * catalog.transient;
        result.totals[Idx(Option::kTransient)].resource_hours += rate * held;
        result.totals[Idx(Option::kTransient)].relative_cost += out.cost;
        if (x && *x < actual) {
          out.revoked_after_hours = *x;
          restart(now + Seconds(*x));
        }
        break;
      }
      case Option::kSpotBlock: {
        const double held = std::min<double>(actual, decision.block_hours);
        const double block_rate = SpotBlockRate(catalog, decision.block_hours);
        out.billed_resource_hours = rate * held;
        out.cost = rate * held * block_rate;
        result.totals[Idx(Option::kSpotBlock)].resource_hours += rate * held;
        result.totals[Idx(Option::kSpotBlock)].relative_cost += out.cost;
        if (actual > decision.block_hours) {
          out.revoked_after_hours = static_cast<double>(decision.block_hours);
          restart(now + decision.block_hours * kSecondsPerHour);
        }
        break;
      }
      default:
        restart(now);
        break;
    }
    completions.push(done);
  }

  // Settle on-demand usage per calendar month.
  const size_t od = Idx(Option::kOnDemand);
  const size_t su = Idx(Option::kSustainedUse);
  for (const UsageLayer& layer : layers) {
    for (const auto& [month, used] : layer.by_month) {
      if (used <= 0) continue;
      if (!sustained) {
        result.totals[od].resource_hours += used * layer.weight;
        result.totals[od].relative_cost += used * layer.weight * catalog.on_demand;
        continue;
      }
      const double hours = MonthHours(month);
      const SustainedSplit split = SplitSustainedBill(catalog, used / hours, hours);
      result.totals[od].resource_hours += split.full_price_hours * layer.weight;
      result.totals[od].relative_cost += split.full_price_hours * layer.weight * catalog.on_demand;
      result.totals[su].resource_hours += split.discounted_hours * layer.weight;
      result.totals[su].relative_cost += split.discounted_cost * layer.weight;
      result.sustained.push_back(SustainedAdjustment{
          month, layer.name, used, split.discounted_hours,
          (split.discounted_hours * catalog.on_demand - split.discounted_cost) * layer.weight});
    }
  }
  return result;
}

}  // namespace vmmix
