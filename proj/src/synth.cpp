#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "vmmix/calendar.hpp"
#include "vmmix/error.hpp"
#include "vmmix/trace.hpp"

namespace vmmix {

namespace {

template <typename Pairs>
std::discrete_distribution<size_t> WeightsOf(const Pairs& pairs) {
  std::vector<double> weights;
  for (const auto& p : pairs) weights.push_back(p.second);
  return std::discrete_distribution<size_t>(weights.begin(), weights.end());
}

double ArrivalIntensity(const SynthConfig& c, double hours_since_start) {
  const int64_t t = c.start_time + static_cast<int64_t>(hours_since_start * 3600.0);
  const CivilTime civil = ToCivil(t);
  const double hour = civil.hour + std::fmod(hours_since_start, 1.0);
  const double day_of_week = civil.day_of_week + hour / 24.0;
  const double two_pi = 2.0 * std::numbers::pi;
  double intensity = c.jobs_per_hour;
  intensity *= 1.0 + c.diurnal_amplitude * std::cos(two_pi * (hour - c.diurnal_peak_hour) / 24.0);
  intensity *= 1.0 + c.weekly_amplitude * std::cos(two_pi * (day_of_week - c.weekly_peak_day) / 7.0);
  intensity *= 1.0 + c.seasonal_amplitude * std::cos(two_pi * (hours_since_start / 24.0 - c.seasonal_peak_day) / 365.0);
  return intensity;
}

}  // namespace

void SynthConfig::Validate() const {
  if (!(horizon_hours > 0)) throw DataError("synth: horizon_hours must be > 0");
  if (!(jobs_per_hour >= 0)) throw DataError("synth: jobs_per_hour must be >= 0");
  for (double a : {diurnal_amplitude, weekly_amplitude, seasonal_amplitude}) {
    if (a < 0 || a >= 1) throw DataError("synth: modulation amplitudes must lie in [0, 1)");
  }
  if (classes_per_component < 1) throw DataError("synth: classes_per_component must be >= 1");
  if (runtime_mix.empty() || core_weights.empty() || mem_per_core_weights.empty()) {
    throw DataError("synth: runtime, core and memory mixtures must be non-empty");
  }
  double total = 0;
  for (const RuntimeComponent& rc : runtime_mix) {
    if (rc.weight < 0 || !(rc.median_hours > 0) || rc.sigma < 0 || !(rc.min_hours > 0) ||
        rc.max_hours < rc.min_hours) {
      throw DataError("synth: invalid runtime component");
    }
    total += rc.weight;
  }
  if (!(total > 0)) throw DataError("synth: runtime mixture weights sum to zero");
  for (const auto& [cores, w] : core_weights) {
    if (cores < 1 || w < 0) throw DataError("synth: invalid core weight");
  }
  for (const auto& [gb, w] : mem_per_core_weights) {
    if (!(gb > 0) || w < 0) throw DataError("synth: invalid memory weight");
  }
}

SynthConfig DefaultSynthConfig() {
  SynthConfig config;
  config.runtime_mix = {
      {0.9620, 0.18, 1.2, 1.0 / 60.0, 6.0},
      {0.0280, 12.5, 0.4, 6.01, 24.0},
      {0.0089, 45.0, 0.4, 24.01, 96.0},
      {0.0011, 200.0, 0.5, 96.01, 1000.0},
  };
  config.core_weights = {{1, 0.40}, {2, 0.15}, {3, 0.07}, {4, 0.15}, {6, 0.07}, {8, 0.10}, {12, 0.03}, {16, 0.03}};
  config.mem_per_core_weights = {{2.0, 0.2}, {4.0, 0.3}, {6.0, 0.3}, {8.0, 0.2}};
  return config;
}

JobTrace SynthTrace(const SynthConfig& config, uint64_t seed) {
  config.Validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> mix_weights;
  for (const RuntimeComponent& rc : config.runtime_mix) mix_weights.push_back(rc.weight);
  std::discrete_distribution<size_t> pick_component(mix_weights.begin(), mix_weights.end());
  auto pick_cores = WeightsOf(config.core_weights);
  auto pick_mem = WeightsOf(config.mem_per_core_weights);
  std::uniform_int_distribution<int> pick_class(0, config.classes_per_component - 1);

  // Per-class median multipliers give the runtime predictor something to learn.
  std::vector<std::vector<double>> class_scale(config.runtime_mix.size());
  for (auto& scales : class_scale) {
    for (int k = 0; k < config.classes_per_component; ++k) {
      scales.push_back(std::exp(config.class_spread * normal(rng)));
    }
  }

  std::vector<JobRecord> jobs;
  if (config.jobs_per_hour > 0) {
    const double peak_rate = config.jobs_per_hour * (1 + config.diurnal_amplitude) * (1 + config.weekly_amplitude) *
                             (1 + config.seasonal_amplitude);
    std::exponential_distribution<double> gap(peak_rate);
    double t = 0;
    while (true) {
      t += gap(rng);
      if (t >= config.horizon_hours) break;
      if (unit(rng) * peak_rate > ArrivalIntensity(config, t)) continue;

      const size_t component = pick_component(rng);
      const int klass = pick_class(rng);
      const RuntimeComponent& rc = config.runtime_mix[component];
      const double median = rc.median_hours * class_scale[component][klass];
      double hours = median * std::exp(rc.sigma * normal(rng));
      for (int attempt = 0; attempt < 32 && (hours < rc.min_hours || hours > rc.max_hours); ++attempt) {
        hours = median * std::exp(rc.sigma * normal(rng));
      }
      hours = std::clamp(hours, rc.min_hours, rc.max_hours);

      JobRecord job;
      char id[32];
      std::snprintf(id, sizeof(id), "j%08zu", jobs.size());
      job.job_id = id;
      job.submit_time = config.start_time + static_cast<int64_t>(t * 3600.0);
      job.runtime_seconds = std::max<int64_t>(1, std::llround(hours * 3600.0));
      job.cores = config.core_weights[pick_cores(rng)].first;
      job.mem_gb = job.cores * config.mem_per_core_weights[pick_mem(rng)].first;
      job.class_key = "c" + std::to_string(component) + "-" + std::to_string(klass);
      jobs.push_back(std::move(job));
    }
  }
  return JobTrace::FromJobs(std::move(jobs));
}

}  // namespace vmmix
