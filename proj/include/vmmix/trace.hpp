#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vmmix {

struct JobRecord {
  std::string job_id;
  int64_t submit_time = 0;  // epoch seconds
  int64_t runtime_seconds = 0;
  int cores = 1;
  double mem_gb = 4.0;
  std::string class_key;  // runtime-prediction group; may be empty

  int64_t EndTime() const { return submit_time + runtime_seconds; }
  double RuntimeHours() const { return static_cast<double>(runtime_seconds) / 3600.0; }

  friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

struct JobTrace {
  std::vector<JobRecord> jobs;  // sorted by (submit_time, job_id)
  int64_t horizon_start = 0;
  int64_t horizon_end = 0;

  // Sorts, validates every record and sets the horizon to the span of all jobs.
  static JobTrace FromJobs(std::vector<JobRecord> jobs);

  bool empty() const { return jobs.empty(); }
  double HorizonHours() const { return static_cast<double>(horizon_end - horizon_start) / 3600.0; }

  // Content hash of the canonical CSV form; identifies a trace in reports.
  uint64_t Fingerprint() const;

  friend bool operator==(const JobTrace&, const JobTrace&) = default;
};

// CSV with header `job_id,submit_time,runtime_seconds,cores,mem_gb,class`.
// Errors carry the 1-based line number of the offending row.
JobTrace ParseTrace(std::istream& in);
void WriteTrace(const JobTrace& trace, std::ostream& out);

enum class Resource { kCores, kMemGb };

struct DemandSeries {
  Resource resource = Resource::kCores;
  double slot_hours = 1.0;
  int64_t start = 0;  // epoch seconds of slot 0
  std::vector<double> values;

  size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  double Peak() const;
  double Average() const;
  double TotalResourceHours() const;
  int64_t SlotSeconds() const;
  int64_t SlotStart(size_t slot) const { return start + static_cast<int64_t>(slot) * SlotSeconds(); }
};

// Time interval carrying a constant resource amount.
struct DemandInterval {
  int64_t begin;
  int64_t end;
  double amount;
};

// Seconds per slot; throws DataError unless slot_hours is a positive whole
// number of seconds.
int64_t SlotSeconds(double slot_hours);

// Series start aligned down to a slot boundary and the slot count covering
// [horizon_start, horizon_end).
std::pair<int64_t, size_t> SeriesLayout(int64_t horizon_start, int64_t horizon_end, int64_t slot_seconds);

// Each interval adds amount * (overlap / slot length) to every slot it touches.
std::vector<double> AccumulateDemand(std::span<const DemandInterval> intervals, int64_t series_start,
                                     int64_t slot_seconds, size_t slot_count);

DemandSeries BuildDemand(const JobTrace& trace, double slot_hours, Resource resource);

struct SlotRange {
  size_t first = 0;
  size_t last = 0;  // exclusive
  size_t size() const { return last - first; }
};

// Utilization of each unit of stacked demand over a window: unit u covers the
// demand levels (u-1, u] and its utilization is the window average of
// clamp(D(t) - (u-1), 0, 1).
class UtilizationCdf {
 public:
  UtilizationCdf(std::vector<double> sorted_levels, SlotRange window);

  // Utilization of unit `unit` (1-based).
  double Util(int unit) const;
  // Util(1), Util(2), ... up to the highest unit with non-zero utilization.
  std::vector<double> Levels() const;
  double Peak() const { return sorted_.empty() ? 0.0 : sorted_.back(); }
  const std::vector<double>& SortedDemand() const { return sorted_; }
  SlotRange window() const { return window_; }

 private:
  std::vector<double> sorted_;
  std::vector<double> prefix_;  // prefix_[i] = sum of sorted_[0..i)
  SlotRange window_;
};

UtilizationCdf ComputeUtilizationCdf(const DemandSeries& series, SlotRange window);

// Runtime categories: [0,6h], (6h,24h], (24h,96h], >96h.
inline constexpr std::array<double, 3> kCategoryBoundsHours = {6.0, 24.0, 96.0};

struct TraceStats {
  size_t job_count = 0;
  std::array<double, 4> job_share{};
  std::array<double, 4> cpu_hour_share{};
  double total_cpu_hours = 0;
  double peak_core_demand = 0;     // hourly
  double average_core_demand = 0;  // hourly, over the horizon
};

int RuntimeCategory(double runtime_hours);
TraceStats ComputeTraceStats(const JobTrace& trace);

struct RuntimeComponent {
  double weight;         // share of jobs
  double median_hours;   // lognormal median before per-class scaling
  double sigma;          // lognormal shape
  double min_hours;      // truncation bounds
  double max_hours;
};

struct SynthConfig {
  int64_t start_time = 1514764800;  // 2018-01-01T00:00:00Z
  double horizon_hours = 3 * 8760.0;  // three years, long enough for 3-year terms
  double jobs_per_hour = 5.75;      // mean arrival rate
  double diurnal_amplitude = 0.6;   // relative swing of the daily sinusoid
  double diurnal_peak_hour = 14.0;
  double weekly_amplitude = 0.4;    // relative swing of the weekly sinusoid
  double weekly_peak_day = 2.0;     // 0 = Monday
  double seasonal_amplitude = 0.0;  // relative swing of a yearly sinusoid
  double seasonal_peak_day = 0.0;   // day of the horizon with peak arrivals
  double class_spread = 0.5;        // sd of the per-class log-median offset
  int classes_per_component = 6;
  std::vector<RuntimeComponent> runtime_mix;
  std::vector<std::pair<int, double>> core_weights;             // (cores, weight)
  std::vector<std::pair<double, double>> mem_per_core_weights;  // (GB per core, weight)

  // Throws DataError on non-positive horizon, negative rate, empty or
  // non-normalizable mixtures.
  void Validate() const;
};

// Defaults shaped after a university batch cluster: most jobs are short,
// while a small number of multi-day jobs consume most core-hours.
SynthConfig DefaultSynthConfig();

JobTrace SynthTrace(const SynthConfig& config, uint64_t seed);

}  // namespace vmmix
