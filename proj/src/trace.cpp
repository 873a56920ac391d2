#include "vmmix/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "vmmix/error.hpp"
#include "vmmix/hash.hpp"

namespace vmmix {

namespace {

constexpr std::string_view kHeader = "job_id,submit_time,runtime_seconds,cores,mem_gb,class";

int64_t FloorDiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

[[noreturn]] void RowError(size_t line, const std::string& what) {
  throw DataError("trace line " + std::to_string(line) + ": " + what);
}

template <typename T>
T ParseNumber(std::string_view field, size_t line, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    RowError(line, std::string("non-numeric ") + column + " '" + std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t pos = 0;
  while (true) {
    const size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

void ValidateJob(const JobRecord& job, size_t line) {
  if (job.job_id.empty()) RowError(line, "empty job_id");
  if (job.runtime_seconds <= 0) RowError(line, "runtime_seconds must be > 0");
  if (job.cores < 1) RowError(line, "cores must be >= 1");
  if (!(job.mem_gb > 0) || !std::isfinite(job.mem_gb)) RowError(line, "mem_gb must be > 0");
}

std::string FormatDouble(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

}  // namespace

JobTrace JobTrace::FromJobs(std::vector<JobRecord> jobs) {
  std::unordered_set<std::string_view> seen;
  for (size_t i = 0; i < jobs.size(); ++i) {
    ValidateJob(jobs[i], i + 2);
  }
  std::stable_sort(jobs.begin(), jobs.end(), [](const JobRecord& a, const JobRecord& b) {
    return a.submit_time != b.submit_time ? a.submit_time < b.submit_time : a.job_id < b.job_id;
  });
  JobTrace trace;
  trace.jobs = std::move(jobs);
  for (const JobRecord& job : trace.jobs) {
    if (!seen.insert(job.job_id).second) throw DataError("duplicate job_id '" + job.job_id + "'");
  }
  if (!trace.jobs.empty()) {
    trace.horizon_start = trace.jobs.front().submit_time;
    trace.horizon_end = trace.horizon_start;
    for (const JobRecord& job : trace.jobs) trace.horizon_end = std::max(trace.horizon_end, job.EndTime());
  }
  return trace;
}

uint64_t JobTrace::Fingerprint() const {
  std::ostringstream out;
  WriteTrace(*this, out);
  return Fnv1a(out.str());
}

JobTrace ParseTrace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("trace line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kHeader) {
    const auto columns = SplitCsv(line);
    for (std::string_view expected : SplitCsv(kHeader)) {
      if (std::find(columns.begin(), columns.end(), expected) == columns.end()) {
        throw DataError("trace line 1: missing column '" + std::string(expected) + "'");
      }
    }
    throw DataError("trace line 1: header must be '" + std::string(kHeader) + "'");
  }

  std::vector<JobRecord> jobs;
  std::unordered_set<std::string> ids;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = SplitCsv(line);
    if (fields.size() != 6) {
      RowError(line_no, "expected 6 columns, found " + std::to_string(fields.size()));
    }
    JobRecord job;
    job.job_id = std::string(fields[0]);
    job.submit_time = ParseNumber<int64_t>(fields[1], line_no, "submit_time");
    job.runtime_seconds = ParseNumber<int64_t>(fields[2], line_no, "runtime_seconds");
    job.cores = ParseNumber<int>(fields[3], line_no, "cores");
    job.mem_gb = ParseNumber<double>(fields[4], line_no, "mem_gb");
    job.class_key = std::string(fields[5]);
    ValidateJob(job, line_no);
    if (!ids.insert(job.job_id).second) RowError(line_no, "duplicate job_id '" + job.job_id + "'");
    jobs.push_back(std::move(job));
  }
  return JobTrace::FromJobs(std::move(jobs));
}

void WriteTrace(const JobTrace& trace, std::ostream& out) {
  out << kHeader << '\n';
  for (const JobRecord& job : trace.jobs) {
    out << job.job_id << ',' << job.submit_time << ',' << job.runtime_seconds << ',' << job.cores << ','
        << FormatDouble(job.mem_gb) << ',' << job.class_key << '\n';
  }
}

double DemandSeries::Peak() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

double DemandSeries::Average() const {
  if (values.empty()) return 0.0;
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double DemandSeries::TotalResourceHours() const {
  double sum = 0;
  for (double v : values) sum += v;
  return sum * slot_hours;
}

int64_t DemandSeries::SlotSeconds() const { return vmmix::SlotSeconds(slot_hours); }

int64_t SlotSeconds(double slot_hours) {
  const double seconds = slot_hours * 3600.0;
  const auto rounded = static_cast<int64_t>(std::llround(seconds));
  if (!(slot_hours > 0) || rounded < 1 || std::abs(seconds - static_cast<double>(rounded)) > 1e-6) {
    throw DataError("slot_hours must be a positive whole number of seconds");
  }
  return rounded;
}

std::pair<int64_t, size_t> SeriesLayout(int64_t horizon_start, int64_t horizon_end, int64_t slot_seconds) {
  if (horizon_end <= horizon_start) return {horizon_start, 0};
  const int64_t start = FloorDiv(horizon_start, slot_seconds) * slot_seconds;
  const int64_t span = horizon_end - start;
  return {start, static_cast<size_t>((span + slot_seconds - 1) / slot_seconds)};
}

std::vector<double> AccumulateDemand(std::span<const DemandInterval> intervals, int64_t series_start,
                                     int64_t slot_seconds, size_t slot_count) {
  std::vector<double> values(slot_count, 0.0);
  std::vector<double> full(slot_count + 1, 0.0);  // difference array for fully covered slots
  const double slot = static_cast<double>(slot_seconds);
  for (const DemandInterval& iv : intervals) {
    if (iv.end <= iv.begin || iv.amount == 0) continue;
    const int64_t first = FloorDiv(iv.begin - series_start, slot_seconds);
    const int64_t last = FloorDiv(iv.end - 1 - series_start, slot_seconds);
    if (first < 0 || last >= static_cast<int64_t>(slot_count)) {
      throw DataError("demand interval outside the series horizon");
    }
    if (first == last) {
      values[first] += iv.amount * static_cast<double>(iv.end - iv.begin) / slot;
      continue;
    }
    const int64_t first_end = series_start + (first + 1) * slot_seconds;
    const int64_t last_begin = series_start + last * slot_seconds;
    values[first] += iv.amount * static_cast<double>(first_end - iv.begin) / slot;
    values[last] += iv.amount * static_cast<double>(iv.end - last_begin) / slot;
    if (last > first + 1) {
      full[first + 1] += iv.amount;
      full[last] -= iv.amount;
    }
  }
  double running = 0;
  for (size_t i = 0; i < slot_count; ++i) {
    running += full[i];
    values[i] += running;
    if (values[i] < 0 && values[i] > -1e-9) values[i] = 0;
  }
  return values;
}

DemandSeries BuildDemand(const JobTrace& trace, double slot_hours, Resource resource) {
  const int64_t slot_seconds = SlotSeconds(slot_hours);
  DemandSeries series;
  series.resource = resource;
  series.slot_hours = slot_hours;
  const auto [start, count] = SeriesLayout(trace.horizon_start, trace.horizon_end, slot_seconds);
  series.start = start;
  std::vector<DemandInterval> intervals;
  intervals.reserve(trace.jobs.size());
  for (const JobRecord& job : trace.jobs) {
    const double amount = resource == Resource::kCores ? static_cast<double>(job.cores) : job.mem_gb;
    intervals.push_back({job.submit_time, job.EndTime(), amount});
  }
  series.values = AccumulateDemand(intervals, start, slot_seconds, count);
  return series;
}

UtilizationCdf::UtilizationCdf(std::vector<double> sorted_levels, SlotRange window)
    : sorted_(std::move(sorted_levels)), prefix_(sorted_.size() + 1, 0.0), window_(window) {
  for (size_t i = 0; i < sorted_.size(); ++i) prefix_[i + 1] = prefix_[i] + sorted_[i];
}

double UtilizationCdf::Util(int unit) const {
  if (sorted_.empty() || unit < 1) return 0.0;
  const double lower = unit - 1;
  const double upper = unit;
  const auto lo = static_cast<size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), lower) - sorted_.begin());
  const auto hi = static_cast<size_t>(std::lower_bound(sorted_.begin(), sorted_.end(), upper) - sorted_.begin());
  const double full = static_cast<double>(sorted_.size() - hi);
  const double partial = (prefix_[hi] - prefix_[lo]) - lower * static_cast<double>(hi - lo);
  return (full + partial) / static_cast<double>(sorted_.size());
}

std::vector<double> UtilizationCdf::Levels() const {
  std::vector<double> levels;
  const int top = static_cast<int>(std::ceil(Peak()));
  levels.reserve(top);
  for (int u = 1; u <= top; ++u) levels.push_back(Util(u));
  while (!levels.empty() && levels.back() <= 0) levels.pop_back();
  return levels;
}

UtilizationCdf ComputeUtilizationCdf(const DemandSeries& series, SlotRange window) {
  if (window.size() == 0 || window.first >= window.last) throw DataError("utilization window is empty");
  if (window.last > series.size()) throw DataError("utilization window exceeds the series");
  std::vector<double> levels(series.values.begin() + static_cast<std::ptrdiff_t>(window.first),
                             series.values.begin() + static_cast<std::ptrdiff_t>(window.last));
  std::sort(levels.begin(), levels.end());
  return UtilizationCdf(std::move(levels), window);
}

int RuntimeCategory(double runtime_hours) {
  for (size_t i = 0; i < kCategoryBoundsHours.size(); ++i) {
    if (runtime_hours <= kCategoryBoundsHours[i]) return static_cast<int>(i);
  }
  return 3;
}

TraceStats ComputeTraceStats(const JobTrace& trace) {
  TraceStats stats;
  stats.job_count = trace.jobs.size();
  if (trace.jobs.empty()) return stats;
  std::array<double, 4> counts{};
  std::array<double, 4> cpu_hours{};
  for (const JobRecord& job : trace.jobs) {
    const int category = RuntimeCategory(job.RuntimeHours());
    counts[category] += 1;
    cpu_hours[category] += job.cores * job.RuntimeHours();
  }
  for (double h : cpu_hours) stats.total_cpu_hours += h;
  for (size_t i = 0; i < 4; ++i) {
    stats.job_share[i] = counts[i] / static_cast<double>(trace.jobs.size());
    stats.cpu_hour_share[i] = cpu_hours[i] / stats.total_cpu_hours;
  }
  const DemandSeries series = BuildDemand(trace, 1.0, Resource::kCores);
  stats.peak_core_demand = series.Peak();
  stats.average_core_demand = stats.total_cpu_hours / trace.HorizonHours();
  return stats;
}

}  // namespace vmmix
