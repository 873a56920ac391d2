#include "vmmix/offline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "vmmix/calendar.hpp"
#include "vmmix/costmodel.hpp"
#include "vmmix/error.hpp"
#include "vmmix/vm_match.hpp"

namespace vmmix {

namespace {

constexpr size_t kOptionCount = kAllOptions.size();
constexpr int kUnitBlock = 8;
constexpr double kNoCap = std::numeric_limits<double>::infinity();

size_t Idx(Option o) { return static_cast<size_t>(o); }

using OptionArray = std::array<double, kOptionCount>;

struct Seg {
  double mass;
  double rate;
  Option option;
};

// Per-slot cost stacks of one layer in CSR form, sorted cheapest first.
class StackTable {
 public:
  StackTable(const OfflineLayer& layer, int64_t start, int64_t slot_seconds, size_t slots)
      : offset_(slots + 1, 0), demand_(slots, 0.0) {
    auto span_of = [&](const LayerJob& j) {
      const size_t first = static_cast<size_t>((j.begin - start) / slot_seconds);
      const size_t last = static_cast<size_t>((j.end - 1 - start) / slot_seconds);
      return std::pair{first, std::min(last, slots - 1)};
    };
    for (const LayerJob& j : layer.jobs) {
      const auto [first, last] = span_of(j);
      for (size_t s = first; s <= last; ++s) ++offset_[s + 1];
    }
    for (size_t s = 0; s < slots; ++s) offset_[s + 1] += offset_[s];
    segs_.resize(offset_[slots]);
    std::vector<size_t> fill(offset_.begin(), offset_.end() - 1);
    const double slot_len = static_cast<double>(slot_seconds);
    for (const LayerJob& j : layer.jobs) {
      const auto [first, last] = span_of(j);
      for (size_t s = first; s <= last; ++s) {
        const int64_t lo = std::max(j.begin, start + static_cast<int64_t>(s) * slot_seconds);
        const int64_t hi = std::min(j.end, start + static_cast<int64_t>(s + 1) * slot_seconds);
        segs_[fill[s]++] = Seg{j.amount * static_cast<double>(hi - lo) / slot_len, j.rate, j.option};
      }
    }
    for (size_t s = 0; s < slots; ++s) {
      std::stable_sort(segs_.begin() + offset_[s], segs_.begin() + offset_[s + 1], [](const Seg& a, const Seg& b) {
        return a.rate != b.rate ? a.rate < b.rate : TieRank(a.option) < TieRank(b.option);
      });
      double d = 0;
      for (size_t k = offset_[s]; k < offset_[s + 1]; ++k) d += segs_[k].mass;
      demand_[s] = d;
      peak_ = std::max(peak_, d);
    }
  }

  size_t slots() const { return demand_.size(); }
  double demand(size_t s) const { return demand_[s]; }
  const std::vector<double>& demand() const { return demand_; }
  double peak() const { return peak_; }
  size_t begin(size_t s) const { return offset_[s]; }
  size_t end(size_t s) const { return offset_[s + 1]; }
  const Seg& seg(size_t k) const { return segs_[k]; }

 private:
  std::vector<size_t> offset_;
  std::vector<Seg> segs_;
  std::vector<double> demand_;
  double peak_ = 0;
};

struct Cursor {
  size_t k;
  double base;  // level at which segment k starts
};

struct Piece {
  double mass;
  double rate;
  Option option;
};

// Result of one block of units, or of a whole layer after reduction.
struct LayerRun {
  OptionArray mass{};  // slot units
  OptionArray cost{};  // slot units, on-demand excluded (billed ex post)
  std::vector<double> od_mass;
  std::vector<OptionArray> slot_mass;
  std::vector<ReservationCommitment> reservations;
  std::vector<ScheduledCommitment> schedules;

  explicit LayerRun(size_t slots) : od_mass(slots, 0.0), slot_mass(slots, OptionArray{}) {}

  void Absorb(const LayerRun& other) {
    for (size_t o = 0; o < kOptionCount; ++o) {
      mass[o] += other.mass[o];
      cost[o] += other.cost[o];
    }
    for (size_t s = 0; s < od_mass.size(); ++s) {
      od_mass[s] += other.od_mass[s];
      for (size_t o = 0; o < kOptionCount; ++o) slot_mass[s][o] += other.slot_mass[s][o];
    }
    reservations.insert(reservations.end(), other.reservations.begin(), other.reservations.end());
    schedules.insert(schedules.end(), other.schedules.begin(), other.schedules.end());
  }
};

// Calendar context for scheduled reservations, hourly slots only.
struct ScheduleContext {
  bool enabled = false;
  bool reserved_1y = false;
  std::vector<CivilTime> civil;
  int years = 0;
  std::vector<ScheduleCandidate> shells;
  // Per year: slot counts by (weekday, hour) and (day of month 1..28, hour).
  std::vector<std::array<std::array<double, 24>, 7>> week_count;
  std::vector<std::array<std::array<double, 24>, kMonthlyScheduleDays>> month_count;
};

class LayerSolver {
 public:
  LayerSolver(const StackTable& table, int layer_index, const PricingCatalog& catalog,
              const std::vector<ReservationTerm>& terms, size_t window_step, const ScheduleContext& sched)
      : table_(table),
        layer_(layer_index),
        catalog_(catalog),
        terms_(terms),
        step_(window_step),
        sched_(sched) {}

  LayerRun Run(const std::vector<double>& cap, int threads) const {
    const size_t slots = table_.slots();
    const int units = static_cast<int>(std::ceil(table_.peak() - 1e-12));
    const int blocks = (units + kUnitBlock - 1) / kUnitBlock;
    std::vector<LayerRun> results(blocks, LayerRun(0));
    std::atomic<int> next{0};
    auto worker = [&] {
      Work work(slots);
      for (int b = next++; b < blocks; b = next++) {
        results[b] = SolveBlock(b * kUnitBlock + 1, std::min(units, (b + 1) * kUnitBlock), cap, work);
      }
    };
    const int n = std::max(1, std::min(threads, blocks));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    LayerRun total(slots);
    for (const LayerRun& r : results) total.Absorb(r);
    return total;
  }

 private:
  struct Work {
    std::vector<Cursor> cursor;
    std::vector<double> cell_cost, cell_mass, overlay_cost;
    std::vector<size_t> piece_begin;
    std::vector<Piece> pieces;
    std::vector<uint8_t> replaced, reserved;
    std::vector<ReservationChoice> plain_choice, overlay_choice;
    explicit Work(size_t slots)
        : cursor(slots),
          cell_cost(slots),
          cell_mass(slots),
          overlay_cost(slots),
          piece_begin(slots + 1),
          replaced(slots),
          reserved(slots) {}
  };

  LayerRun SolveBlock(int first_unit, int last_unit, const std::vector<double>& cap, Work& w) const {
    const size_t slots = table_.slots();
    LayerRun out(slots);
    for (size_t s = 0; s < slots; ++s) w.cursor[s] = Cursor{table_.begin(s), 0.0};
    for (int u = first_unit; u <= last_unit; ++u) {
      FillCells(u, cap, w);
      SolveUnit(u, w, out);
    }
    return out;
  }

  void FillCells(int u, const std::vector<double>& cap, Work& w) const {
    const double lo = u - 1;
    w.pieces.clear();
    for (size_t s = 0; s < table_.slots(); ++s) {
      w.piece_begin[s] = w.pieces.size();
      const double hi = std::min<double>(u, table_.demand(s));
      Cursor& c = w.cursor[s];
      double cost = 0, mass = 0;
      if (hi > lo) {
        const size_t end = table_.end(s);
        while (c.k < end && c.base + table_.seg(c.k).mass <= lo) {
          c.base += table_.seg(c.k).mass;
          ++c.k;
        }
        const double limit = cap.empty() ? kNoCap : cap[s];
        double base = c.base;
        for (size_t k = c.k; k < end && base < hi; ++k) {
          const Seg& g = table_.seg(k);
          const double piece = std::min(base + g.mass, hi) - std::max(base, lo);
          base += g.mass;
          if (piece <= 0) continue;
          Piece p{piece, g.rate, g.option};
          if (limit < p.rate) {
            p.rate = limit;
            p.option = Option::kOnDemand;
          }
          w.pieces.push_back(p);
          cost += p.mass * p.rate;
          mass += p.mass;
        }
      }
      w.cell_cost[s] = cost;
      w.cell_mass[s] = mass;
    }
    w.piece_begin[table_.slots()] = w.pieces.size();
  }

  void SolveUnit(int u, Work& w, LayerRun& out) const {
    double best = CommitReservations(w.cell_cost, terms_, step_, &w.plain_choice);
    std::vector<ScheduledCommitment> picked;
    double sched_cost = 0;
    bool use_overlay = false;
    if (sched_.enabled && Overlay(u, w, &picked, &sched_cost)) {
      const double with = CommitReservations(w.overlay_cost, terms_, step_, &w.overlay_choice) + sched_cost;
      if (with < best) {
        best = with;
        use_overlay = true;
      }
    }
    const std::vector<ReservationChoice>& choice = use_overlay ? w.overlay_choice : w.plain_choice;
    const size_t slots = table_.slots();

    // Term index + 1 of the commitment covering each slot, 0 if none.
    std::vector<uint8_t>& reserved = w.reserved;
    std::fill(reserved.begin(), reserved.end(), 0);
    for (const ReservationChoice& rc : choice) {
      const ReservationTerm& t = terms_[rc.term];
      for (size_t s = rc.start; s < rc.start + t.length_slots; ++s) reserved[s] = static_cast<uint8_t>(rc.term + 1);
      out.cost[Idx(t.option)] += t.rate * static_cast<double>(t.length_slots);
      out.reservations.push_back(ReservationCommitment{layer_, u, t.option, rc.start, t.length_slots});
    }
    if (use_overlay) {
      out.cost[Idx(Option::kScheduledReserved)] += sched_cost;
      out.schedules.insert(out.schedules.end(), picked.begin(), picked.end());
    }

    for (size_t s = 0; s < slots; ++s) {
      if (w.cell_mass[s] <= 0) continue;
      if (reserved[s]) {
        const Option o = terms_[reserved[s] - 1].option;
        out.mass[Idx(o)] += w.cell_mass[s];
        out.slot_mass[s][Idx(o)] += w.cell_mass[s];
        continue;
      }
      if (use_overlay && w.replaced[s]) {
        out.mass[Idx(Option::kScheduledReserved)] += w.cell_mass[s];
        out.slot_mass[s][Idx(Option::kScheduledReserved)] += w.cell_mass[s];
        continue;
      }
      for (size_t k = w.piece_begin[s]; k < w.piece_begin[s + 1]; ++k) {
        const Piece& p = w.pieces[k];
        out.mass[Idx(p.option)] += p.mass;
        out.slot_mass[s][Idx(p.option)] += p.mass;
        if (p.option == Option::kOnDemand) {
          out.od_mass[s] += p.mass;
        } else {
          out.cost[Idx(p.option)] += p.mass * p.rate;
        }
      }
    }
  }

  double SlotScheduleRate(const CivilTime& t) const {
    return IsWeekend(t.day_of_week) ? catalog_.scheduled_offpeak : catalog_.scheduled_peak;
  }

  // Prices and selects schedules for every full year of unit u. Fills
  // overlay_cost with replaced cells zeroed; returns false when nothing is
  // selected.
  bool Overlay(int u, Work& w, std::vector<ScheduledCommitment>* picked, double* cost) const {
    std::copy(w.cell_cost.begin(), w.cell_cost.end(), w.overlay_cost.begin());
    const double min_rate = std::min(catalog_.scheduled_peak, catalog_.scheduled_offpeak);
    bool any = false;
    for (int y = 0; y < sched_.years; ++y) {
      const size_t y0 = static_cast<size_t>(y) * kHoursPerYear;
      const size_t y1 = y0 + kHoursPerYear;
      double mass = 0, spend = 0;
      std::array<std::array<double, 24>, 7> week{};
      std::array<std::array<double, 24>, kMonthlyScheduleDays> month{};
      for (size_t s = y0; s < y1; ++s) {
        const double m = w.cell_mass[s];
        if (m <= 0) continue;
        mass += m;
        spend += w.cell_cost[s];
        const CivilTime& t = sched_.civil[s];
        week[t.day_of_week][t.hour] += m;
        if (t.day_of_month <= kMonthlyScheduleDays) month[t.day_of_month - 1][t.hour] += m;
      }
      if (mass <= 0) continue;
      double competing = std::min(1.0, spend / mass);
      if (sched_.reserved_1y) competing = std::min(competing, catalog_.reserved_1y / (mass / kHoursPerYear));

      const auto& wc = sched_.week_count[y];
      const auto& mc = sched_.month_count[y];
      double max_util = 0;
      for (int d = 0; d < 7; ++d) {
        for (int h = 0; h < 24; ++h) {
          if (wc[d][h] > 0) max_util = std::max(max_util, week[d][h] / wc[d][h]);
        }
      }
      for (int d = 0; d < kMonthlyScheduleDays; ++d) {
        for (int h = 0; h < 24; ++h) {
          if (mc[d][h] > 0) max_util = std::max(max_util, month[d][h] / mc[d][h]);
        }
      }
      if (competing * max_util <= min_rate) continue;

      std::array<std::array<double, 25>, 7> wm{}, wn{};
      std::array<std::array<double, 25>, kMonthlyScheduleDays> mm{}, mn{};
      for (int d = 0; d < 7; ++d) {
        for (int h = 0; h < 24; ++h) {
          wm[d][h + 1] = wm[d][h] + week[d][h];
          wn[d][h + 1] = wn[d][h] + wc[d][h];
        }
      }
      for (int d = 0; d < kMonthlyScheduleDays; ++d) {
        for (int h = 0; h < 24; ++h) {
          mm[d][h + 1] = mm[d][h] + month[d][h];
          mn[d][h + 1] = mn[d][h] + mc[d][h];
        }
      }
      auto util = [&](const ScheduleCandidate& c) {
        const int a = c.start_hour, b = c.EndHour();
        double used = 0, hours = 0;
        if (c.period == SchedulePeriod::kMonthly) {
          for (int d = 0; d < kMonthlyScheduleDays; ++d) {
            if ((c.days >> d) & 1U) {
              used += mm[d][b] - mm[d][a];
              hours += mn[d][b] - mn[d][a];
            }
          }
        } else {
          for (int d = 0; d < 7; ++d) {
            if ((c.days >> d) & 1U) {
              used += wm[d][b] - wm[d][a];
              hours += wn[d][b] - wn[d][a];
            }
          }
        }
        return hours > 0 ? used / hours : 0.0;
      };
      const std::vector<ScheduleCandidate> priced = PriceCandidates(catalog_, sched_.shells, util, competing);
      const std::vector<size_t> chosen = SelectSchedules(priced);
      if (chosen.empty()) continue;

      any = true;
      for (size_t i : chosen) picked->push_back(ScheduledCommitment{layer_, u, y, priced[i]});
      for (size_t s = y0; s < y1; ++s) {
        const CivilTime& t = sched_.civil[s];
        bool covered = false;
        for (size_t i : chosen) covered = covered || priced[i].Covers(t);
        if (!covered) continue;
        const double rate = SlotScheduleRate(t);
        *cost += rate;
        const double m = w.cell_mass[s];
        if (m > 0 && w.cell_cost[s] > rate * m) w.overlay_cost[s] = 0;
      }
    }
    if (any) {
      // Replaced cells are those the overlay zeroed; cells that were already
      // free stay with their original option.
      for (size_t s = 0; s < table_.slots(); ++s) {
        w.replaced[s] = w.cell_mass[s] > 0 && w.overlay_cost[s] == 0 && w.cell_cost[s] > 0;
      }
    }
    return any;
  }

  const StackTable& table_;
  int layer_;
  const PricingCatalog& catalog_;
  const std::vector<ReservationTerm>& terms_;
  size_t step_;
  const ScheduleContext& sched_;
};

// Billing of one layer's run with on-demand usage settled per calendar month.
struct LayerBill {
  OptionArray hours{};  // layer units x hours
  OptionArray cost{};
  std::vector<OptionArray> slot_hours;  // per slot, on-demand split into sustained-use
  double total = 0;
};

struct MonthSpan {
  size_t first;
  size_t last;
  double hours;
};

std::vector<MonthSpan> MonthSpans(int64_t start, int64_t slot_seconds, size_t slots) {
  std::vector<MonthSpan> spans;
  for (size_t s = 0; s < slots; ++s) {
    const int64_t m = MonthIndex(start + static_cast<int64_t>(s) * slot_seconds);
    if (spans.empty() || MonthIndex(start + static_cast<int64_t>(spans.back().first) * slot_seconds) != m) {
      spans.push_back(MonthSpan{s, s + 1, MonthHours(m)});
    } else {
      spans.back().last = s + 1;
    }
  }
  return spans;
}

LayerBill BillLayer(const LayerRun& run, const std::vector<MonthSpan>& months, double slot_hours, bool sustained,
                    const PricingCatalog& catalog) {
  LayerBill bill;
  bill.slot_hours.assign(run.slot_mass.size(), OptionArray{});
  for (size_t o = 0; o < kOptionCount; ++o) {
    if (kAllOptions[o] == Option::kOnDemand) continue;
    bill.hours[o] = run.mass[o] * slot_hours;
    bill.cost[o] = run.cost[o] * slot_hours;
  }
  for (size_t s = 0; s < run.slot_mass.size(); ++s) {
    for (size_t o = 0; o < kOptionCount; ++o) bill.slot_hours[s][o] = run.slot_mass[s][o] * slot_hours;
  }
  const size_t od = Idx(Option::kOnDemand);
  const size_t su = Idx(Option::kSustainedUse);
  for (const MonthSpan& m : months) {
    double used = 0;
    for (size_t s = m.first; s < m.last; ++s) used += run.od_mass[s];
    used *= slot_hours;
    if (used <= 0) continue;
    if (!sustained) {
      bill.hours[od] += used;
      bill.cost[od] += used * catalog.on_demand;
      continue;
    }
    const SustainedSplit split = SplitSustainedBill(catalog, used / m.hours, m.hours);
    bill.hours[od] += split.full_price_hours;
    bill.cost[od] += split.full_price_hours * catalog.on_demand;
    bill.hours[su] += split.discounted_hours;
    bill.cost[su] += split.discounted_cost;
    const double moved = split.discounted_hours / used;
    for (size_t s = m.first; s < m.last; ++s) {
      const double shift = bill.slot_hours[s][od] * moved;
      bill.slot_hours[s][od] -= shift;
      bill.slot_hours[s][su] += shift;
    }
  }
  for (double c : bill.cost) bill.total += c;
  return bill;
}

// Uniform per-month selection cap from the monthly average of `usage`.
std::vector<double> SustainedCap(const std::vector<double>& usage, const std::vector<MonthSpan>& months,
                                 double slot_hours, const PricingCatalog& catalog) {
  std::vector<double> cap(usage.size(), kNoCap);
  for (const MonthSpan& m : months) {
    double used = 0;
    for (size_t s = m.first; s < m.last; ++s) used += usage[s];
    const double rate = SustainedSelectionRate(catalog, used * slot_hours / m.hours);
    for (size_t s = m.first; s < m.last; ++s) cap[s] = rate;
  }
  return cap;
}

int ResolveThreads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

std::string_view ModeName(OfflineMode mode) { return mode == OfflineMode::kTyped ? "typed" : "fractional"; }

OfflineMode ParseMode(std::string_view text) {
  if (text == "typed") return OfflineMode::kTyped;
  if (text == "fractional") return OfflineMode::kFractional;
  throw DataError("unknown mode '" + std::string(text) + "' (expected fractional or typed)");
}

OfflineMode DefaultMode(const ProviderProfile& profile) {
  return profile.allows_customized ? OfflineMode::kFractional : OfflineMode::kTyped;
}

OptionSet EffectiveOptions(const ProviderProfile& profile, OptionSet requested) {
  OptionSet out;
  for (Option o : kAllOptions) {
    if (profile.enabled_options.Contains(o) && requested.Contains(o)) out.Insert(o);
  }
  out.Insert(Option::kOnDemand);
  return out;
}

std::vector<OfflineLayer> BuildLayers(const JobTrace& trace, const ProviderProfile& profile,
                                      const PricingCatalog& catalog, OfflineMode mode, OptionSet options) {
  const OptionSet usable = EffectiveOptions(profile, options);
  OptionSet job_level;
  for (Option o : {Option::kTransient, Option::kSpotBlock}) {
    if (usable.Contains(o)) job_level.Insert(o);
  }

  std::vector<OfflineLayer> layers;
  if (mode == OfflineMode::kTyped) {
    layers.push_back(OfflineLayer{"bundle", 1.0, {}});
  } else {
    layers.push_back(OfflineLayer{"cores", catalog.core_price_share, {}});
    layers.push_back(OfflineLayer{"mem_gb", (1.0 - catalog.core_price_share) / 4.0, {}});
  }
  for (OfflineLayer& layer : layers) layer.jobs.reserve(trace.jobs.size());

  for (const JobRecord& job : trace.jobs) {
    const std::vector<CostQuote> quotes = NonreservedQuotes(job.RuntimeHours(), job_level, profile.revocation, catalog);
    const CostQuote& best = CheapestQuote(quotes);
    const double rate = best.DemandRate();
    if (mode == OfflineMode::kTyped) {
      const VmShape shape = MatchVm(profile, catalog, job.cores, job.mem_gb);
      layers[0].jobs.push_back(LayerJob{job.submit_time, job.EndTime(), shape.Rate(catalog), rate, best.option});
      continue;
    }
    double cores = job.cores;
    double mem = job.mem_gb;
    if (profile.allows_customized) {
      // Divisible custom shape at the surcharge, unless a menu type is cheaper.
      const VmShape standard = MatchStandardVm(profile.vm_types, job.cores, job.mem_gb);
      if (RateForShape(catalog, cores, mem, true) < standard.Rate(catalog)) {
        cores *= catalog.customized_surcharge;
        mem *= catalog.customized_surcharge;
      } else {
        cores = standard.TotalCores();
        mem = standard.TotalMemGb();
      }
    }
    layers[0].jobs.push_back(LayerJob{job.submit_time, job.EndTime(), cores, rate, best.option});
    layers[1].jobs.push_back(LayerJob{job.submit_time, job.EndTime(), mem, rate, best.option});
  }
  return layers;
}

SlotCostStack BuildSlotCostStack(const OfflineLayer& layer, int64_t series_start, int64_t slot_seconds, size_t slot) {
  const int64_t lo = series_start + static_cast<int64_t>(slot) * slot_seconds;
  const int64_t hi = lo + slot_seconds;
  std::vector<Seg> segs;
  for (const LayerJob& j : layer.jobs) {
    const int64_t a = std::max(j.begin, lo);
    const int64_t b = std::min(j.end, hi);
    if (b > a) segs.push_back(Seg{j.amount * static_cast<double>(b - a) / static_cast<double>(slot_seconds), j.rate, j.option});
  }
  std::stable_sort(segs.begin(), segs.end(), [](const Seg& x, const Seg& y) {
    return x.rate != y.rate ? x.rate < y.rate : TieRank(x.option) < TieRank(y.option);
  });
  SlotCostStack stack;
  stack.slot = slot;
  double level = 0;
  for (const Seg& g : segs) {
    level += g.mass;
    if (!stack.breakpoints.empty() && stack.breakpoints.back().second == g.rate) {
      stack.breakpoints.back().first = level;
    } else {
      stack.breakpoints.emplace_back(level, g.rate);
    }
  }
  return stack;
}

double NonreservedRate(const SlotCostStack& stack, int unit, double sustained_rate, const PricingCatalog& catalog) {
  const double lo = unit - 1;
  const double hi = std::min<double>(unit, stack.Demand());
  if (hi <= lo) return std::min(catalog.on_demand, sustained_rate);
  double cost = 0;
  double below = 0;
  for (const auto& [level, rate] : stack.breakpoints) {
    const double piece = std::min(level, hi) - std::max(below, lo);
    if (piece > 0) cost += piece * std::min(rate, sustained_rate);
    below = level;
  }
  return cost / (hi - lo);
}

double SustainedSelectionRate(const PricingCatalog& catalog, double avg_demand) {
  if (!(avg_demand > 0)) return catalog.on_demand;
  return SustainedMonthlyBill(catalog, avg_demand, 1.0) / avg_demand;
}

double CommitReservations(const std::vector<double>& cell_cost, const std::vector<ReservationTerm>& terms,
                          size_t window_step, std::vector<ReservationChoice>* chosen) {
  const size_t n = cell_cost.size();
  if (window_step == 0) throw DataError("commit_reservations: window step must be positive");
  std::vector<double> best(n + 1, 0.0);
  std::vector<int> pick(n, -1);
  for (size_t i = n; i-- > 0;) {
    double v = cell_cost[i] + best[i + 1];
    int p = -1;
    if (i % window_step == 0) {
      for (size_t t = 0; t < terms.size(); ++t) {
        const size_t len = terms[t].length_slots;
        if (len == 0 || i + len > n) continue;
        const double r = terms[t].rate * static_cast<double>(len) + best[i + len];
        if (r < v) {
          v = r;
          p = static_cast<int>(t);
        }
      }
    }
    best[i] = v;
    pick[i] = p;
  }
  if (chosen) {
    chosen->clear();
    for (size_t i = 0; i < n;) {
      if (pick[i] < 0) {
        ++i;
      } else {
        chosen->push_back(ReservationChoice{i, static_cast<size_t>(pick[i])});
        i += terms[pick[i]].length_slots;
      }
    }
  }
  return best[0];
}

double AllocationPlan::TotalCost() const {
  double total = 0;
  for (const OptionTotals& t : totals) total += t.relative_cost;
  return total;
}

double AllocationPlan::BilledResourceHours() const {
  double total = 0;
  for (const OptionTotals& t : totals) total += t.resource_hours;
  return total;
}

double AllocationPlan::DemandedResourceHours() const {
  double total = 0;
  for (const LayerSummary& l : layers) total += l.demanded_hours * l.weight;
  return total;
}

AllocationPlan OptimizeOffline(const JobTrace& trace, const ProviderProfile& profile, const PricingCatalog& catalog,
                               const OfflineOptions& options) {
  catalog.Validate();
  const int64_t slot_seconds = SlotSeconds(options.slot_hours);
  if (options.window_step_slots < 1) throw DataError("window_step_slots must be >= 1");

  AllocationPlan plan;
  plan.provider = std::string(profile.Name());
  plan.mode = options.mode;
  plan.options = EffectiveOptions(profile, options.options);
  plan.slot_hours = options.slot_hours;
  plan.trace_fingerprint = trace.Fingerprint();
  const auto [start, slots] = SeriesLayout(trace.horizon_start, trace.horizon_end, slot_seconds);
  plan.series_start = start;
  plan.slot_count = slots;

  const std::vector<OfflineLayer> layers = BuildLayers(trace, profile, catalog, options.mode, plan.options);
  std::vector<StackTable> tables;
  for (const OfflineLayer& layer : layers) {
    tables.emplace_back(layer, start, slot_seconds, slots);
    LayerSummary summary{layer.name, layer.weight, tables.back().peak(), 0.0};
    for (double d : tables.back().demand()) summary.demanded_hours += d * options.slot_hours;
    plan.layers.push_back(summary);
  }

  // Reservation terms that fit the horizon.
  std::vector<ReservationTerm> terms;
  const double slots_per_year = static_cast<double>(kHoursPerYear) / options.slot_hours;
  for (const auto& [option, years, rate] : {std::tuple{Option::kReserved1y, 1, catalog.reserved_1y},
                                            std::tuple{Option::kReserved3y, 3, catalog.reserved_3y}}) {
    if (!plan.options.Contains(option)) continue;
    const double len = slots_per_year * years;
    if (len != std::floor(len)) {
      plan.warnings.push_back(std::string(OptionName(option)) + " skipped: slot width does not divide the term");
    } else if (static_cast<size_t>(len) > slots) {
      plan.warnings.push_back(std::string(OptionName(option)) + " skipped: horizon shorter than the term");
    } else {
      terms.push_back(ReservationTerm{option, static_cast<size_t>(len), rate});
    }
  }

  ScheduleContext sched;
  if (plan.options.Contains(Option::kScheduledReserved)) {
    if (options.slot_hours != 1.0) {
      plan.warnings.push_back("scheduled-reserved skipped: requires 1-hour slots");
    } else if (slots < static_cast<size_t>(kHoursPerYear)) {
      plan.warnings.push_back("scheduled-reserved skipped: horizon shorter than one year");
    } else {
      sched.enabled = true;
      sched.reserved_1y = plan.options.Contains(Option::kReserved1y);
      sched.years = static_cast<int>(slots / kHoursPerYear);
      sched.civil.reserve(slots);
      for (size_t s = 0; s < slots; ++s) sched.civil.push_back(ToCivil(start + static_cast<int64_t>(s) * slot_seconds));
      sched.shells = EnumerateDaily(catalog);
      for (const auto& c : EnumerateWeekly(catalog)) sched.shells.push_back(c);
      for (const auto& c : EnumerateMonthly(catalog, options.monthly_cap)) sched.shells.push_back(c);
      sched.week_count.resize(sched.years);
      sched.month_count.resize(sched.years);
      for (int y = 0; y < sched.years; ++y) {
        sched.week_count[y] = {};
        sched.month_count[y] = {};
        for (size_t s = static_cast<size_t>(y * kHoursPerYear); s < static_cast<size_t>((y + 1) * kHoursPerYear); ++s) {
          const CivilTime& t = sched.civil[s];
          sched.week_count[y][t.day_of_week][t.hour] += 1;
          if (t.day_of_month <= kMonthlyScheduleDays) sched.month_count[y][t.day_of_month - 1][t.hour] += 1;
        }
      }
    }
  }

  const int threads = ResolveThreads(options.threads);
  const bool sustained = plan.options.Contains(Option::kSustainedUse);
  const std::vector<MonthSpan> months = MonthSpans(start, slot_seconds, slots);
  const size_t window_step = static_cast<size_t>(options.window_step_slots);

  struct Candidate {
    std::vector<LayerRun> runs;
    std::vector<LayerBill> bills;
    double total = 0;
  };
  auto evaluate = [&](const std::vector<std::vector<double>>& caps) {
    Candidate c;
    for (size_t i = 0; i < layers.size(); ++i) {
      LayerSolver solver(tables[i], static_cast<int>(i), catalog, terms, window_step, sched);
      c.runs.push_back(solver.Run(caps.empty() ? std::vector<double>{} : caps[i], threads));
      c.bills.push_back(BillLayer(c.runs.back(), months, options.slot_hours, sustained, catalog));
      c.total += c.bills.back().total * layers[i].weight;
    }
    return c;
  };

  Candidate best = evaluate({});
  if (sustained && slots > 0) {
    // Everything on sustained-use on-demand.
    Candidate all_od;
    for (size_t i = 0; i < layers.size(); ++i) {
      LayerRun run(slots);
      for (size_t s = 0; s < slots; ++s) {
        run.od_mass[s] = tables[i].demand(s);
        run.slot_mass[s][Idx(Option::kOnDemand)] = tables[i].demand(s);
        run.mass[Idx(Option::kOnDemand)] += tables[i].demand(s);
      }
      all_od.bills.push_back(BillLayer(run, months, options.slot_hours, true, catalog));
      all_od.total += all_od.bills.back().total * layers[i].weight;
      all_od.runs.push_back(std::move(run));
    }
    // Selection priced with the monthly sustained rate of all demand, then
    // of the on-demand residual that choice leaves.
    std::vector<std::vector<double>> caps;
    for (size_t i = 0; i < layers.size(); ++i) {
      caps.push_back(SustainedCap(tables[i].demand(), months, options.slot_hours, catalog));
    }
    Candidate first = evaluate(caps);
    caps.clear();
    for (size_t i = 0; i < layers.size(); ++i) {
      caps.push_back(SustainedCap(first.runs[i].od_mass, months, options.slot_hours, catalog));
    }
    Candidate second = evaluate(caps);
    for (Candidate* c : {&all_od, &first, &second}) {
      if (c->total < best.total) best = std::move(*c);
    }
  }

  plan.slot_mix.assign(slots, OptionArray{});
  for (size_t i = 0; i < layers.size(); ++i) {
    const double w = layers[i].weight;
    const LayerBill& bill = best.bills[i];
    for (size_t o = 0; o < kOptionCount; ++o) {
      plan.totals[o].resource_hours += bill.hours[o] * w;
      plan.totals[o].relative_cost += bill.cost[o] * w;
    }
    for (size_t s = 0; s < slots; ++s) {
      for (size_t o = 0; o < kOptionCount; ++o) plan.slot_mix[s][o] += bill.slot_hours[s][o] * w;
    }
    for (const ReservationCommitment& r : best.runs[i].reservations) plan.reservations.push_back(r);
    for (const ScheduledCommitment& c : best.runs[i].schedules) plan.schedules.push_back(c);
  }
  return plan;
}

}  // namespace vmmix
