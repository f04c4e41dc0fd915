#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "countseg/dispersion.hpp"
#include "countseg/model_selection.hpp"
#include "countseg/pdp.hpp"
#include "countseg/simulation.hpp"

namespace countseg {

enum class PhiMode { Known, Estimated };

inline std::string_view phi_mode_name(PhiMode m) {
  return m == PhiMode::Known ? "known" : "estimated";
}

struct BenchmarkOptions {
  std::size_t repetitions = 1;
  std::vector<PhiMode> modes{PhiMode::Known};
  std::uint64_t seed = 1;
  /// Worker threads; rows come back in grid order regardless.
  unsigned workers = 1;
  std::size_t h0 = 15;
};

struct BenchmarkRow {
  std::size_t n = 0;
  std::size_t k = 0;
  double phi = 0.0;
  PhiMode mode = PhiMode::Known;
  std::size_t rep = 0;
  double phi_used = std::numeric_limits<double>::quiet_NaN();
  int kmax = 0;
  int k_hat = 0;
  double seconds = std::numeric_limits<double>::quiet_NaN();
  double seconds_per_kmax = std::numeric_limits<double>::quiet_NaN();
  double rand = std::numeric_limits<double>::quiet_NaN();
  long k_error = 0;
  std::string status = "ok";
};

/// ⌈√n⌉, the default largest number of segments.
inline int sqrt_kmax(std::size_t n) {
  auto k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (k * k < n)
    ++k;
  while (k > 1 && (k - 1) * (k - 1) >= n)
    --k;
  return static_cast<int>(std::max<std::size_t>(1, k));
}

/// One benchmark cell: simulate, optionally estimate φ, segment with
/// kmax = ⌈√n⌉, select K by the oracle penalty, and score against the truth.
/// The simulation seed derives from (master seed, cell, repetition) only, so
/// the known and estimated modes of a cell see the same series.
inline BenchmarkRow run_cell(const SimulationSpec& cell, std::size_t cell_index, std::size_t rep,
                             PhiMode mode, const BenchmarkOptions& opt) {
  BenchmarkRow row;
  row.n = cell.n;
  row.k = cell.k;
  row.phi = cell.phi;
  row.mode = mode;
  row.rep = rep;
  row.kmax = sqrt_kmax(cell.n);
  try {
    SimulationSpec spec = cell;
    spec.seed = make_rng(opt.seed, cell_index, rep)();
    const LabeledSeries data = simulate(spec);
    row.phi_used = mode == PhiMode::Known ? cell.phi : estimate_phi(data.series, opt.h0).phi_hat;
    const NegativeBinomialLoss loss(row.phi_used);
    const auto t0 = std::chrono::steady_clock::now();
    const SegmentationResult seg = segment_with(loss, data.series, row.kmax);
    const auto t1 = std::chrono::steady_clock::now();
    row.seconds = std::chrono::duration<double>(t1 - t0).count();
    row.seconds_per_kmax = row.seconds / row.kmax;
    const SelectionResult sel = select_oracle(seg.costs, static_cast<long long>(cell.n));
    row.k_hat = sel.k_hat;
    row.k_error = static_cast<long>(sel.k_hat) - static_cast<long>(cell.k);
    const auto& breaks = seg.breakpoints[static_cast<std::size_t>(sel.k_hat - 1)];
    row.rand = rand_index(data.labels, labels_from_breakpoints(breaks, cell.n));
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    std::replace(row.status.begin(), row.status.end(), '\t', ' ');
    std::replace(row.status.begin(), row.status.end(), '\n', ' ');
  }
  return row;
}

/// Runs every (cell, repetition, mode) combination. A failing cell is
/// recorded in its row's status and does not stop the run.
inline std::vector<BenchmarkRow> run_benchmark(const std::vector<SimulationSpec>& grid,
                                               const BenchmarkOptions& opt) {
  if (grid.empty())
    throw ArgumentError("benchmark grid is empty");
  if (opt.modes.empty())
    throw ArgumentError("benchmark needs at least one phi mode");
  struct Job {
    std::size_t cell, rep;
    PhiMode mode;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < grid.size(); ++c)
    for (std::size_t r = 0; r < opt.repetitions; ++r)
      for (PhiMode m : opt.modes)
        jobs.push_back({c, r, m});

  std::vector<BenchmarkRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      rows[i] = run_cell(grid[jobs[i].cell], jobs[i].cell, jobs[i].rep, jobs[i].mode, opt);
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(work);
    for (auto& t : pool)
      t.join();
  }
  return rows;
}

} // namespace countseg
