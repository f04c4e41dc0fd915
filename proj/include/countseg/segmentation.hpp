#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "countseg/errors.hpp"
#include "countseg/loss.hpp"
#include "countseg/series.hpp"

namespace countseg {

/// Best last change-point τ for every (k, t), k >= 2. Row k = 1 is implicit
/// (τ = 0). Entries are 32-bit; -1 marks an infeasible cell.
class ArgminTable {
public:
  ArgminTable() = default;
  ArgminTable(int kmax, std::size_t n)
      : kmax_(kmax), n_(n),
        cells_(static_cast<std::size_t>(std::max(0, kmax - 1)) * (n + 1), -1) {}

  int kmax() const noexcept { return kmax_; }
  std::size_t n() const noexcept { return n_; }

  std::int32_t get(int k, std::size_t t) const {
    if (k == 1)
      return 0;
    return cells_[index(k, t)];
  }
  void set(int k, std::size_t t, std::int32_t tau) { cells_[index(k, t)] = tau; }

  static std::size_t bytes(int kmax, std::size_t n) {
    return static_cast<std::size_t>(std::max(0, kmax - 1)) * (n + 1) * sizeof(std::int32_t);
  }

private:
  std::size_t index(int k, std::size_t t) const {
    return static_cast<std::size_t>(k - 2) * (n_ + 1) + t;
  }

  int kmax_ = 0;
  std::size_t n_ = 0;
  std::vector<std::int32_t> cells_;
};

/// Change-points of the best k-segment partition of the first t points.
/// Each entry is the 1-based index of the last point of a segment; the final
/// segment's end (t) is not listed, so the vector has k - 1 entries.
inline std::vector<std::size_t> backtrack(const ArgminTable& table, int k, std::size_t t) {
  if (k < 1 || k > table.kmax() || t > table.n() || t < static_cast<std::size_t>(k))
    throw ArgumentError("backtrack: (k, t) outside the table");
  std::vector<std::size_t> breaks(static_cast<std::size_t>(k - 1));
  std::size_t end = t;
  for (int j = k; j >= 2; --j) {
    const std::int32_t tau = table.get(j, end);
    if (tau < j - 1 || static_cast<std::size_t>(tau) >= end)
      throw Error("backtrack: malformed argmin table at k=" + std::to_string(j) +
                  ", t=" + std::to_string(end));
    breaks[static_cast<std::size_t>(j - 2)] = static_cast<std::size_t>(tau);
    end = static_cast<std::size_t>(tau);
  }
  return breaks;
}

inline std::vector<std::size_t> backtrack(const ArgminTable& table, int k) {
  return backtrack(table, k, table.n());
}

struct SegmentOptions {
  /// Keep C_{k,t} for every k and t (needed for constrained segmentations).
  bool keep_cost_matrix = false;
  /// Record the number of surviving candidates for every (k, t).
  bool record_candidates = false;
  /// Refuse runs whose tables exceed this many bytes.
  std::size_t memory_cap_bytes = std::size_t{4} << 30;
  /// Called with (k, τ, t) whenever candidate τ is discarded at time t.
  std::function<void(int, std::size_t, std::size_t)> on_prune;
};

struct SegmentationResult {
  std::size_t n = 0;
  int kmax = 0;
  Model model = Model::Poisson;
  double phi = std::numeric_limits<double>::quiet_NaN();

  /// costs[k-1] = C_{k,n}.
  std::vector<double> costs;
  /// breakpoints[k-1] holds k-1 strictly increasing change-points in [1, n-1].
  std::vector<std::vector<std::size_t>> breakpoints;
  /// parameters[k-1] holds the k per-segment maximum-likelihood estimates.
  std::vector<std::vector<MleEstimate>> parameters;

  ArgminTable argmin;
  /// cost_matrix[k-1][t] = C_{k,t} (only with keep_cost_matrix).
  std::vector<std::vector<double>> cost_matrix;

  /// Surviving candidates summed over t, and the largest count, per k.
  std::vector<std::uint64_t> candidate_total;
  std::vector<std::uint32_t> candidate_max;
  /// candidate_counts[k-1][t] (only with record_candidates).
  std::vector<std::vector<std::uint32_t>> candidate_counts;
};

/// Segment lengths of a breakpoint vector over n points.
inline std::vector<std::size_t> segment_lengths(const std::vector<std::size_t>& breaks,
                                                std::size_t n) {
  std::vector<std::size_t> lens;
  std::size_t start = 0;
  for (std::size_t b : breaks) {
    lens.push_back(b - start);
    start = b;
  }
  lens.push_back(n - start);
  return lens;
}

/// Sum of segment costs of an explicit partition.
inline double partition_cost(const PrefixStats& prefix, const std::vector<std::size_t>& breaks,
                             const LossFamily& family) {
  double total = 0.0;
  std::size_t start = 0;
  for (std::size_t b : breaks) {
    total += segment_cost(prefix.slice(start, b), family);
    start = b;
  }
  return total + segment_cost(prefix.slice(start, prefix.size()), family);
}

namespace detail {

template <class Loss>
void validate_run(const Loss& loss, const CountSeries& series, int kmax) {
  (void)loss;
  if (series.empty())
    throw ArgumentError("series is empty");
  if (kmax < 1 || static_cast<std::size_t>(kmax) > series.size())
    throw ArgumentError("kmax must lie in [1, n] (n = " + std::to_string(series.size()) + ")");
  if (series.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
    throw ArgumentError("series too long for 32-bit change-point indices");
  for (std::size_t i = 0; i < series.size(); ++i) {
    try {
      Loss::check(series[i]);
    } catch (const InputError& e) {
      throw InputError(std::string(e.what()) + " (observation " + std::to_string(i + 1) + ")");
    }
  }
}

inline void check_memory(int kmax, std::size_t n, const SegmentOptions& opt) {
  std::size_t bytes = ArgminTable::bytes(kmax, n);
  if (opt.keep_cost_matrix)
    bytes += static_cast<std::size_t>(kmax) * (n + 1) * sizeof(double);
  if (opt.record_candidates)
    bytes += static_cast<std::size_t>(kmax) * (n + 1) * sizeof(std::uint32_t);
  if (bytes > opt.memory_cap_bytes)
    throw ArgumentError("segmentation tables need " + std::to_string(bytes >> 20) +
                        " MiB, above the configured cap of " +
                        std::to_string(opt.memory_cap_bytes >> 20) +
                        " MiB; raise memory_cap_bytes (CLI: --memory-cap-mib) to override");
}

template <class Loss>
double loss_phi(const Loss& loss) {
  if constexpr (requires { loss.phi; })
    return loss.phi;
  else
    return std::numeric_limits<double>::quiet_NaN();
}

/// Fills breakpoints and per-segment estimates from a completed argmin table.
template <class Loss>
void finish_result(const Loss& loss, const PrefixStats& prefix, SegmentationResult& r) {
  r.breakpoints.resize(static_cast<std::size_t>(r.kmax));
  r.parameters.resize(static_cast<std::size_t>(r.kmax));
  for (int k = 1; k <= r.kmax; ++k) {
    auto& breaks = r.breakpoints[static_cast<std::size_t>(k - 1)];
    breaks = backtrack(r.argmin, k);
    auto& params = r.parameters[static_cast<std::size_t>(k - 1)];
    std::size_t start = 0;
    for (std::size_t b : breaks) {
      params.push_back(loss.mle(prefix.slice(start, b)));
      start = b;
    }
    params.push_back(loss.mle(prefix.slice(start, r.n)));
  }
}

} // namespace detail

} // namespace countseg
