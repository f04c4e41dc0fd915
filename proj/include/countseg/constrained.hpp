#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "countseg/errors.hpp"
#include "countseg/loss.hpp"
#include "countseg/pdp.hpp"
#include "countseg/segmentation.hpp"
#include "countseg/series.hpp"

namespace countseg {

/// Optimal K-segment costs constrained to place the j-th change-point at t.
class ConstrainedCosts {
public:
  int K() const noexcept { return k_; }
  std::size_t n() const noexcept { return n_; }
  int first_j() const noexcept { return j_lo_; }
  int last_j() const noexcept { return j_hi_; }
  bool has_row(int j) const noexcept { return j >= j_lo_ && j <= j_hi_; }

  /// best_cost(j)[t], t = 0..n; +inf where t cannot be the j-th change-point.
  const std::vector<double>& best_cost(int j) const { return rows_.at(row(j)); }
  double best_cost(int j, std::size_t t) const { return best_cost(j).at(t); }

  /// Feasible range of the j-th change-point: [j, n − (K − j)].
  std::size_t t_min(int j) const noexcept { return static_cast<std::size_t>(j); }
  std::size_t t_max(int j) const noexcept { return n_ - static_cast<std::size_t>(k_ - j); }

  /// Full breakpoint vector attaining best_cost(j, t).
  std::vector<std::size_t> best_seg(int j, std::size_t t) const {
    check_query(j, t);
    std::vector<std::size_t> breaks = backtrack(forward_, j, t);
    breaks.push_back(t);
    // A breakpoint b' of the reversed series splits original points n − b'
    // and n − b' + 1.
    const std::vector<std::size_t> tail = backtrack(backward_, k_ - j, n_ - t);
    for (auto it = tail.rbegin(); it != tail.rend(); ++it)
      breaks.push_back(n_ - *it);
    return breaks;
  }

private:
  template <class Loss>
  friend ConstrainedCosts constrained_with(const Loss&, const CountSeries&, int, int, int,
                                           const SegmentOptions&);

  std::size_t row(int j) const {
    if (!has_row(j))
      throw ArgumentError("change-point index j = " + std::to_string(j) + " not computed");
    return static_cast<std::size_t>(j - j_lo_);
  }
  void check_query(int j, std::size_t t) const {
    row(j);
    if (t < t_min(j) || t > t_max(j))
      throw ArgumentError("t = " + std::to_string(t) + " cannot be change-point " +
                          std::to_string(j) + " of a " + std::to_string(k_) +
                          "-segment partition");
  }

  int k_ = 0;
  std::size_t n_ = 0;
  int j_lo_ = 1;
  int j_hi_ = 0;
  std::vector<std::vector<double>> rows_;
  ArgminTable forward_;
  ArgminTable backward_;
};

/// Forward pass on the series and a backward pass on its reverse, both by the
/// pruned engine; best_cost(j, t) = F_j(t) + B_{K−j}(t).
template <class Loss>
ConstrainedCosts constrained_with(const Loss& loss, const CountSeries& series, int K, int j_lo,
                                  int j_hi, const SegmentOptions& base) {
  const std::size_t n = series.size();
  if (K < 2 || static_cast<std::size_t>(K) > n)
    throw ArgumentError("constrained segmentation needs 2 <= K <= n");
  if (j_lo < 1 || j_hi > K - 1 || j_lo > j_hi)
    throw ArgumentError("change-point index must lie in [1, K - 1]");

  SegmentOptions opt = base;
  opt.keep_cost_matrix = true;
  opt.record_candidates = false;
  opt.on_prune = nullptr;
  SegmentationResult fwd = segment_with(loss, series, j_hi, opt);
  SegmentationResult bwd = segment_with(loss, series.reversed(), K - j_lo, opt);

  constexpr double inf = std::numeric_limits<double>::infinity();
  ConstrainedCosts out;
  out.k_ = K;
  out.n_ = n;
  out.j_lo_ = j_lo;
  out.j_hi_ = j_hi;
  for (int j = j_lo; j <= j_hi; ++j) {
    std::vector<double> row(n + 1, inf);
    const auto& f = fwd.cost_matrix[static_cast<std::size_t>(j - 1)];
    const auto& b = bwd.cost_matrix[static_cast<std::size_t>(K - j - 1)];
    for (std::size_t t = static_cast<std::size_t>(j); t + static_cast<std::size_t>(K - j) <= n; ++t)
      row[t] = f[t] + b[n - t];
    out.rows_.push_back(std::move(row));
  }
  out.forward_ = std::move(fwd.argmin);
  out.backward_ = std::move(bwd.argmin);
  return out;
}

/// Constrained costs for every j in 1..K−1.
inline ConstrainedCosts best_segmentation(const CountSeries& series, const LossFamily& family,
                                          int K, const SegmentOptions& opt = {}) {
  return std::visit(
      [&](const auto& loss) { return constrained_with(loss, series, K, 1, K - 1, opt); }, family);
}

/// Constrained costs for a single change-point index j.
inline ConstrainedCosts best_segmentation(const CountSeries& series, const LossFamily& family,
                                          int K, int j, const SegmentOptions& opt = {}) {
  return std::visit([&](const auto& loss) { return constrained_with(loss, series, K, j, j, opt); },
                    family);
}

} // namespace countseg
