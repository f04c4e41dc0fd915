#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "countseg/loss.hpp"
#include "countseg/segmentation.hpp"
#include "countseg/series.hpp"

namespace countseg {

struct NaiveOptions {
  /// The quadratic recursion refuses series longer than this unless overridden.
  std::size_t max_n = 10'000;
  bool allow_large = false;
  bool keep_cost_matrix = false;
};

/// Textbook segmental recursion C_{k,t} = min_τ C_{k-1,τ} + c((τ, t]), O(kmax·n²).
/// Shares tie-breaking (smallest τ) and segment-cost evaluation with the pruned
/// engine, so the two agree bit for bit whenever pruning is exact.
template <class Loss>
SegmentationResult naive_dp_with(const Loss& loss, const CountSeries& series, int kmax,
                                 const NaiveOptions& opt = {}) {
  detail::validate_run(loss, series, kmax);
  const std::size_t n = series.size();
  if (n > opt.max_n && !opt.allow_large)
    throw ArgumentError("naive_dp is quadratic; n = " + std::to_string(n) +
                        " exceeds the guard of " + std::to_string(opt.max_n) +
                        " (set allow_large to override)");
  const PrefixStats prefix(series.values());
  constexpr double inf = std::numeric_limits<double>::infinity();

  SegmentationResult r;
  r.n = n;
  r.kmax = kmax;
  r.model = Loss::model;
  r.phi = detail::loss_phi(loss);
  r.argmin = ArgminTable(kmax, n);
  r.costs.resize(static_cast<std::size_t>(kmax));

  std::vector<double> prev(n + 1, inf);
  for (std::size_t t = 1; t <= n; ++t)
    prev[t] = loss.cost(prefix.slice(0, t));
  r.costs[0] = prev[n];
  if (opt.keep_cost_matrix)
    r.cost_matrix.push_back(prev);

  std::vector<double> cur(n + 1, inf);
  for (int k = 2; k <= kmax; ++k) {
    const std::size_t ku = static_cast<std::size_t>(k);
    std::fill(cur.begin(), cur.end(), inf);
    for (std::size_t t = ku; t <= n; ++t) {
      double best = inf;
      std::int32_t arg = -1;
      for (std::size_t tau = ku - 1; tau < t; ++tau) {
        const double v = prev[tau] + loss.cost(prefix.slice(tau, t));
        if (v < best) {
          best = v;
          arg = static_cast<std::int32_t>(tau);
        }
      }
      cur[t] = best;
      r.argmin.set(k, t, arg);
    }
    r.costs[ku - 1] = cur[n];
    if (opt.keep_cost_matrix)
      r.cost_matrix.push_back(cur);
    std::swap(prev, cur);
  }

  detail::finish_result(loss, prefix, r);
  return r;
}

inline SegmentationResult naive_dp(const CountSeries& series, const LossFamily& family, int kmax,
                                   const NaiveOptions& opt = {}) {
  return std::visit([&](const auto& loss) { return naive_dp_with(loss, series, kmax, opt); },
                    family);
}

} // namespace countseg
