#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "countseg/errors.hpp"
#include "countseg/series.hpp"

namespace countseg {

enum class Layout { Equal, UniformRandom };

/// Piecewise-constant negative binomial signal: segments alternate between a
/// high-mean success probability (odd segments, 1-based) and a low-mean one
/// (even segments).
struct SimulationSpec {
  std::size_t n = 1000;
  std::size_t k = 1;
  double phi = 1.0;
  double p_even = 0.8;
  double p_odd = 0.2;
  Layout layout = Layout::Equal;
  std::size_t min_length = 10;
  std::uint64_t seed = 0;
};

struct LabeledSeries {
  CountSeries series;
  /// labels[t] is the 1-based segment index of point t + 1.
  std::vector<std::uint32_t> labels;
  /// 1-based index of the last point of every segment but the final one.
  std::vector<std::size_t> true_breakpoints;
};

/// Segment labels 1..k implied by a breakpoint vector over n points.
inline std::vector<std::uint32_t> labels_from_breakpoints(const std::vector<std::size_t>& breaks,
                                                          std::size_t n) {
  std::vector<std::uint32_t> labels(n);
  std::uint32_t seg = 1;
  std::size_t next = 0;
  for (std::size_t t = 0; t < n; ++t) {
    while (next < breaks.size() && t >= breaks[next]) {
      ++seg;
      ++next;
    }
    labels[t] = seg;
  }
  return labels;
}

/// RNG seeded from a master seed and any number of stream indices, so results
/// do not depend on the order in which cells are evaluated.
inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t a = 0, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

/// One negative binomial draw with dispersion φ and success probability p,
/// as a gamma-Poisson mixture (mean φ(1 − p)/p).
template <class Rng>
double draw_negative_binomial(Rng& rng, double phi, double p) {
  std::gamma_distribution<double> rate(phi, (1.0 - p) / p);
  const double lambda = rate(rng);
  if (lambda <= 0.0)
    return 0.0;
  std::poisson_distribution<long long> count(lambda);
  return static_cast<double>(count(rng));
}

inline LabeledSeries simulate(const SimulationSpec& spec) {
  if (spec.n < 1 || spec.k < 1 || spec.k > spec.n)
    throw ArgumentError("simulation requires 1 <= k <= n");
  if (!(spec.phi > 0.0) || !std::isfinite(spec.phi))
    throw ArgumentError("simulation dispersion must be positive and finite");
  for (double p : {spec.p_even, spec.p_odd})
    if (!(p > 0.0 && p < 1.0))
      throw ArgumentError("success probabilities must lie in (0, 1)");

  auto rng = make_rng(spec.seed);
  std::vector<std::size_t> breaks;
  if (spec.layout == Layout::Equal) {
    for (std::size_t j = 1; j < spec.k; ++j)
      breaks.push_back(static_cast<std::size_t>(
          std::llround(static_cast<double>(j) * static_cast<double>(spec.n) /
                       static_cast<double>(spec.k))));
  } else {
    const std::size_t minlen = std::max<std::size_t>(1, spec.min_length);
    if (spec.k * minlen > spec.n)
      throw ArgumentError("infeasible layout: k * min_length exceeds n");
    // Spread the slack n − k·minlen uniformly: sorted uniform cut points.
    const std::size_t slack = spec.n - spec.k * minlen;
    std::uniform_int_distribution<std::size_t> pick(0, slack);
    std::vector<std::size_t> cuts(spec.k - 1);
    for (auto& c : cuts)
      c = pick(rng);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t j = 0; j < cuts.size(); ++j)
      breaks.push_back(cuts[j] + (j + 1) * minlen);
  }

  LabeledSeries out;
  out.true_breakpoints = breaks;
  out.labels = labels_from_breakpoints(breaks, spec.n);
  std::vector<double> y(spec.n);
  for (std::size_t t = 0; t < spec.n; ++t) {
    const double p = out.labels[t] % 2 == 1 ? spec.p_odd : spec.p_even;
    y[t] = draw_negative_binomial(rng, spec.phi, p);
  }
  out.series = CountSeries(std::move(y));
  return out;
}

/// Pair-counting Rand index, normalized by n(n − 1)/2, computed from the
/// contingency table of the two labelings in O(n).
template <class LabelA, class LabelB>
double rand_index(const std::vector<LabelA>& truth, const std::vector<LabelB>& estimate) {
  if (truth.size() != estimate.size())
    throw ArgumentError("rand_index: labelings differ in length");
  const std::uint64_t n = truth.size();
  if (n < 2)
    throw ArgumentError("rand_index needs at least two points");

  auto pairs = [](std::uint64_t m) { return m * (m - 1) / 2; };
  std::unordered_map<LabelA, std::uint64_t> rows;
  std::unordered_map<LabelB, std::uint64_t> cols;
  std::unordered_map<std::uint64_t, std::uint64_t> cells;
  std::unordered_map<LabelA, std::uint64_t> row_id;
  std::unordered_map<LabelB, std::uint64_t> col_id;
  for (std::uint64_t i = 0; i < n; ++i) {
    ++rows[truth[i]];
    ++cols[estimate[i]];
    const auto r = row_id.try_emplace(truth[i], row_id.size()).first->second;
    const auto c = col_id.try_emplace(estimate[i], col_id.size()).first->second;
    ++cells[r * n + c];
  }
  std::uint64_t same_both = 0, same_truth = 0, same_est = 0;
  for (const auto& [_, m] : cells)
    same_both += pairs(m);
  for (const auto& [_, m] : rows)
    same_truth += pairs(m);
  for (const auto& [_, m] : cols)
    same_est += pairs(m);
  const std::uint64_t total = pairs(n);
  // agreements = pairs together in both + pairs apart in both
  const std::uint64_t agree = total + 2 * same_both - same_truth - same_est;
  return static_cast<double>(agree) / static_cast<double>(total);
}

} // namespace countseg
