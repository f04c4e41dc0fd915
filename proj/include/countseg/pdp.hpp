#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "countseg/interval_union.hpp"
#include "countseg/loss.hpp"
#include "countseg/segmentation.hpp"
#include "countseg/series.hpp"

namespace countseg {

/// A surviving last change-point τ for the current k. Its cost function at
/// time t is H(θ) = base + (cost of the points (τ, t] at parameter θ); the
/// statistics of (τ, t] are read from the prefix sums, so count = t − τ.
struct Candidate {
  std::size_t tau;
  double base;          // C_{k-1,τ}
  IntervalUnion surviving; // parameters for which τ is (weakly) optimal
};

namespace detail {

/// Updates `set` to set ∩ {g <= 0} and appends set \ {g <= 0} to `outside`.
/// g is convex; both results are rounded outward.
template <class Loss>
void split_by_sublevel(const Loss& loss, const Coeffs& g, IntervalUnion& set,
                       std::vector<Interval>& outside) {
  const Domain dom = Loss::domain;
  const double lo = set.lower();
  const double hi = set.upper();
  const bool lo_in = non_positive(loss.eval(g, lo));
  const bool hi_in = non_positive(loss.eval(g, hi));
  if (lo_in && hi_in)
    return; // convexity: the hull of `set` lies inside the sublevel set

  auto drop_all = [&] {
    for (const Interval& iv : set.intervals())
      outside.push_back(iv);
    set.clear();
  };

  const double m = loss.minimizer(g);
  const Evaluation em = loss.eval(g, m);
  if (!non_positive(em) || (!lo_in && lo >= m) || (!hi_in && hi <= m)) {
    drop_all();
    return;
  }

  double left = lo;
  double right = hi;
  if (em.value > 0.0) {
    left = right = m;
  } else if constexpr (requires { Loss::roots(g); }) {
    const Interval r = Loss::roots(g);
    if (!lo_in)
      left = r.lo;
    if (!hi_in)
      right = r.hi;
  } else {
    const auto inner = finite_inner_point(loss, g, m);
    if (!inner) {
      left = right = m;
    } else {
      if (!lo_in)
        left = left_root(loss, g, *inner, lo);
      if (!hi_in)
        right = right_root(loss, g, *inner, hi);
    }
  }

  const double left_out = std::max(dom.lo, left - Loss::root_tolerance(left));
  const double left_in = std::min(dom.hi, left + Loss::root_tolerance(left));
  const double right_in = std::max(dom.lo, right - Loss::root_tolerance(right));
  const double right_out = std::min(dom.hi, right + Loss::root_tolerance(right));

  // A root on the domain boundary leaves nothing outside on that side.
  const bool cut_left = !lo_in && left > dom.lo;
  const bool cut_right = !hi_in && right < dom.hi;
  for (const Interval& iv : set.intervals()) {
    if (cut_left && iv.lo <= left_in)
      outside.push_back({iv.lo, std::min(iv.hi, left_in)});
    if (cut_right && iv.hi >= right_in)
      outside.push_back({std::max(iv.lo, right_in), iv.hi});
  }
  set.intersect_with({left_out, right_out});
}

template <class Loss>
SegmentationResult pruned_dp(const Loss& loss, const CountSeries& series, int kmax,
                             const SegmentOptions& opt) {
  validate_run(loss, series, kmax);
  const std::size_t n = series.size();
  check_memory(kmax, n, opt);
  const PrefixStats prefix(series.values());
  const Domain dom = Loss::domain;
  constexpr double inf = std::numeric_limits<double>::infinity();

  SegmentationResult r;
  r.n = n;
  r.kmax = kmax;
  r.model = Loss::model;
  r.phi = loss_phi(loss);
  r.argmin = ArgminTable(kmax, n);
  r.costs.resize(static_cast<std::size_t>(kmax));
  r.candidate_total.assign(static_cast<std::size_t>(kmax), 0);
  r.candidate_max.assign(static_cast<std::size_t>(kmax), 0);
  if (opt.record_candidates)
    r.candidate_counts.assign(static_cast<std::size_t>(kmax), std::vector<std::uint32_t>(n + 1, 0));

  // k = 1 straight from the cumulative statistics.
  std::vector<double> prev(n + 1, inf);
  for (std::size_t t = 1; t <= n; ++t)
    prev[t] = loss.cost(prefix.slice(0, t));
  r.costs[0] = prev[n];
  r.candidate_total[0] = n;
  r.candidate_max[0] = 1;
  if (opt.record_candidates)
    std::fill(r.candidate_counts[0].begin() + 1, r.candidate_counts[0].end(), 1u);
  if (opt.keep_cost_matrix)
    r.cost_matrix.push_back(prev);

  std::vector<double> cur(n + 1, inf);
  std::vector<Candidate> candidates;
  std::vector<IntervalUnion> spare; // recycled interval storage
  std::vector<Interval> pieces;

  for (int k = 2; k <= kmax; ++k) {
    const std::size_t ku = static_cast<std::size_t>(k);
    std::fill(cur.begin(), cur.end(), inf);
    for (auto& c : candidates)
      spare.push_back(std::move(c.surviving));
    candidates.clear();
    std::uint64_t total = 0;
    std::uint32_t most = 0;

    for (std::size_t t = ku; t <= n; ++t) {
      // The newest candidate is τ = t − 1. Compare every older candidate
      // against it: S^τ ← S^τ ∩ {H^τ <= H^{t-1}}, and collect the parts of
      // each S^τ where the newcomer wins. Since the S^τ cover the domain,
      // those parts form the complement of ∪ {H^τ <= H^{t-1}}.
      const std::size_t newest = t - 1;
      const double base_new = prev[newest];
      pieces.clear();
      for (Candidate& c : candidates) {
        Coeffs g = loss.coeffs(prefix.slice(c.tau, newest));
        g.d += c.base - base_new;
        split_by_sublevel(loss, g, c.surviving, pieces);
      }

      IntervalUnion fresh = spare.empty() ? IntervalUnion{} : std::move(spare.back());
      if (!spare.empty())
        spare.pop_back();
      if (candidates.empty())
        fresh = IntervalUnion(dom.whole());
      else
        fresh.assign(pieces);

      std::size_t kept = 0;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].surviving.empty()) {
          if (opt.on_prune)
            opt.on_prune(k, candidates[i].tau, t);
          spare.push_back(std::move(candidates[i].surviving));
          continue;
        }
        if (kept != i)
          candidates[kept] = std::move(candidates[i]);
        ++kept;
      }
      candidates.resize(kept);
      if (!fresh.empty())
        candidates.push_back({newest, base_new, std::move(fresh)});
      else if (opt.on_prune)
        opt.on_prune(k, newest, t);

      double best = inf;
      std::int32_t arg = -1;
      for (const Candidate& c : candidates) {
        const double v = c.base + loss.cost(prefix.slice(c.tau, t));
        if (v < best) {
          best = v;
          arg = static_cast<std::int32_t>(c.tau);
        }
      }
      cur[t] = best;
      r.argmin.set(k, t, arg);

      const auto count = static_cast<std::uint32_t>(candidates.size());
      total += count;
      most = std::max(most, count);
      if (opt.record_candidates)
        r.candidate_counts[ku - 1][t] = count;
    }

    r.costs[ku - 1] = cur[n];
    r.candidate_total[ku - 1] = total;
    r.candidate_max[ku - 1] = most;
    if (opt.keep_cost_matrix)
      r.cost_matrix.push_back(cur);
    std::swap(prev, cur);
  }

  finish_result(loss, prefix, r);
  return r;
}

} // namespace detail

/// Exact optimal segmentations in 1..kmax segments by functional pruning.
template <class Loss>
SegmentationResult segment_with(const Loss& loss, const CountSeries& series, int kmax,
                                const SegmentOptions& opt = {}) {
  return detail::pruned_dp(loss, series, kmax, opt);
}

inline SegmentationResult segment(const CountSeries& series, const LossFamily& family, int kmax,
                                  const SegmentOptions& opt = {}) {
  return std::visit([&](const auto& loss) { return segment_with(loss, series, kmax, opt); },
                    family);
}

} // namespace countseg
