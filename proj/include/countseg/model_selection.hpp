#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "countseg/errors.hpp"
#include "countseg/loss.hpp"
#include "countseg/segmentation.hpp"

namespace countseg {

enum class Criterion { AIC, BIC, Oracle, MBIC };

inline std::string_view criterion_name(Criterion c) {
  switch (c) {
  case Criterion::AIC:
    return "aic";
  case Criterion::BIC:
    return "bic";
  case Criterion::Oracle:
    return "oracle";
  case Criterion::MBIC:
    return "mbic";
  }
  return "?";
}

inline std::optional<Criterion> parse_criterion(std::string_view s) {
  for (Criterion c : {Criterion::AIC, Criterion::BIC, Criterion::Oracle, Criterion::MBIC})
    if (criterion_name(c) == s)
      return c;
  return std::nullopt;
}

struct SelectionResult {
  int k_hat = 1;
  Criterion criterion = Criterion::BIC;
  /// values[k-1] is the criterion at k segments.
  std::vector<double> values;
  /// Penalty constant and shape (oracle criterion only).
  double beta = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> penshape;
};

/// Smallest number of segments in the slope regression.
inline constexpr int kMinOracleKmax = 10;

/// K·(1 + 4·√(1.1 + log(n/K)))². n is taken as a real so that the shape can
/// be evaluated off the integers.
inline double oracle_penshape(double k, double n) {
  if (!(k >= 1.0 && k <= n))
    throw ArgumentError("oracle_penshape requires 1 <= k <= n");
  const double root = 1.0 + 4.0 * std::sqrt(1.1 + std::log(n / k));
  return k * root * root;
}

namespace detail {

/// Relative gap below which two criterion values count as tied. Costs carry
/// rounding error of a few ulps of their magnitude, and on a constant signal
/// that noise is all that separates the K.
inline constexpr double kTieTolerance = 1e-12;

/// 1-based index of the smallest value; ties (within kTieTolerance of the
/// largest magnitude) go to the smaller index.
inline int argmin_k(const std::vector<double>& values) {
  double scale = 0.0;
  for (double v : values)
    scale = std::max(scale, std::abs(v));
  const double tol = kTieTolerance * scale;
  int best = 1;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[static_cast<std::size_t>(best - 1)] - tol)
      best = static_cast<int>(i) + 1;
  return best;
}

inline void check_costs(const std::vector<double>& costs, long long n) {
  if (costs.empty())
    throw ArgumentError("no per-K costs to select from");
  if (n < 1 || static_cast<long long>(costs.size()) > n)
    throw ArgumentError("number of costs exceeds the series length");
}

} // namespace detail

/// Slope-heuristic constant: least-squares slope ŝ of cost(K) against
/// penshape(K, n) over K in [⌈kmax/2⌉, kmax], β = −2ŝ. A non-negative slope
/// (no decrease left to explain) yields the smallest positive double.
inline double slope_heuristic_beta(const std::vector<double>& costs, long long n) {
  const int kmax = static_cast<int>(costs.size());
  const int first = (kmax + 1) / 2;
  double mx = 0.0, my = 0.0;
  const int m = kmax - first + 1;
  for (int k = first; k <= kmax; ++k) {
    mx += oracle_penshape(k, static_cast<double>(n));
    my += costs[static_cast<std::size_t>(k - 1)];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (int k = first; k <= kmax; ++k) {
    const double dx = oracle_penshape(k, static_cast<double>(n)) - mx;
    sxy += dx * (costs[static_cast<std::size_t>(k - 1)] - my);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0))
    return std::numeric_limits<double>::min();
  return -2.0 * slope;
}

/// argmin_K cost(K) + β·penshape(K, n) with β from the slope heuristic.
inline SelectionResult select_oracle(const std::vector<double>& costs, long long n) {
  detail::check_costs(costs, n);
  const int kmax = static_cast<int>(costs.size());
  if (kmax < kMinOracleKmax)
    throw ArgumentError("the oracle criterion needs kmax >= " + std::to_string(kMinOracleKmax) +
                        " for its slope regression (got " + std::to_string(kmax) +
                        "); rerun the segmentation with a larger kmax");
  SelectionResult r;
  r.criterion = Criterion::Oracle;
  r.beta = slope_heuristic_beta(costs, n);
  for (int k = 1; k <= kmax; ++k) {
    r.penshape.push_back(oracle_penshape(k, static_cast<double>(n)));
    r.values.push_back(costs[static_cast<std::size_t>(k - 1)] + r.beta * r.penshape.back());
  }
  r.k_hat = detail::argmin_k(r.values);
  return r;
}

/// AIC: 2·cost + 2p; BIC: 2·cost + p·log n, with p(K) = 2K − 1.
inline SelectionResult select_ic(const std::vector<double>& costs, long long n, Criterion c) {
  detail::check_costs(costs, n);
  if (c != Criterion::AIC && c != Criterion::BIC)
    throw ArgumentError("select_ic handles aic and bic only");
  SelectionResult r;
  r.criterion = c;
  const double per_param = c == Criterion::AIC ? 2.0 : std::log(static_cast<double>(n));
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const double p = 2.0 * static_cast<double>(i + 1) - 1.0;
    r.values.push_back(2.0 * costs[i] + per_param * p);
  }
  r.k_hat = detail::argmin_k(r.values);
  return r;
}

/// Modified BIC for the Poisson and Gaussian-mean families:
/// cost(K) + ½·Σ_j log n_j + (K − 1)·log n, where n_j are the segment lengths.
inline SelectionResult select_mbic(const std::vector<double>& costs,
                                   const std::vector<std::vector<std::size_t>>& breakpoints,
                                   long long n, Model model) {
  if (model != Model::Poisson && model != Model::GaussianMean)
    throw UnsupportedError("mbic is available for the poisson and gauss-mean models only (got " +
                           std::string(model_name(model)) + ")");
  detail::check_costs(costs, n);
  if (breakpoints.size() != costs.size())
    throw ArgumentError("mbic needs breakpoints for every K");
  SelectionResult r;
  r.criterion = Criterion::MBIC;
  const double logn = std::log(static_cast<double>(n));
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (breakpoints[i].size() != i)
      throw ArgumentError("breakpoint row " + std::to_string(i + 1) + " has the wrong length");
    double lengths = 0.0;
    for (std::size_t len : segment_lengths(breakpoints[i], static_cast<std::size_t>(n)))
      lengths += std::log(static_cast<double>(len));
    r.values.push_back(costs[i] + 0.5 * lengths + static_cast<double>(i) * logn);
  }
  r.k_hat = detail::argmin_k(r.values);
  return r;
}

inline SelectionResult select(const SegmentationResult& seg, Criterion c) {
  const auto n = static_cast<long long>(seg.n);
  switch (c) {
  case Criterion::Oracle:
    return select_oracle(seg.costs, n);
  case Criterion::MBIC:
    return select_mbic(seg.costs, seg.breakpoints, n, seg.model);
  default:
    return select_ic(seg.costs, n, c);
  }
}

} // namespace countseg
