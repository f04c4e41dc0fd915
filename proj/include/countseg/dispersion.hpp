#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "countseg/errors.hpp"
#include "countseg/loss.hpp"
#include "countseg/series.hpp"

namespace countseg {

/// Result of the sliding-window moment estimator of the negative binomial
/// dispersion.
struct DispersionEstimate {
  double phi_hat = 0.0;
  std::size_t window_used = 0;
  std::size_t windows_total = 0;
  std::size_t windows_valid = 0;
  int doublings = 0;
};

/// The estimator found no window width with a positive median. Carries the
/// state of the last attempt.
class EstimationError : public Error {
public:
  EstimationError(const std::string& what, DispersionEstimate last)
      : Error(what), last_(last) {}
  const DispersionEstimate& diagnostics() const noexcept { return last_; }

private:
  DispersionEstimate last_;
};

struct DispersionOptions {
  std::size_t h0 = 15;
  /// Minimum number of windows with variance above the mean.
  std::size_t min_valid = 10;
};

namespace detail {

/// φ_w = m²/(v − m) for every window of width h, skipping windows where the
/// unbiased variance does not exceed the mean. With S and Q the window sums
/// of y and y², v − m = D / (h(h − 1)) where D = hQ − S² − (h − 1)S, so the
/// sign test is exact in integer arithmetic.
inline std::vector<double> window_dispersions(const std::vector<std::int64_t>& y, std::size_t h) {
  std::vector<double> out;
  if (h > y.size())
    return out;
  __extension__ typedef __int128 wide;
  wide s = 0, q = 0;
  for (std::size_t i = 0; i < h; ++i) {
    s += y[i];
    q += static_cast<wide>(y[i]) * y[i];
  }
  const wide hw = static_cast<wide>(h);
  for (std::size_t start = 0;; ++start) {
    const wide d = hw * q - s * s - (hw - 1) * s;
    if (d > 0 && s > 0) {
      const double sd = static_cast<double>(s);
      out.push_back(sd * sd * static_cast<double>(h - 1) /
                    (static_cast<double>(h) * static_cast<double>(d)));
    }
    if (start + h >= y.size())
      break;
    const std::int64_t in = y[start + h], gone = y[start];
    s += in - gone;
    q += static_cast<wide>(in) * in - static_cast<wide>(gone) * gone;
  }
  return out;
}

/// Lower median: element ⌊(v + 1)/2⌋ of the sorted values (1-based).
inline double lower_median(std::vector<double>& v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() + 1) / 2 - 1);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

} // namespace detail

/// Median over sliding windows of the moment estimator φ = m²/(v − m).
/// The window width starts at h0 and doubles until at least `min_valid`
/// windows are valid and their median is positive and finite.
inline DispersionEstimate estimate_phi(const CountSeries& series,
                                       const DispersionOptions& opt = {}) {
  const std::size_t n = series.size();
  if (opt.h0 < 2)
    throw ArgumentError("window width must be at least 2");
  if (n < opt.h0)
    throw ArgumentError("series shorter than the initial window (n = " + std::to_string(n) +
                        ", h0 = " + std::to_string(opt.h0) + ")");
  std::vector<std::int64_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!detail::is_count(series[i]) || series[i] > 2e9)
      throw InputError("dispersion estimation requires non-negative integer counts (observation " +
                       std::to_string(i + 1) + ")");
    y[i] = static_cast<std::int64_t>(series[i]);
  }

  DispersionEstimate est;
  for (std::size_t h = opt.h0;; h *= 2, ++est.doublings) {
    if (h > n) {
      throw EstimationError(
          "dispersion estimation failed: no window width up to n = " + std::to_string(n) +
              " gives a positive median (" + std::to_string(est.doublings) +
              " doublings; last width " + std::to_string(est.window_used) + " had " +
              std::to_string(est.windows_valid) + " of " + std::to_string(est.windows_total) +
              " windows overdispersed). The data look under- or equidispersed; "
              "supply --phi or use the poisson model",
          est);
    }
    std::vector<double> phis = detail::window_dispersions(y, h);
    est.window_used = h;
    est.windows_total = n - h + 1;
    est.windows_valid = phis.size();
    if (phis.size() < std::max<std::size_t>(1, opt.min_valid))
      continue;
    const double med = detail::lower_median(phis);
    if (med > 0.0 && std::isfinite(med)) {
      est.phi_hat = med;
      return est;
    }
  }
}

inline DispersionEstimate estimate_phi(const CountSeries& series, std::size_t h0) {
  DispersionOptions opt;
  opt.h0 = h0;
  return estimate_phi(series, opt);
}

} // namespace countseg
