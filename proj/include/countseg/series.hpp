#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "countseg/errors.hpp"

namespace countseg {

/// Immutable sequence of observations. Count families require non-negative
/// integers; the Gaussian families accept any finite value.
class CountSeries {
public:
  CountSeries() = default;
  explicit CountSeries(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  CountSeries reversed() const {
    return CountSeries(std::vector<double>(values_.rbegin(), values_.rend()));
  }

private:
  std::vector<double> values_;
};

/// Sufficient statistics of a contiguous slice.
struct SegmentStats {
  std::int64_t count = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double y) noexcept {
    ++count;
    sum += y;
    sumsq += y * y;
  }

  SegmentStats& operator+=(const SegmentStats& o) noexcept {
    count += o.count;
    sum += o.sum;
    sumsq += o.sumsq;
    return *this;
  }
  friend SegmentStats operator+(SegmentStats a, const SegmentStats& b) noexcept { return a += b; }
  friend bool operator==(const SegmentStats&, const SegmentStats&) = default;
};

/// Cumulative statistics; `slice(begin, end)` covers the points (begin, end]
/// in 1-based terms, i.e. values[begin .. end-1].
///
/// Every engine reads segment statistics through this class so that the
/// pruned and the naive recursions see bit-identical segment costs.
class PrefixStats {
public:
  PrefixStats() = default;
  explicit PrefixStats(std::span<const double> y)
      : sum_(y.size() + 1, 0.0), sumsq_(y.size() + 1, 0.0) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      sum_[i + 1] = sum_[i] + y[i];
      sumsq_[i + 1] = sumsq_[i] + y[i] * y[i];
    }
  }

  std::size_t size() const noexcept { return sum_.empty() ? 0 : sum_.size() - 1; }

  SegmentStats slice(std::size_t begin, std::size_t end) const noexcept {
    return {static_cast<std::int64_t>(end - begin), sum_[end] - sum_[begin],
            sumsq_[end] - sumsq_[begin]};
  }

private:
  std::vector<double> sum_;
  std::vector<double> sumsq_;
};

} // namespace countseg
