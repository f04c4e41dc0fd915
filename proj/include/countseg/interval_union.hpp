#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace countseg {

/// Closed interval [lo, hi] on the extended real line, lo <= hi.
struct Interval {
  double lo;
  double hi;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Closure of a parameter domain.
struct Domain {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  Interval whole() const noexcept { return {lo, hi}; }
};

/// Finite union of disjoint closed intervals, kept sorted with strictly
/// positive gaps. Sets are handled up to their boundary points: the complement
/// of a closed set is returned as its closure, so complement, intersection and
/// union all stay inside the collection.
class IntervalUnion {
public:
  IntervalUnion() = default;
  IntervalUnion(std::initializer_list<Interval> parts) : parts_(parts) { normalize(); }
  explicit IntervalUnion(std::vector<Interval> parts) : parts_(std::move(parts)) { normalize(); }
  explicit IntervalUnion(Interval single) {
    if (single.lo <= single.hi)
      parts_.push_back(single);
  }

  bool empty() const noexcept { return parts_.empty(); }
  std::size_t size() const noexcept { return parts_.size(); }
  std::span<const Interval> intervals() const noexcept { return parts_; }
  const Interval& operator[](std::size_t i) const { return parts_[i]; }
  double lower() const { return parts_.front().lo; }
  double upper() const { return parts_.back().hi; }

  bool contains(double x) const noexcept {
    auto it = std::upper_bound(parts_.begin(), parts_.end(), x,
                               [](double v, const Interval& iv) { return v < iv.lo; });
    return it != parts_.begin() && std::prev(it)->contains(x);
  }

  void clear() noexcept { parts_.clear(); }

  /// Replaces the contents with the normalized union of `parts`, reusing storage.
  void assign(std::span<const Interval> parts) {
    parts_.assign(parts.begin(), parts.end());
    normalize();
  }

  /// In-place intersection with one interval; does not allocate.
  void intersect_with(Interval keep) {
    std::size_t out = 0;
    for (const Interval& iv : parts_) {
      const double lo = std::max(iv.lo, keep.lo);
      const double hi = std::min(iv.hi, keep.hi);
      if (lo <= hi)
        parts_[out++] = {lo, hi};
    }
    parts_.resize(out);
  }

  /// Widens every interval by `pad(endpoint)` and clips to `dom`, merging any
  /// intervals that come to touch.
  template <class Pad>
  void dilate(const Pad& pad, Domain dom) {
    for (Interval& iv : parts_) {
      iv.lo = std::max(dom.lo, iv.lo - pad(iv.lo));
      iv.hi = std::min(dom.hi, iv.hi + pad(iv.hi));
    }
    merge_sorted();
  }

  friend bool operator==(const IntervalUnion&, const IntervalUnion&) = default;

private:
  friend IntervalUnion interval_complement(const IntervalUnion&, Domain);

  void normalize() {
    std::erase_if(parts_, [](const Interval& iv) { return !(iv.lo <= iv.hi); });
    std::sort(parts_.begin(), parts_.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    merge_sorted();
  }

  void merge_sorted() {
    if (parts_.empty())
      return;
    std::size_t out = 0;
    for (std::size_t i = 1; i < parts_.size(); ++i) {
      if (parts_[i].lo <= parts_[out].hi)
        parts_[out].hi = std::max(parts_[out].hi, parts_[i].hi);
      else
        parts_[++out] = parts_[i];
    }
    parts_.resize(out + 1);
  }

  std::vector<Interval> parts_;
};

/// Closure of dom \ s.
inline IntervalUnion interval_complement(const IntervalUnion& s, Domain dom) {
  IntervalUnion out;
  double cursor = dom.lo;
  bool open = true; // whether [cursor, ...) still needs to be emitted
  for (const Interval& iv : s.intervals()) {
    if (iv.hi < dom.lo || iv.lo > dom.hi)
      continue;
    if (iv.lo > cursor)
      out.parts_.push_back({cursor, iv.lo});
    cursor = std::max(cursor, iv.hi);
    if (cursor >= dom.hi) {
      open = false;
      break;
    }
  }
  if (open && cursor < dom.hi)
    out.parts_.push_back({cursor, dom.hi});
  else if (open && s.empty())
    out.parts_.push_back(dom.whole());
  out.merge_sorted();
  return out;
}

inline IntervalUnion interval_intersect(const IntervalUnion& a, const IntervalUnion& b) {
  std::vector<Interval> parts;
  std::size_t i = 0, j = 0;
  const auto as = a.intervals();
  const auto bs = b.intervals();
  while (i < as.size() && j < bs.size()) {
    const double lo = std::max(as[i].lo, bs[j].lo);
    const double hi = std::min(as[i].hi, bs[j].hi);
    if (lo <= hi)
      parts.push_back({lo, hi});
    if (as[i].hi < bs[j].hi)
      ++i;
    else
      ++j;
  }
  return IntervalUnion(std::move(parts));
}

inline IntervalUnion interval_union(const IntervalUnion& a, const IntervalUnion& b) {
  std::vector<Interval> parts(a.intervals().begin(), a.intervals().end());
  parts.insert(parts.end(), b.intervals().begin(), b.intervals().end());
  return IntervalUnion(std::move(parts));
}

} // namespace countseg
