#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "countseg/errors.hpp"
#include "countseg/interval_union.hpp"
#include "countseg/series.hpp"

namespace countseg {

/// Model identifiers; numbering follows the conventional 1..4 codes.
enum class Model { Poisson = 1, GaussianMean = 2, NegativeBinomial = 3, GaussianVariance = 4 };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Coefficients of g(θ) = a·u(θ) + b·v(θ) + d, where u and v are the two
/// basis functions of a family. Segment cost functions, and differences of
/// them, all live in this space, so adding a point or comparing two
/// candidates is a coefficient update.
struct Coeffs {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;

  Coeffs& operator-=(const Coeffs& o) noexcept {
    a -= o.a;
    b -= o.b;
    d -= o.d;
    return *this;
  }
  friend Coeffs operator-(Coeffs x, const Coeffs& y) noexcept { return x -= y; }
};

/// g(θ) together with the magnitude of the summed terms, which bounds the
/// rounding error of the evaluation.
struct Evaluation {
  double value;
  double scale;
};

/// Argmin of a segment cost. Degenerate segments (all zeros for the count
/// families) have their minimizer on the closure of the domain.
struct MleEstimate {
  double value;
  bool on_boundary;
};

namespace detail {

inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

inline bool is_count(double y) { return std::isfinite(y) && y >= 0.0 && y == std::floor(y); }

} // namespace detail

// Families. Each one exposes the same static surface used by the engines:
// domain, coeffs(stats), eval/slope/curvature on Coeffs, minimizer, mle,
// cost, loss(y, θ), check(y), root_tolerance(θ).

/// Poisson with rate λ: γ(y, λ) = λ − y·log λ  (log y! dropped).
struct PoissonLoss {
  static constexpr Model model = Model::Poisson;
  static constexpr std::string_view name = "poisson";
  static constexpr Domain domain{0.0, kInf};
  static constexpr bool bounded = false;

  static Coeffs coeffs(const SegmentStats& s) noexcept {
    return {static_cast<double>(s.count), s.sum, 0.0};
  }
  static Evaluation eval(const Coeffs& g, double x) noexcept {
    if (x == 0.0)
      return g.b > 0.0 ? Evaluation{kInf, kInf} : Evaluation{g.d, std::abs(g.d)};
    if (x == kInf)
      return g.a > 0.0 ? Evaluation{kInf, kInf} : Evaluation{-kInf, kInf};
    const double u = g.a * x;
    const double v = g.b * std::log(x);
    return {u - v + g.d, std::abs(u) + std::abs(v) + std::abs(g.d)};
  }
  static double slope(const Coeffs& g, double x) noexcept {
    return g.a - (g.b == 0.0 ? 0.0 : g.b / x);
  }
  static double curvature(const Coeffs& g, double x) noexcept {
    return g.b == 0.0 ? 0.0 : g.b / (x * x);
  }
  static double minimizer(const Coeffs& g) noexcept {
    if (g.b <= 0.0)
      return 0.0;
    return g.a > 0.0 ? g.b / g.a : kInf;
  }
  static double root_tolerance(double x) noexcept { return 1e-10 * std::abs(x); }

  static MleEstimate mle(const SegmentStats& s) noexcept {
    return {s.sum / static_cast<double>(s.count), s.sum == 0.0};
  }
  static double cost(const SegmentStats& s) noexcept {
    if (s.sum <= 0.0)
      return 0.0;
    return s.sum - s.sum * std::log(s.sum / static_cast<double>(s.count));
  }
  static double loss(double y, double lambda) noexcept { return lambda - detail::xlogy(y, lambda); }
  static bool in_domain(double lambda) noexcept { return lambda > 0.0 && lambda < kInf; }
  static void check(double y) {
    if (!detail::is_count(y))
      throw InputError("poisson model requires non-negative integer counts");
  }
};

/// Negative binomial with known dispersion φ and success probability θ:
/// γ(y, θ) = −φ·log θ − y·log(1 − θ). Mean is φ(1 − θ)/θ.
struct NegativeBinomialLoss {
  static constexpr Model model = Model::NegativeBinomial;
  static constexpr std::string_view name = "nb";
  static constexpr Domain domain{0.0, 1.0};
  static constexpr bool bounded = true;

  double phi = 1.0;

  explicit NegativeBinomialLoss(double dispersion) : phi(dispersion) {
    if (!(dispersion > 0.0) || !std::isfinite(dispersion))
      throw ArgumentError("negative binomial dispersion must be positive and finite");
  }

  Coeffs coeffs(const SegmentStats& s) const noexcept {
    return {static_cast<double>(s.count) * phi, s.sum, 0.0};
  }
  static Evaluation eval(const Coeffs& g, double x) noexcept {
    if (x == 0.0)
      return g.a > 0.0 ? Evaluation{kInf, kInf} : Evaluation{g.d, std::abs(g.d)};
    if (x == 1.0)
      return g.b > 0.0 ? Evaluation{kInf, kInf} : Evaluation{g.d, std::abs(g.d)};
    const double u = -g.a * std::log(x);
    const double v = -g.b * std::log1p(-x);
    return {u + v + g.d, std::abs(u) + std::abs(v) + std::abs(g.d)};
  }
  static double slope(const Coeffs& g, double x) noexcept {
    return (g.a == 0.0 ? 0.0 : -g.a / x) + (g.b == 0.0 ? 0.0 : g.b / (1.0 - x));
  }
  static double curvature(const Coeffs& g, double x) noexcept {
    return (g.a == 0.0 ? 0.0 : g.a / (x * x)) + (g.b == 0.0 ? 0.0 : g.b / ((1.0 - x) * (1.0 - x)));
  }
  static double minimizer(const Coeffs& g) noexcept {
    if (g.b <= 0.0)
      return 1.0;
    if (g.a <= 0.0)
      return 0.0;
    return g.a / (g.a + g.b);
  }
  static double root_tolerance(double) noexcept { return 1e-12; }

  MleEstimate mle(const SegmentStats& s) const noexcept {
    const double w = static_cast<double>(s.count) * phi;
    return {w / (w + s.sum), s.sum == 0.0};
  }
  double cost(const SegmentStats& s) const noexcept {
    if (s.sum <= 0.0)
      return 0.0;
    const double w = static_cast<double>(s.count) * phi;
    return w * std::log1p(s.sum / w) + s.sum * std::log1p(w / s.sum);
  }
  double loss(double y, double theta) const noexcept {
    return -phi * std::log(theta) - (y == 0.0 ? 0.0 : y * std::log1p(-theta));
  }
  static bool in_domain(double theta) noexcept { return theta > 0.0 && theta < 1.0; }
  static void check(double y) {
    if (!detail::is_count(y))
      throw InputError("negative binomial model requires non-negative integer counts");
  }
};

/// Homoscedastic Gaussian (unit variance) with mean μ: γ(y, μ) = ½(y − μ)².
struct GaussianMeanLoss {
  static constexpr Model model = Model::GaussianMean;
  static constexpr std::string_view name = "gauss-mean";
  static constexpr Domain domain{-kInf, kInf};
  static constexpr bool bounded = false;

  static Coeffs coeffs(const SegmentStats& s) noexcept {
    return {static_cast<double>(s.count), s.sum, 0.5 * s.sumsq};
  }
  // g(μ) = ½·a·μ² − b·μ + d
  static Evaluation eval(const Coeffs& g, double x) noexcept {
    if (std::isinf(x)) {
      if (g.a > 0.0)
        return {kInf, kInf};
      if (g.b == 0.0)
        return {g.d, std::abs(g.d)};
      return {-g.b * x, kInf};
    }
    const double u = 0.5 * g.a * x * x;
    const double v = g.b * x;
    return {u - v + g.d, std::abs(u) + std::abs(v) + std::abs(g.d)};
  }
  static double slope(const Coeffs& g, double x) noexcept { return g.a * x - g.b; }
  static double curvature(const Coeffs& g, double) noexcept { return g.a; }
  static double minimizer(const Coeffs& g) noexcept {
    if (g.a > 0.0)
      return g.b / g.a;
    return g.b > 0.0 ? kInf : -kInf;
  }
  static double root_tolerance(double x) noexcept { return 1e-10 * std::max(1.0, std::abs(x)); }

  /// Closed-form zero set of the quadratic; requires a > 0 and a non-positive minimum.
  static Interval roots(const Coeffs& g) noexcept {
    const double disc = std::max(0.0, g.b * g.b - 2.0 * g.a * g.d);
    const double q = g.b + std::copysign(std::sqrt(disc), g.b);
    if (q == 0.0)
      return {0.0, 0.0};
    const double r1 = q / g.a;
    const double r2 = 2.0 * g.d / q;
    return {std::min(r1, r2), std::max(r1, r2)};
  }

  static MleEstimate mle(const SegmentStats& s) noexcept {
    return {s.sum / static_cast<double>(s.count), false};
  }
  static double cost(const SegmentStats& s) noexcept {
    return std::max(0.0, 0.5 * (s.sumsq - s.sum * s.sum / static_cast<double>(s.count)));
  }
  static double loss(double y, double mu) noexcept { return 0.5 * (y - mu) * (y - mu); }
  static bool in_domain(double mu) noexcept { return std::isfinite(mu); }
  static void check(double y) {
    if (!std::isfinite(y))
      throw InputError("observations must be finite");
  }
};

/// Zero-mean Gaussian with precision θ = 1/σ²: γ(y, θ) = −½·log θ + ½·y²·θ.
struct GaussianVarianceLoss {
  static constexpr Model model = Model::GaussianVariance;
  static constexpr std::string_view name = "gauss-var";
  static constexpr Domain domain{0.0, kInf};
  static constexpr bool bounded = false;

  static Coeffs coeffs(const SegmentStats& s) noexcept {
    return {static_cast<double>(s.count), s.sumsq, 0.0};
  }
  static Evaluation eval(const Coeffs& g, double x) noexcept {
    if (x == 0.0)
      return g.a > 0.0 ? Evaluation{kInf, kInf} : Evaluation{g.d, std::abs(g.d)};
    if (x == kInf) {
      if (g.b > 0.0)
        return {kInf, kInf};
      return g.a > 0.0 ? Evaluation{-kInf, kInf} : Evaluation{g.d, std::abs(g.d)};
    }
    const double u = -0.5 * g.a * std::log(x);
    const double v = 0.5 * g.b * x;
    return {u + v + g.d, std::abs(u) + std::abs(v) + std::abs(g.d)};
  }
  static double slope(const Coeffs& g, double x) noexcept {
    return (g.a == 0.0 ? 0.0 : -0.5 * g.a / x) + 0.5 * g.b;
  }
  static double curvature(const Coeffs& g, double x) noexcept {
    return g.a == 0.0 ? 0.0 : 0.5 * g.a / (x * x);
  }
  static double minimizer(const Coeffs& g) noexcept {
    if (g.a <= 0.0)
      return 0.0;
    return g.b > 0.0 ? g.a / g.b : kInf;
  }
  static double root_tolerance(double x) noexcept { return 1e-10 * std::abs(x); }

  static MleEstimate mle(const SegmentStats& s) noexcept {
    if (s.sumsq <= 0.0)
      return {kInf, true};
    return {static_cast<double>(s.count) / s.sumsq, false};
  }
  static double cost(const SegmentStats& s) noexcept {
    if (s.sumsq <= 0.0)
      return -kInf;
    const double n = static_cast<double>(s.count);
    return 0.5 * n * (1.0 + std::log(s.sumsq / n));
  }
  static double loss(double y, double theta) noexcept {
    return -0.5 * std::log(theta) + 0.5 * y * y * theta;
  }
  static bool in_domain(double theta) noexcept { return theta > 0.0 && theta < kInf; }
  static void check(double y) {
    if (!std::isfinite(y))
      throw InputError("observations must be finite");
    if (y == 0.0)
      throw InputError("variance model requires non-zero (centered) observations");
  }
};

using LossFamily =
    std::variant<PoissonLoss, GaussianMeanLoss, NegativeBinomialLoss, GaussianVarianceLoss>;

inline LossFamily make_family(Model m, double phi = 0.0) {
  switch (m) {
  case Model::Poisson:
    return PoissonLoss{};
  case Model::GaussianMean:
    return GaussianMeanLoss{};
  case Model::NegativeBinomial:
    return NegativeBinomialLoss{phi};
  case Model::GaussianVariance:
    return GaussianVarianceLoss{};
  }
  throw ArgumentError("unknown model");
}

inline Model model_of(const LossFamily& f) {
  return static_cast<Model>(f.index() + 1);
}

inline std::string_view model_name(Model m) {
  switch (m) {
  case Model::Poisson:
    return PoissonLoss::name;
  case Model::GaussianMean:
    return GaussianMeanLoss::name;
  case Model::NegativeBinomial:
    return NegativeBinomialLoss::name;
  case Model::GaussianVariance:
    return GaussianVarianceLoss::name;
  }
  return "?";
}

inline std::optional<Model> parse_model(std::string_view s) {
  for (Model m : {Model::Poisson, Model::GaussianMean, Model::NegativeBinomial,
                  Model::GaussianVariance})
    if (model_name(m) == s)
      return m;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Sublevel sets {θ : g(θ) ≤ 0} of convex g.

namespace detail {

/// Slack on the sign test g ≤ 0. Covers rounding in the evaluation so that
/// exact ties are never resolved as strict inequalities.
inline bool non_positive(const Evaluation& e) noexcept {
  if (!std::isfinite(e.value))
    return e.value < 0.0;
  return e.value <= 1e-12 * (1.0 + e.scale);
}

inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxIterations = 200;
inline constexpr int kMaxExpansions = 1000;

/// Zero of g between an outer point (g > 0) and an inner point (g <= 0).
/// Safeguarded Newton with bisection fallback; bisection is geometric while
/// the bracket spans orders of magnitude. The returned point lies on the
/// outer side of the root, to within the family tolerance.
template <class Loss>
double bracketed_root(const Loss& loss, const Coeffs& g, double outer, double inner) {
  const bool left = outer < inner;
  double x_out = outer;
  double x_in = inner;
  auto width = [&] { return std::abs(x_in - x_out); };
  auto midpoint = [&] {
    const double lo = std::min(x_out, x_in), hi = std::max(x_out, x_in);
    if (lo > 0.0 && hi > 4.0 * lo)
      return std::sqrt(lo * hi);
    if (hi < 0.0 && lo < 4.0 * hi)
      return -std::sqrt(lo * hi);
    return lo + 0.5 * (hi - lo);
  };

  // Quadratic model around the minimizer as the first guess.
  double x;
  {
    const Evaluation ei = loss.eval(g, inner);
    if (ei.value > -1e-12 * (1.0 + ei.scale))
      return inner; // the inner point is itself a root
    const double gm = ei.value;
    const double c = loss.curvature(g, inner);
    const double step = std::sqrt(std::max(0.0, -2.0 * gm / c));
    x = left ? inner - step : inner + step;
    if (!(std::isfinite(x) && std::min(x_out, x_in) < x && x < std::max(x_out, x_in)))
      x = midpoint();
  }

  double dx_old = width();
  double dx = dx_old;
  for (int it = 0; it < kMaxIterations; ++it) {
    const Evaluation e = loss.eval(g, x);
    const double s = loss.slope(g, x);
    const bool outside = !(e.value <= 0.0);
    if (outside)
      x_out = x;
    else
      x_in = x;

    if (width() <= loss.root_tolerance(x_out))
      return x_out;

    const double xn = x - e.value / s;
    // From the outer side a Newton step on a convex function never crosses
    // the root, so a tiny step is confirmed by probing one tolerance inward.
    if (outside && std::abs(xn - x) <= loss.root_tolerance(x)) {
      const double tol = loss.root_tolerance(x);
      const double probe = left ? x + tol : x - tol;
      if (std::min(x_out, x_in) < probe && probe < std::max(x_out, x_in)) {
        if (loss.eval(g, probe).value <= 0.0)
          return x_out;
        x_out = probe;
      }
    }
    const bool in_bracket =
        std::isfinite(xn) && std::min(x_out, x_in) < xn && xn < std::max(x_out, x_in);
    if (!in_bracket || std::abs(2.0 * e.value) > std::abs(dx_old * s)) {
      dx_old = dx;
      const double mid = midpoint();
      dx = mid - x;
      x = mid;
    } else {
      dx_old = dx;
      dx = xn - x;
      x = xn;
    }
  }
  throw NumericalError("root finding did not converge within 200 iterations (a=" +
                       std::to_string(g.a) + ", b=" + std::to_string(g.b) +
                       ", d=" + std::to_string(g.d) + ", bracket " + std::to_string(outer) + ".." +
                       std::to_string(inner) + ")");
}

/// Left end of {g <= 0} given an inner point with g(inner) <= 0.
template <class Loss>
double left_root(const Loss& loss, const Coeffs& g, double inner, double outer) {
  const Domain dom = Loss::domain;
  if (outer == dom.lo) {
    if (dom.lo == 0.0) {
      if (non_positive(loss.eval(g, kTiny)))
        return 0.0;
      outer = kTiny;
    } else if (dom.lo == -kInf) {
      double step = std::max(1.0, std::abs(inner));
      int i = 0;
      for (outer = inner - step; !(loss.eval(g, outer).value > 0.0); outer = inner - step) {
        if (++i > kMaxExpansions)
          return -kInf;
        step *= 2.0;
      }
    }
  }
  return bracketed_root(loss, g, outer, inner);
}

/// Right end of {g <= 0} given an inner point with g(inner) <= 0.
template <class Loss>
double right_root(const Loss& loss, const Coeffs& g, double inner, double outer) {
  const Domain dom = Loss::domain;
  if (outer == dom.hi) {
    if (dom.hi == kInf) {
      double x = inner > 0.0 ? 2.0 * inner : (inner < 0.0 ? 0.0 : 1.0);
      for (int i = 0; !(loss.eval(g, x).value > 0.0); ++i) {
        if (i >= kMaxExpansions || !std::isfinite(x))
          return kInf;
        inner = x;
        x = x > 0.0 ? 2.0 * x : (x == 0.0 ? 1.0 : 0.5 * x);
      }
      outer = x;
    } else {
      const double near = dom.hi - loss.root_tolerance(dom.hi);
      if (non_positive(loss.eval(g, near)))
        return dom.hi;
      outer = near;
    }
  }
  return bracketed_root(loss, g, outer, inner);
}

/// A point with g <= 0 when the minimizer sits at an infinite boundary.
template <class Loss>
std::optional<double> finite_inner_point(const Loss& loss, const Coeffs& g, double m) {
  if (std::isfinite(m))
    return m;
  double x = m > 0.0 ? 1.0 : -1.0;
  for (int i = 0; i < kMaxExpansions; ++i, x *= 2.0)
    if (loss.eval(g, x).value <= 0.0)
      return x;
  return std::nullopt;
}

} // namespace detail

template <class Loss>
Interval pad_interval(Interval iv) {
  const Domain dom = Loss::domain;
  return {std::max(dom.lo, iv.lo - Loss::root_tolerance(iv.lo)),
          std::min(dom.hi, iv.hi + Loss::root_tolerance(iv.hi))};
}

/// {θ in the closed domain : g(θ) <= 0} for convex g, rounded outward by one
/// tolerance unit. Empty when the minimum of g is positive.
template <class Loss>
std::optional<Interval> sublevel(const Loss& loss, const Coeffs& g) {
  const Domain dom = Loss::domain;
  if (g.a == 0.0 && g.b == 0.0) {
    if (g.d <= 0.0)
      return dom.whole();
    return std::nullopt;
  }
  const double m = loss.minimizer(g);
  const Evaluation em = loss.eval(g, m);
  if (!detail::non_positive(em))
    return std::nullopt;
  if (em.value > 0.0)
    return pad_interval<Loss>({m, m});

  if constexpr (requires { Loss::roots(g); }) {
    if (g.a > 0.0)
      return pad_interval<Loss>(Loss::roots(g));
  }

  const auto inner = detail::finite_inner_point(loss, g, m);
  if (!inner)
    return pad_interval<Loss>({m, m});
  const double lo = m == dom.lo ? dom.lo : detail::left_root(loss, g, *inner, dom.lo);
  const double hi = m == dom.hi ? dom.hi : detail::right_root(loss, g, *inner, dom.hi);
  return pad_interval<Loss>({lo, hi});
}

// ---------------------------------------------------------------------------
// Runtime-dispatched operations on LossFamily.

inline double pointwise_loss(double y, double theta, const LossFamily& family) {
  return std::visit(
      [&](const auto& loss) {
        if (!std::isfinite(y))
          throw InputError("observation must be finite");
        if (!loss.in_domain(theta))
          throw DomainError("parameter outside the domain of the " +
                            std::string(loss.name) + " family");
        return loss.loss(y, theta);
      },
      family);
}

inline MleEstimate segment_mle(const SegmentStats& stats, const LossFamily& family) {
  if (stats.count < 1)
    throw ArgumentError("segment statistics must cover at least one point");
  return std::visit([&](const auto& loss) { return loss.mle(stats); }, family);
}

inline double segment_cost(const SegmentStats& stats, const LossFamily& family) {
  if (stats.count < 1)
    throw ArgumentError("segment statistics must cover at least one point");
  return std::visit([&](const auto& loss) { return loss.cost(stats); }, family);
}

inline Domain parameter_domain(const LossFamily& family) {
  return std::visit([](const auto& loss) { return std::decay_t<decltype(loss)>::domain; },
                    family);
}

/// {θ : a·u(θ) + b·v(θ) + d <= 0} for the basis functions of `family`.
inline IntervalUnion sublevel_interval(double a, double b, double d, const LossFamily& family) {
  return std::visit(
      [&](const auto& loss) {
#ifndef NDEBUG
        // Every basis is convex with non-negative weights (GaussianMean's
        // linear term carries either sign).
        if (a < 0.0 || (b < 0.0 && model_of(family) != Model::GaussianMean))
          throw ArgumentError("sublevel_interval requires a convex coefficient combination");
#endif
        const auto iv = sublevel(loss, Coeffs{a, b, d});
        return iv ? IntervalUnion(*iv) : IntervalUnion{};
      },
      family);
}

} // namespace countseg
