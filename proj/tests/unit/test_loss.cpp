#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "countseg/loss.hpp"
#include "../oracles.hpp"

using namespace countseg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const std::vector<LossFamily> kFamilies = {NegativeBinomialLoss{0.3}, NegativeBinomialLoss{2.3},
                                           PoissonLoss{}, GaussianMeanLoss{},
                                           GaussianVarianceLoss{}};

double family_phi(const LossFamily& f) {
  if (auto* nb = std::get_if<NegativeBinomialLoss>(&f))
    return nb->phi;
  return 0.0;
}

// A parameter strictly inside the family's domain.
double random_theta(const LossFamily& f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (model_of(f)) {
  case Model::NegativeBinomial:
    return 0.001 + 0.998 * u(rng);
  case Model::Poisson:
  case Model::GaussianVariance:
    return std::exp(-5.0 + 8.0 * u(rng));
  case Model::GaussianMean:
    return -20.0 + 40.0 * u(rng);
  }
  return 0.5;
}

std::vector<double> random_obs(const LossFamily& f, std::mt19937_64& rng, std::size_t n) {
  std::vector<double> y(n);
  std::poisson_distribution<int> pois(3.0);
  std::normal_distribution<double> norm(1.0, 2.0);
  for (auto& v : y) {
    if (model_of(f) == Model::GaussianMean)
      v = norm(rng);
    else if (model_of(f) == Model::GaussianVariance)
      v = norm(rng) + (norm(rng) == 0.0 ? 1.0 : 0.0);
    else
      v = pois(rng);
  }
  return y;
}

SegmentStats stats_of(const std::vector<double>& y) {
  SegmentStats s;
  for (double v : y)
    s.add(v);
  return s;
}

} // namespace

TEST_CASE("pointwise loss examples") {
  CHECK_THAT(pointwise_loss(0, 0.5, NegativeBinomialLoss{1.0}), WithinRel(std::log(2.0), 1e-15));
  CHECK(pointwise_loss(0, 1.0, PoissonLoss{}) == 1.0);
  // High-precision reference for −0.3·log 0.2 − 3·log 0.8.
  CHECK_THAT(pointwise_loss(3, 0.2, NegativeBinomialLoss{0.3}),
             WithinRel(1.152262027672859379679, 1e-14));
  CHECK_THAT(pointwise_loss(3, 0.2, NegativeBinomialLoss{0.3}),
             WithinRel(static_cast<double>(oracle::point_loss(Model::NegativeBinomial, 0.3L, 3, 0.2L)),
                       1e-14));
}

TEST_CASE("pointwise loss rejects parameters outside the open domain") {
  CHECK_THROWS_AS(pointwise_loss(1, 0.0, NegativeBinomialLoss{1.0}), DomainError);
  CHECK_THROWS_AS(pointwise_loss(1, 1.0, NegativeBinomialLoss{1.0}), DomainError);
  CHECK_THROWS_AS(pointwise_loss(1, -1.0, PoissonLoss{}), DomainError);
  CHECK_THROWS_AS(pointwise_loss(1, 0.0, GaussianVarianceLoss{}), DomainError);
  CHECK_THROWS_AS(pointwise_loss(NAN, 1.0, PoissonLoss{}), InputError);
  CHECK_THROWS_AS(pointwise_loss(INFINITY, 0.0, GaussianMeanLoss{}), InputError);
}

TEST_CASE("negative binomial dispersion must be positive and finite") {
  CHECK_THROWS_AS(NegativeBinomialLoss{0.0}, ArgumentError);
  CHECK_THROWS_AS(NegativeBinomialLoss{-1.0}, ArgumentError);
  CHECK_THROWS_AS(NegativeBinomialLoss{INFINITY}, ArgumentError);
  CHECK_THROWS_AS(make_family(Model::NegativeBinomial, NAN), ArgumentError);
}

TEST_CASE("segment MLE examples") {
  const auto nb = segment_mle({2, 5.0, 0.0}, NegativeBinomialLoss{1.0});
  CHECK_THAT(nb.value, WithinRel(2.0 / 7.0, 1e-15));
  // Grid minimization of the segment objective −2 log θ − 5 log(1 − θ).
  double best = 0, best_v = INFINITY;
  for (int i = 1; i < 1'000'000; ++i) {
    const double th = i / 1e6;
    const double v = -2 * std::log(th) - 5 * std::log1p(-th);
    if (v < best_v) {
      best_v = v;
      best = th;
    }
  }
  CHECK_THAT(nb.value, WithinAbs(best, 1e-6));

  const auto pois = segment_mle({4, 0.0, 0.0}, PoissonLoss{});
  CHECK(pois.value == 0.0);
  CHECK(pois.on_boundary);
  CHECK(segment_mle({3, 6.0, 14.0}, GaussianMeanLoss{}).value == 2.0);
  CHECK(segment_mle({4, 0.0, 0.0}, NegativeBinomialLoss{1.0}).value == 1.0);
  CHECK(segment_mle({4, 0.0, 0.0}, NegativeBinomialLoss{1.0}).on_boundary);
  CHECK(segment_mle({2, 0.0, 8.0}, GaussianVarianceLoss{}).value == 0.25);
  CHECK_THROWS_AS(segment_mle({0, 0.0, 0.0}, PoissonLoss{}), ArgumentError);
}

TEST_CASE("segment cost examples") {
  CHECK(segment_cost({3, 0.0, 0.0}, NegativeBinomialLoss{1.0}) == 0.0);
  CHECK(segment_cost({4, 0.0, 0.0}, PoissonLoss{}) == 0.0);
  CHECK_THAT(segment_cost({2, 2.0, 2.0}, PoissonLoss{}), WithinAbs(2.0, 1e-15));
  const std::vector<double> pair{1.0, 1.0};
  CHECK_THAT(segment_cost({2, 2.0, 2.0}, PoissonLoss{}),
             WithinRel(static_cast<double>(oracle::segment_cost(Model::Poisson, 0, pair)), 1e-12));
  CHECK_THAT(segment_cost({2, 4.0, 10.0}, GaussianMeanLoss{}), WithinAbs(1.0, 1e-15));
  // (1, 3): ½((1 − 2)² + (3 − 2)²) = 1, pointwise.
  CHECK_THAT(0.5 * 1.0 + 0.5 * 1.0, WithinAbs(segment_cost({2, 4.0, 10.0}, GaussianMeanLoss{}), 1e-15));
  CHECK_THROWS_AS(segment_cost({0, 0.0, 0.0}, GaussianMeanLoss{}), ArgumentError);
}

TEST_CASE("closed-form segment costs match numerical minimization") {
  std::mt19937_64 rng(11);
  for (const auto& f : kFamilies) {
    for (int rep = 0; rep < 40; ++rep) {
      const auto y = random_obs(f, rng, 1 + rep % 17);
      const double closed = segment_cost(stats_of(y), f);
      const auto numeric =
          static_cast<double>(oracle::segment_cost(model_of(f), family_phi(f), y));
      CHECK_THAT(closed, WithinAbs(numeric, 1e-9 * (1.0 + std::abs(numeric))));
    }
  }
}

TEST_CASE("property: pointwise losses are convex in the parameter") {
  std::mt19937_64 rng(1);
  for (const auto& f : kFamilies) {
    const auto y = random_obs(f, rng, 50);
    for (double obs : y) {
      double lo = random_theta(f, rng), hi = random_theta(f, rng);
      if (lo > hi)
        std::swap(lo, hi);
      const int grid = 200;
      const double h = (hi - lo) / grid;
      for (int i = 1; i < grid; ++i) {
        const double x = lo + i * h;
        const double a = pointwise_loss(obs, x - h, f), b = pointwise_loss(obs, x, f),
                     c = pointwise_loss(obs, x + h, f);
        const double scale = std::abs(a) + std::abs(b) + std::abs(c);
        REQUIRE(a - 2 * b + c >= -1e-8 * scale);
      }
    }
  }
}

TEST_CASE("property: the segment cost is a minimum over parameters") {
  std::mt19937_64 rng(2);
  for (const auto& f : kFamilies) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto y = random_obs(f, rng, 1 + rep);
      const double cost = segment_cost(stats_of(y), f);
      for (int i = 0; i < 100; ++i) {
        const double theta = random_theta(f, rng);
        double total = 0;
        for (double v : y)
          total += pointwise_loss(v, theta, f);
        REQUIRE(cost <= total + 1e-10 * (1.0 + std::abs(total)));
      }
    }
  }
}

TEST_CASE("property: statistics are additive") {
  std::mt19937_64 rng(3);
  for (const auto& f : kFamilies) {
    for (int rep = 0; rep < 50; ++rep) {
      const auto y = random_obs(f, rng, 30);
      const std::size_t cut = 1 + rep % 28;
      SegmentStats left, right;
      for (std::size_t i = 0; i < cut; ++i)
        left.add(y[i]);
      for (std::size_t i = cut; i < y.size(); ++i)
        right.add(y[i]);
      const double combined = segment_cost(left + right, f);
      const double single = segment_cost(stats_of(y), f);
      REQUIRE_THAT(combined, WithinRel(single, 1e-10));
    }
  }
  SegmentStats empty;
  CHECK(empty.count == 0);
  CHECK(empty.sum == 0.0);
  CHECK(empty.sumsq == 0.0);
}

TEST_CASE("sublevel interval of constants") {
  for (const auto& f : kFamilies) {
    CHECK(sublevel_interval(0, 0, 1, f).empty());
    const auto all = sublevel_interval(0, 0, -1, f);
    REQUIRE(all.size() == 1);
    CHECK(all[0] == parameter_domain(f).whole());
  }
}

TEST_CASE("sublevel interval matches a grid sign scan (negative binomial)") {
  // g(θ) = −log θ − 2 log(1 − θ) + d with minimum −0.5 at θ = 1/3.
  const double gmin = std::log(3.0) + 2.0 * std::log(1.5);
  const double d = -0.5 - gmin;
  const auto s = sublevel_interval(1, 2, d, NegativeBinomialLoss{1.0});
  REQUIRE(s.size() == 1);
  const auto ref = oracle::grid_sublevel(
      [&](long double th) {
        if (th <= 0 || th >= 1)
          return std::numeric_limits<long double>::infinity();
        return -std::log(th) - 2 * std::log1p(-th) + d;
      },
      0, 1);
  REQUIRE(!ref.empty);
  CHECK(ref.sign_changes == 2);
  CHECK_THAT(s[0].lo, WithinAbs(static_cast<double>(ref.left), 1e-9));
  CHECK_THAT(s[0].hi, WithinAbs(static_cast<double>(ref.right), 1e-9));
  // Rounded outward.
  CHECK(s[0].lo <= static_cast<double>(ref.left));
  CHECK(s[0].hi >= static_cast<double>(ref.right));
}

TEST_CASE("property: sublevel sets are single intervals matching the grid") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& f : kFamilies) {
    const Model m = model_of(f);
    const Domain dom = parameter_domain(f);
    for (int rep = 0; rep < 25; ++rep) {
      const double a = 0.5 + 20 * u(rng);
      const double b = m == Model::GaussianMean ? -30 + 60 * u(rng) : 0.5 + 20 * u(rng);
      const double d = -40 + 50 * u(rng);
            auto gfun = [&](long double x) -> long double {
        const long double inf = std::numeric_limits<long double>::infinity();
        switch (m) {
        case Model::NegativeBinomial:
          return x <= 0 || x >= 1 ? inf : -a * std::log(x) - b * std::log1p(-x) + d;
        case Model::Poisson:
          return x <= 0 ? inf : a * x - b * std::log(x) + d;
        case Model::GaussianMean:
          return a * x * x / 2 - b * x + d;
        case Model::GaussianVariance:
          return x <= 0 ? inf : -a * std::log(x) / 2 + b * x / 2 + d;
        }
        return inf;
      };
      const auto s = sublevel_interval(a, b, d, f);
      // Scan window: the domain if bounded, else a range holding the set.
      long double lo = dom.lo, hi = dom.hi;
      if (!std::isfinite(dom.lo))
        lo = -2000;
      if (!std::isfinite(dom.hi))
        hi = 2000;
      const auto ref = oracle::grid_sublevel(gfun, lo, hi, 200'000);
      REQUIRE(ref.sign_changes <= 2);
      REQUIRE(s.size() <= 1);
      if (ref.empty) {
        // Either empty or a sliver around a minimum within rounding of zero.
        if (!s.empty())
          CHECK(s[0].hi - s[0].lo < 1e-4);
        continue;
      }
      REQUIRE(s.size() == 1);
      const double tol = 1e-8 * std::max(1.0L, std::abs(ref.right));
      CHECK(s[0].lo <= static_cast<double>(ref.left) + tol);
      CHECK(s[0].hi >= static_cast<double>(ref.right) - tol);
      CHECK_THAT(s[0].lo, WithinAbs(static_cast<double>(ref.left), 1e-7 * std::max(1.0L, std::abs(ref.left))));
      if (ref.right < hi)
        CHECK_THAT(s[0].hi, WithinAbs(static_cast<double>(ref.right), 1e-7 * std::max(1.0L, std::abs(ref.right))));
    }
  }
}

TEST_CASE("model names round trip") {
  for (Model m : {Model::Poisson, Model::GaussianMean, Model::NegativeBinomial,
                  Model::GaussianVariance})
    CHECK(parse_model(model_name(m)) == m);
  CHECK(static_cast<int>(Model::Poisson) == 1);
  CHECK(static_cast<int>(Model::GaussianVariance) == 4);
  CHECK(!parse_model("binomial"));
}
