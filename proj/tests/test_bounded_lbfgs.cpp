#include <cmath>
#include <limits>

#include "doctest.h"

#include "beliefdyn/bounded_lbfgs.hpp"
#include "beliefdyn/errors.hpp"

using namespace beliefdyn;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

double rosenbrock(std::span<const double> x, std::span<double> g) {
  const double a = 1.0 - x[0];
  const double b = x[1] - x[0] * x[0];
  g[0] = -2.0 * a - 400.0 * x[0] * b;
  g[1] = 200.0 * b;
  return a * a + 100.0 * b * b;
}
}  // namespace

TEST_CASE("unconstrained Rosenbrock") {
  const std::vector<double> lo{-kInf, -kInf}, hi{kInf, kInf};
  const auto r = minimize_bounded(rosenbrock, {-1.2, 1.0}, lo, hi, {});
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.stop == LbfgsStop::kGradientTolerance);
  CHECK(r.projected_gradient_norm <= 1e-10);
}

TEST_CASE("Rosenbrock with the minimum cut off by a bound") {
  // min over x0 <= 0.5: the constrained optimum sits on x0 = 0.5, x1 = 0.25
  const std::vector<double> lo{-2.0, -2.0}, hi{0.5, 2.0};
  const auto r = minimize_bounded(rosenbrock, {-1.2, 1.0}, lo, hi, {});
  CHECK(r.x[0] == 0.5);
  CHECK(r.x[1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(r.projected_gradient_norm <= 1e-9);
}

TEST_CASE("separable quadratic pinned at two bounds") {
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * (x[0] - 3.0);
    g[1] = 2.0 * (x[1] + 2.0);
    g[2] = 2.0 * (x[2] - 0.25);
    return (x[0] - 3.0) * (x[0] - 3.0) + (x[1] + 2.0) * (x[1] + 2.0) +
           (x[2] - 0.25) * (x[2] - 0.25);
  };
  const std::vector<double> lo{0.0, -1.0, 0.0}, hi{1.0, 1.0, 1.0};
  const auto r = minimize_bounded(f, {0.5, 0.5, 0.9}, lo, hi, {});
  CHECK(r.x[0] == 1.0);
  CHECK(r.x[1] == -1.0);
  CHECK(r.x[2] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.stop == LbfgsStop::kGradientTolerance);
}

TEST_CASE("start outside the box is projected") {
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  const std::vector<double> lo{2.0}, hi{5.0};
  const auto r = minimize_bounded(f, {-10.0}, lo, hi, {});
  CHECK(r.x[0] == 2.0);
  CHECK(r.iterations == 0);
}

TEST_CASE("iteration cap and non-finite objective") {
  const std::vector<double> lo{-kInf, -kInf}, hi{kInf, kInf};
  LbfgsOptions opts;
  opts.max_iterations = 3;
  const auto capped = minimize_bounded(rosenbrock, {-1.2, 1.0}, lo, hi, opts);
  CHECK(capped.stop == LbfgsStop::kMaxIterations);
  CHECK(capped.iterations == 3);

  auto nan_fn = [](std::span<const double>, std::span<double> g) {
    g[0] = NAN;
    return NAN;
  };
  const std::vector<double> l1{-1.0}, h1{1.0};
  CHECK(minimize_bounded(nan_fn, {0.0}, l1, h1, {}).stop == LbfgsStop::kNonFinite);
}

TEST_CASE("bad bounds are rejected") {
  const std::vector<double> lo{1.0}, hi{0.0};
  CHECK_THROWS_AS(minimize_bounded(rosenbrock, {0.5}, lo, hi, {}), ValidationError);
  const std::vector<double> lo2{0.0, 0.0}, hi2{1.0};
  CHECK_THROWS_AS(minimize_bounded(rosenbrock, {0.5, 0.5}, lo2, hi2, {}), ValidationError);
}
