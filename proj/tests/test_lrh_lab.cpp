#include <cmath>
#include <random>

#include "doctest.h"

#include "beliefdyn/errors.hpp"
#include "beliefdyn/lrh_lab.hpp"

using namespace beliefdyn;
using namespace beliefdyn::lrh;

namespace {

std::vector<double> magnitude_sweep(double lo, double hi, int steps) {
  std::vector<double> m;
  for (int i = 0; i < steps; ++i) m.push_back(lo + (hi - lo) * i / (steps - 1));
  return m;
}

Vector random_betas(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector b(n);
  for (auto& x : b) x = g(rng);
  return b;
}

}  // namespace

TEST_CASE("make_concept_space") {
  SUBCASE("exact mode gives an orthonormal basis") {
    const auto space = make_concept_space(8, 8, SpaceMode::kExactOrthogonal, 1);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) {
        const double g = dot(space.direction(i), space.direction(j));
        if (i == j) CHECK(g == doctest::Approx(1.0).epsilon(1e-14));
        else CHECK(std::abs(g) < 1e-14);
      }
  }
  SUBCASE("random mode in high dimension is near-orthogonal") {
    const auto space = make_concept_space(4096, 10, SpaceMode::kRandomNearOrthogonal, 7);
    CHECK(space.max_abs_cosine() < 0.1);
    CHECK(space.max_abs_cosine() > 0.0);
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(squared_norm(space.direction(i)) == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("more concepts than dimensions") {
    CHECK_THROWS_AS(make_concept_space(2, 3, SpaceMode::kExactOrthogonal, 0), ValidationError);
  }
  SUBCASE("same seed, same space") {
    const auto a = make_concept_space(16, 4, SpaceMode::kExactOrthogonal, 3);
    const auto b = make_concept_space(16, 4, SpaceMode::kExactOrthogonal, 3);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a.direction(i) == b.direction(i));
  }
  CHECK_THROWS_AS(ConceptSpace({{1.0, 0.0}, {1.0, 1.0}}, 0.1), ValidationError);
  CHECK_THROWS_AS(ConceptSpace({{1.0, 0.0}, {0.0}}, 0.1), ValidationError);
  CHECK_THROWS_AS(ConceptSpace({{0.0, 0.0}}, 0.1), ValidationError);
  CHECK_THROWS_AS(ConceptSpace({}, 0.1), ValidationError);
}

TEST_CASE("embed") {
  const ConceptSpace plane({{1.0, 0.0}, {0.0, 1.0}}, 0.0);
  CHECK(embed(Vector{0.0, 0.0}, plane).vector == Vector{0.0, 0.0});
  CHECK(embed(Vector{1.0, 0.0}, plane).vector == plane.direction(0));
  CHECK(squared_norm(embed(Vector{2.0, -1.0}, plane).vector) == 5.0);
  CHECK_THROWS_AS(embed(Vector{1.0}, plane), ValidationError);

  const auto space = make_concept_space(32, 5, SpaceMode::kRandomNearOrthogonal, 2, 0.9);
  const Vector betas{0.5, -1.0, 2.0, 0.0, 3.0};
  const auto rep = embed(betas, space);
  for (std::size_t k = 0; k < 32; ++k) {
    double expected = 0.0;
    for (std::size_t i = 0; i < 5; ++i) expected += betas[i] * space.direction(i)[k];
    CHECK(rep.vector[k] == doctest::Approx(expected).epsilon(1e-14).scale(1.0));
  }
}

TEST_CASE("steer") {
  const auto space = make_concept_space(16, 4, SpaceMode::kExactOrthogonal, 11);
  std::mt19937_64 rng(5);
  const auto rep = embed(random_betas(rng, 4), space);

  CHECK(steer(rep, space, 2, 0.0).vector == rep.vector);

  // halves are exact in binary, so the two routes round identically
  const auto once = steer(rep, space, 1, 1.5);
  const auto twice = steer(steer(rep, space, 1, 0.75), space, 1, 0.75);
  for (std::size_t k = 0; k < 16; ++k)
    CHECK(twice.vector[k] == doctest::Approx(once.vector[k]).epsilon(1e-15).scale(1.0));

  const auto ab = steer(steer(rep, space, 0, 0.7), space, 3, -1.1);
  const auto ba = steer(steer(rep, space, 3, -1.1), space, 0, 0.7);
  for (std::size_t k = 0; k < 16; ++k)
    CHECK(ab.vector[k] == doctest::Approx(ba.vector[k]).epsilon(1e-15).scale(1.0));
  CHECK(ab.betas == ba.betas);

  Vector betas(4, 0.0);
  betas[1] = 0.3;
  const auto moved = steer(embed(betas, space), space, 1, 1.2);
  CHECK(recover_coefficient(moved, space, 1) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(moved.betas[1] == doctest::Approx(1.5));
  CHECK_THROWS_AS(steer(rep, space, 4, 1.0), ValidationError);
}

TEST_CASE("readout_log_odds") {
  const ConceptSpace plane({{1.0, 0.0}, {0.0, 1.0}}, 0.0);
  const Readout r0(plane, 0, 1.0, 0.0);
  CHECK(readout_log_odds(embed(Vector{0.0, 0.0}, plane), r0, plane) == 0.0);
  const Readout r1(plane, 0, 1.0, -1.0);
  CHECK(readout_log_odds(embed(Vector{2.0, 5.0}, plane), r1, plane) == 1.0);
  CHECK(r1.a_coeff() == 1.0);

  SUBCASE("interference bound in a near-orthogonal space") {
    const auto space = make_concept_space(256, 12, SpaceMode::kRandomNearOrthogonal, 19);
    std::mt19937_64 rng(3);
    const Readout r(space, 4, 1.7, 0.25);
    for (int t = 0; t < 50; ++t) {
      const auto betas = random_betas(rng, 12);
      const double got = readout_log_odds(embed(betas, space), r, space);
      const double ideal = r.weight_scale() * r.a_coeff() * betas[4] + r.bias();
      double bound = 0.0;
      for (std::size_t j = 0; j < 12; ++j)
        if (j != 4) bound += std::abs(betas[j]) * std::abs(dot(space.direction(4), space.direction(j)));
      CHECK(std::abs(got - ideal) <= r.weight_scale() * bound + 1e-12);
    }
  }

  const ConceptSpace other({{2.0, 0.0}, {0.0, 1.0}}, 0.0);
  CHECK_THROWS_AS(r1.check_against(other), ValidationError);
  CHECK_THROWS_AS(Readout(plane, 2, 1.0, 0.0), ValidationError);
}

TEST_CASE("verify_steering_shift") {
  const auto sweep = magnitude_sweep(-10.0, 10.0, 201);
  SUBCASE("unit direction") {
    const ConceptSpace plane({{1.0, 0.0}, {0.0, 1.0}}, 0.0);
    const auto line = verify_steering_shift(plane, Readout(plane, 0, 1.0, 0.0),
                                            embed(Vector{0.4, -2.0}, plane), sweep);
    CHECK(line.slope == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(line.intercept == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(line.max_residual < 1e-10);
  }
  SUBCASE("direction of norm 2") {
    const ConceptSpace scaled({{2.0, 0.0}, {0.0, 1.0}}, 0.0);
    const auto line = verify_steering_shift(scaled, Readout(scaled, 0, 1.0, 0.0),
                                            embed(Vector{1.0, 1.0}, scaled), sweep);
    CHECK(line.slope == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(line.max_residual < 1e-10);
  }
  SUBCASE("random space, shift is still exact") {
    const auto space = make_concept_space(4096, 10, SpaceMode::kRandomNearOrthogonal, 7);
    const Readout r(space, 3, 0.9, -0.5);
    std::mt19937_64 rng(1);
    const auto line = verify_steering_shift(space, r, embed(random_betas(rng, 10), space), sweep);
    const double expected = 0.9 * squared_norm(space.direction(3));
    CHECK(std::abs(line.slope - expected) <= 0.01 * expected);
    CHECK(line.max_residual < 1e-10);
  }
  SUBCASE("identical shift across inputs") {
    const auto space = make_concept_space(64, 8, SpaceMode::kExactOrthogonal, 23);
    const Readout r(space, 5, 2.5, 0.1);
    std::mt19937_64 rng(77);
    const double expected = 2.5 * squared_norm(space.direction(5));
    for (int t = 0; t < 100; ++t) {
      const auto line = verify_steering_shift(space, r, embed(random_betas(rng, 8), space), sweep);
      CHECK(line.slope == doctest::Approx(expected).epsilon(1e-12));
      CHECK(line.max_residual < 1e-10);
    }
  }
}

TEST_CASE("caa_estimate") {
  const Vector mu{0.5, -1.0, 2.0}, delta{0.25, 0.125, -3.0};
  Vector shifted(3);
  for (int k = 0; k < 3; ++k) shifted[k] = mu[k] + delta[k];
  const std::vector<Vector> pos(5, shifted), neg(7, mu);
  CHECK(caa_estimate(pos, neg) == delta);
  CHECK(caa_estimate(neg, neg) == Vector{0.0, 0.0, 0.0});
  CHECK_THROWS_AS(caa_estimate(std::vector<Vector>{}, neg), ValidationError);
  CHECK_THROWS_AS(caa_estimate(pos, std::vector<Vector>{{1.0}}), ValidationError);

  const auto space = make_concept_space(64, 1, SpaceMode::kExactOrthogonal, 31);
  const auto& d = space.direction(0);
  const auto estimate = caa_estimate_gaussian(d, 5000, 1.0, 8);
  Vector twice(d);
  for (auto& x : twice) x *= 2.0;
  CHECK(cosine_similarity(estimate, twice) >= 0.99);
  CHECK(caa_estimate_gaussian(d, 5000, 1.0, 8) == estimate);
}
