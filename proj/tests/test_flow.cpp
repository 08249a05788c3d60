#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ealign/flow.hpp"
#include "ealign/rng.hpp"

using namespace ealign;

namespace {

VelocityField zero_field(int dim) {
  return VelocityField(dim, [](const Vec&, double) { return Vec{}; }, 0.0);
}
VelocityField contraction(int dim) {
  return VelocityField(dim, [](const Vec& x, double) { return -x; }, 1.0);
}
VelocityField translation(int dim, Vec c) {
  return VelocityField(dim, [c](const Vec&, double) { return c; }, 0.0);
}
// smooth, time-dependent, non-linear
VelocityField wavy(Rng& rng) {
  const double a = rng.uniform(0.5, 1.5), b = rng.uniform(0.5, 2.0), c = rng.uniform(-1, 1);
  auto eval = [=](const Vec& x, double t) {
    return Vec{a * std::sin(b * x[1] + t), c * std::cos(b * x[0]) - 0.3 * x[1], 0};
  };
  return VelocityField::estimated(2, eval, std::vector<double>{-2, -2, 2, 2}, 0.0, 1.0);
}

EmpiricalMeasure cloud(Rng& rng, std::size_t m, int dim) {
  std::vector<double> p(m * dim);
  for (auto& x : p) x = rng.normal();
  return EmpiricalMeasure::uniform(std::move(p), dim);
}

}  // namespace

TEST_CASE("flow map closed forms") {
  CHECK(flow_map(zero_field(2), {0.3, -0.4, 0}, 1.0) == Vec{0.3, -0.4, 0});
  CHECK(flow_map(contraction(1), {1, 0, 0}, 1.0)[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(std::abs(flow_map(contraction(1), {1, 0, 0}, 1.0)[0] - 0.36788) <= 1e-5);
  const Vec y = flow_map(translation(2, {0.5, -1, 0}), {1, 1, 0}, 2.0);
  CHECK(y[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("flow map is reversible and composes") {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto f = wavy(rng);
    const Vec x0{rng.normal(), rng.normal(), 0};
    const Vec x1 = flow_map(f, x0, 0.0, 1.0);
    const Vec back = flow_map(f, x1, 1.0, 0.0);
    CHECK(norm(back - x0) <= 1e-8);
    const Vec half = flow_map(f, x0, 0.0, 0.4);
    CHECK(norm(flow_map(f, half, 0.4, 1.0) - x1) <= 1e-8);
  }
  // autonomous composition X(t2; 0, .) = X(t2; t1, X(t1; 0, .))
  const VelocityField rot(2, [](const Vec& x, double) { return Vec{-x[1], x[0] - 0.2 * x[1], 0}; }, 1.2);
  const Vec a = flow_map(rot, {1, 0.5, 0}, 0.0, 1.3);
  const Vec b = flow_map(rot, flow_map(rot, {1, 0.5, 0}, 0.0, 0.6), 0.6, 1.3);
  CHECK(norm(a - b) <= 1e-8);
}

TEST_CASE("divergent flows are reported") {
  const VelocityField blowup(1, [](const Vec& x, double) { return Vec{x[0] * x[0], 0, 0}; }, 1.0);
  CHECK_THROWS_AS(flow_map(blowup, {2, 0, 0}, 1.0), NumericalError);
}

TEST_CASE("pushforward") {
  Rng rng(2);
  const auto mu = cloud(rng, 20, 2);
  const auto same = pushforward(mu, zero_field(2), 1.0);
  CHECK(same.points == mu.points);
  CHECK(same.weights == mu.weights);

  const auto moved = pushforward(mu, translation(2, {1, -2, 0}), 0.5);
  CHECK(moved.weights == mu.weights);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    CHECK(moved.points[2 * i] == doctest::Approx(mu.points[2 * i] + 0.5).epsilon(1e-12));
    CHECK(moved.points[2 * i + 1] == doctest::Approx(mu.points[2 * i + 1] - 1.0).epsilon(1e-12));
  }

  const auto c = pushforward(mu, contraction(2), 1.0);
  for (std::size_t i = 1; i < mu.size(); ++i) {
    const double before = norm(mu.point(i) - mu.point(0));
    const double after = norm(c.point(i) - c.point(0));
    CHECK(after == doctest::Approx(before * std::exp(-1.0)).epsilon(1e-9));
  }
}

TEST_CASE("Lipschitz flow check") {
  Rng rng(3);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int k = 0; k < 100; ++k) {
    const Vec a{rng.normal(), rng.normal(), 0};
    pairs.emplace_back(a, a + Vec{0.1 * rng.normal(), 0.1 * rng.normal(), 0});
  }
  const auto z = lipschitz_flow_check(zero_field(2), pairs, 1.0);
  CHECK(z.passed());
  CHECK(z.max_ratio == doctest::Approx(1.0).epsilon(1e-12));

  const auto c = lipschitz_flow_check(contraction(2), pairs, 1.0);
  CHECK(c.passed());
  CHECK(c.max_ratio == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));

  for (int t = 0; t < 3; ++t) {
    const auto r = lipschitz_flow_check(wavy(rng), pairs, 1.0);
    CHECK(r.passed());
    CHECK(r.ratios.size() == 100);
  }
  // an underestimated gradient bound must be caught
  const VelocityField expand(1, [](const Vec& x, double) { return x; }, 0.5);
  std::vector<std::pair<Vec, Vec>> line{{Vec{0, 0, 0}, Vec{1, 0, 0}}};
  CHECK_FALSE(lipschitz_flow_check(expand, line, 1.0).passed());
}

TEST_CASE("grad_sup estimate dominates difference quotients") {
  const auto f = VelocityField::estimated(
      1, [](const Vec& x, double) { return Vec{std::sin(3 * x[0]), 0, 0}; },
      std::vector<double>{-1, 1}, 0.0, 1.0);
  CHECK(f.grad_sup() <= 3.0 + 1e-6);
  CHECK(f.grad_sup() >= 2.9);
}

TEST_CASE("stability inequality") {
  Rng rng(4);
  const auto rho0 = cloud(rng, 12, 1);
  const auto f = contraction(1);
  const Domain d = Domain::euclidean(1);

  // u_bar = u and coincident data: distance stays at integrator level
  std::vector<MeasureSnapshot> same;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    const auto m = pushforward(rho0, f, t);
    std::vector<double> v(m.points.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -m.points[i];
    same.push_back({t, m, v});
  }
  const auto r0 = stability_inequality_check(same, f, 2.0, 1.0, rho0, d);
  CHECK(r0.max_distance <= 1e-8);
  CHECK(r0.holds);

  // different initial data, same field: d(t) = e^{-t} d(0), C = 1 suffices
  const auto other = cloud(rng, 12, 1);
  std::vector<MeasureSnapshot> moved;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    const auto m = pushforward(other, f, t);
    std::vector<double> v(m.points.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -m.points[i];
    moved.push_back({t, m, v});
  }
  for (double p : {1.0, 1.5, 2.0}) {
    const auto r = stability_inequality_check(moved, f, p, 1.0, rho0, d);
    CHECK(r.holds);
    CHECK(r.C_min_feasible <= 1.0 + 1e-9);
    CHECK(r.lhs.back() == doctest::Approx(std::exp(-1.0) * r.lhs.front()).epsilon(1e-8));
  }
  CHECK(moved.size() == 11);
  CHECK(stability_inequality_check(moved, f, 2.0, 1.0, rho0, d).to_json().find("C_min_feasible") !=
        std::string::npos);
  CHECK_THROWS_AS(stability_inequality_check(moved, f, 3.0, 1.0, rho0, d), ConfigError);
  CHECK_THROWS_AS(stability_inequality_check(moved, f, 0.5, 1.0, rho0, d), ConfigError);
}
