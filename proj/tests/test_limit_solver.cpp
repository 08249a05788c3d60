#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ealign/limit_solver.hpp"
#include "ealign/rng.hpp"

using namespace ealign;

namespace {

Model make(int dim, InteractionKernel k, CommWeight c) {
  Model m;
  m.domain = Domain::euclidean(dim);
  m.kernel = k;
  m.comm = c;
  return m;
}

std::vector<double> randn(Rng& rng, std::size_t n, double s = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = s * rng.normal();
  return v;
}

// Dense solve of (gamma + phibar_i) v_i - (1/N) sum_j phi_ij v_j = -f_i.
std::vector<double> dense_solve(const Model& m, double gamma, const std::vector<double>& x) {
  const int dim = m.domain.dim;
  const std::size_t n = x.size() / dim;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd b(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    Vec f{};
    double pbar = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const Vec r = load(x, i, dim) - load(x, j, dim);
      const double ph = phi_eval(m.comm, m.domain, r);
      pbar += ph / n;
      A(i, j) -= ph / n;
      if (i != j) f = f + (1.0 / n) * grad_W(m.kernel, m.domain, r);
    }
    A(i, i) += gamma + pbar;
    for (int a = 0; a < dim; ++a) b(i, a) = -f[a];
  }
  const Eigen::MatrixXd v = A.partialPivLu().solve(b);
  std::vector<double> out(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < dim; ++a) out[i * dim + a] = v(i, a);
  return out;
}

SimConfig limit_cfg(const Model& m, double gamma, std::size_t n) {
  SimConfig cfg;
  cfg.model = m;
  cfg.gamma = gamma;
  cfg.n = n;
  cfg.t_final = 1.0;
  cfg.dt = 1e-2;
  return cfg;
}

}  // namespace

TEST_CASE("two particles with constant phi: closed form") {
  const double gamma = 3.0, c = 0.8;
  const auto m = make(1, InteractionKernel::gaussian(), CommWeight::constant(c));
  const std::vector<double> x{0.2, -0.5};
  const double g = grad_W(m.kernel, m.domain, {0.7, 0, 0})[0];
  const auto sol = solve_velocity(m, gamma, x);
  // force_i = g/2, and the pair relation gives v_1 = -g/(2(gamma + c))
  CHECK(sol.velocities[0] == doctest::Approx(-g / (2 * (gamma + c))).epsilon(1e-12));
  CHECK(sol.velocities[1] == doctest::Approx(g / (2 * (gamma + c))).epsilon(1e-12));
  CHECK(sol.residual <= 1e-12);
}

TEST_CASE("zero forcing and decoupled cases") {
  Rng rng(2);
  const auto x = randn(rng, 20);
  const auto z = make(2, InteractionKernel::zero(), CommWeight::cucker_smale(1, 1));
  for (double v : solve_velocity(z, 2.0, x).velocities) CHECK(v == 0.0);

  const auto d = make(2, InteractionKernel::gaussian(), CommWeight::constant(0.0));
  const auto sol = solve_velocity(d, 2.0, x);
  const auto s = pair_sums(d, x, {});
  for (std::size_t k = 0; k < x.size(); ++k)
    CHECK(sol.velocities[k] == doctest::Approx(-s.force[k] / 2.0).epsilon(1e-13));
}

TEST_CASE("agrees with a dense linear solve") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 1 + trial % 3;
    const std::size_t n = 5 + rng.next() % 60;
    const auto m = make(dim, InteractionKernel::gaussian(-1.0, 0.8), CommWeight::cucker_smale(1.3, 0.5));
    const auto x = randn(rng, n * dim);
    const double gamma = 1.3 * (1.5 + rng.uniform());
    const auto sol = solve_velocity(m, gamma, x);
    const auto ref = dense_solve(m, gamma, x);
    for (std::size_t k = 0; k < ref.size(); ++k)
      CHECK(std::abs(sol.velocities[k] - ref[k]) <= 10 * 1e-12);
  }
}

TEST_CASE("iterates contract by at least ||phi||/gamma") {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = make(2, InteractionKernel::gaussian(), CommWeight::cucker_smale(1.0, 1.0));
    const auto x = randn(rng, 2 * 30);
    SolveOptions opts;
    opts.record_increments = true;
    const auto sol = solve_velocity(m, 2.0, x, opts);
    for (std::size_t k = 1; k < sol.increments.size(); ++k)
      if (sol.increments[k - 1] > 1e-13)
        CHECK(sol.increments[k] <= (0.5 + 1e-10) * sol.increments[k - 1]);
  }
}

TEST_CASE("solver errors") {
  const auto m = make(1, InteractionKernel::gaussian(), CommWeight::constant(2.0));
  const std::vector<double> x{0.0, 1.0, 2.0};
  CHECK_THROWS_AS(solve_velocity(m, 2.0, x), ContractionError);
  CHECK_THROWS_AS(solve_velocity(m, 1.0, x), ContractionError);
  SolveOptions opts;
  opts.max_iterations = 2;
  const auto hard = make(1, InteractionKernel::gaussian(), CommWeight::cucker_smale(1.9, 0.5));
  try {
    solve_velocity(hard, 2.0, x, opts);
    FAIL("expected iteration limit");
  } catch (const IterationLimitError& e) {
    CHECK(e.last_residual > 1e-12);
  }
  CHECK_THROWS_AS(solve_velocity(hard, 2.0, std::vector<double>{}), ConfigError);
}

TEST_CASE("warm start and serial/parallel agreement") {
  Rng rng(3);
  const auto m = make(2, InteractionKernel::gaussian(), CommWeight::cucker_smale(1, 1));
  const auto x = randn(rng, 2 * 50);
  SolveOptions s, p;
  s.exec = Exec::serial;
  const auto a = solve_velocity(m, 4.0, x, s);
  const auto b = solve_velocity(m, 4.0, x, p);
  CHECK(a.velocities == b.velocities);
  const auto w = solve_velocity(m, 4.0, x, p, a.velocities);
  CHECK(w.iterations <= 1);
}

TEST_CASE("simulate_limit: stationary single particle, attraction, symmetry") {
  const auto m1 = make(1, InteractionKernel::gaussian(), CommWeight::constant(0.0));
  const auto t1 = simulate_limit(limit_cfg(m1, 1.0, 1), std::vector<double>{0.3});
  for (const auto& s : t1.snapshots) {
    CHECK(s.positions[0] == 0.3);
    CHECK(s.velocities[0] == 0.0);
  }

  const auto att = make(1, InteractionKernel::gaussian(-1.0, 1.0), CommWeight::constant(0.0));
  const auto t2 = simulate_limit(limit_cfg(att, 1.0, 2), std::vector<double>{-0.6, 0.6});
  double gap = 1e300;
  for (const auto& s : t2.snapshots) {
    const double g = s.positions[1] - s.positions[0];
    CHECK(g < gap);
    CHECK(g > 0.0);
    CHECK(s.positions[0] == -s.positions[1]);
    CHECK(s.residual <= 1e-12);
    gap = g;
  }
  CHECK_THROWS_AS(simulate_limit(limit_cfg(att, 1.0, 3), std::vector<double>{0.0, 1.0}),
                  ConfigError);
}

TEST_CASE("continuum velocity reproduces particle velocities") {
  Rng rng(7);
  const auto m = make(2, InteractionKernel::gaussian(), CommWeight::cucker_smale(1, 1));
  const auto x = randn(rng, 2 * 15);
  const auto v = solve_velocity(m, 3.0, x).velocities;
  const ContinuumVelocity u(m, 3.0, x, v);
  for (std::size_t i = 0; i < 15; ++i) {
    const Vec ui = u(load(x, i, 2));
    CHECK(ui[0] == doctest::Approx(v[i * 2]).epsilon(1e-11));
    CHECK(ui[1] == doctest::Approx(v[i * 2 + 1]).epsilon(1e-11));
  }

  // 1-D Coulomb: continuous between particles and exact at them
  const auto c = make(1, InteractionKernel::coulomb(1), CommWeight::cucker_smale(1, 1));
  const std::vector<double> xc{-0.4, 0.1, 0.5, 0.9};
  const auto vc = solve_velocity(c, 3.0, xc).velocities;
  const ContinuumVelocity uc(c, 3.0, xc, vc);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(uc({xc[i], 0, 0})[0] == doctest::Approx(vc[i]).epsilon(1e-11));
  CHECK(std::abs(uc({0.3 + 1e-9, 0, 0})[0] - uc({0.3 - 1e-9, 0, 0})[0]) < 1e-7);
}

TEST_CASE("velocity bounds report") {
  const auto z = make(1, InteractionKernel::zero(), CommWeight::cucker_smale(1, 1));
  const auto tz = simulate_limit(limit_cfg(z, 3.0, 4), std::vector<double>{0, 0.3, 0.6, 1.0});
  const auto rz = velocity_bounds_report(tz, tz.config);
  CHECK(rz.sup_u == 0.0);
  CHECK(rz.bound_u == 0.0);
  CHECK(rz.holds());

  Rng rng(10);
  const auto m = make(1, InteractionKernel::gaussian(), CommWeight::cucker_smale(1, 1));
  const auto cfg = limit_cfg(m, 10.0, 64);
  const auto t = simulate_limit(cfg, randn(rng, 64));
  const auto r = velocity_bounds_report(t, cfg);
  CHECK(r.holds());
  CHECK(r.sup_u <= r.bound_u);
  CHECK(r.sup_grad_u <= *r.bound_grad_u);
  CHECK(r.sup_dt_u <= *r.bound_dt_u);
  for (std::size_t k = 0; k < r.snapshot_sup_u.size(); ++k)
    CHECK(r.snapshot_sup_u[k] <= r.snapshot_bound_u[k]);
  CHECK_FALSE(r.near_threshold);
  CHECK(r.to_json().find("gamma_threshold") != std::string::npos);

  const auto cfg2 = limit_cfg(m, 1.5, 8);
  const auto t2 = simulate_limit(cfg2, randn(rng, 8));
  CHECK(velocity_bounds_report(t2, cfg2).near_threshold);

  const auto c = make(1, InteractionKernel::coulomb(1), CommWeight::cucker_smale(1, 1));
  const auto cc = limit_cfg(c, 10.0, 16);
  const auto tc = simulate_limit(cc, randn(rng, 16));
  const auto rc = velocity_bounds_report(tc, cc);
  CHECK_FALSE(rc.bound_grad_u.has_value());
  CHECK(rc.sup_u <= rc.bound_u);
}
