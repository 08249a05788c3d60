// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "ealign/flow.hpp"
#include "ealign/harness.hpp"
#include "ealign/io.hpp"
#include "ealign/rng.hpp"
#include "ealign/transport.hpp"

using namespace ealign;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SimConfig gaussian_cs(std::size_t n, double gamma) {
  SimConfig cfg;
  cfg.model.domain = Domain::euclidean(1);
  cfg.model.kernel = InteractionKernel::gaussian();
  cfg.model.comm = CommWeight::cucker_smale(1.0, 1.0);
  cfg.n = n;
  cfg.gamma = gamma;
  cfg.t_final = 1.0;
  cfg.seed = 2024;
  return cfg;
}

StudySpec rate_study(KernelFamily family, std::size_t n) {
  StudySpec s;
  s.base = gaussian_cs(n, 10.0);
  if (family == KernelFamily::coulomb_1d) s.base.model.kernel = InteractionKernel::coulomb(1);
  s.base.dt = 1e-3;
  s.density.kind = DensityKind::two_cluster;
  s.epsilons = {0.2, 0.1, 0.05, 0.025, 0.0125};
  s.p = 2.0;
  s.svg = false;
  s.entropy = false;
  s.config_text = "acceptance:" + to_string(family) + ":" + std::to_string(n);
  return s;
}

double slope(const RateReport& r, const std::string& name) {
  const auto& f = r.slopes.at(name);
  return f.exact ? std::numeric_limits<double>::infinity() : f.slope;
}

const fs::path kOut = fs::temp_directory_path() / "ealign_acceptance";

Outcome energy_identity() {
  auto cfg = gaussian_cs(64, 5.0);
  cfg.epsilon = 0.1;
  cfg.dt = 1e-4;
  cfg.scheme = Scheme::imex_exact_damping;
  const auto init = well_prepared_init(DensitySpec{}, cfg.n, cfg.seed, cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const double coarse = max_of(energy_balance_residual(simulate(cfg, init.eps_state)));
  const double elapsed = seconds_since(t0);
  cfg.dt = 5e-5;
  const double fine = max_of(energy_balance_residual(simulate(cfg, init.eps_state)));
  const double ratio = coarse / fine;
  return {coarse <= 1e-6 && ratio >= 3.5 && ratio <= 4.5 && elapsed <= 30.0,
          fmt("max residual %.3e, halving dt ratio %.3f, %.1f s", coarse, ratio, elapsed)};
}

Outcome alignment_rate(const fs::path& dir) {
  auto s = rate_study(KernelFamily::gaussian, 256);
  s.functionals = {"rel_kinetic_sup", "rel_kinetic_timeint", "wass_sup"};
  s.output_dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = epsilon_sweep(s);
  const double elapsed = seconds_since(t0);
  const double a = slope(r, "combined_sup"), b = slope(r, "combined_timeint");
  return {a >= 0.9 && b >= 1.8 && elapsed <= 600.0,
          fmt("slope sup(R + d2^2) %.3f, slope time-integrated %.3f, %.1f s", a, b, elapsed)};
}

Outcome coulomb_rate() {
  auto s = rate_study(KernelFamily::coulomb_1d, 256);
  s.functionals = {"rel_kinetic_sup", "coulomb_energy_sup"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = epsilon_sweep(s);
  const double elapsed = seconds_since(t0);
  const double c = slope(r, "coulomb_energy_sup"), k = slope(r, "rel_kinetic_sup");
  return {c >= 1.8 && k >= 0.9 && elapsed <= 600.0,
          fmt("slope sup cramer %.3f (needs 1.8), slope sup rel_kinetic %.3f, %.1f s", c, k, elapsed)};
}

Outcome coulomb_identity() {
  SimConfig cfg = gaussian_cs(32, 10.0);
  cfg.model.kernel = InteractionKernel::coulomb(1);
  cfg.epsilon = 0.1;
  cfg.snapshot_every = 1;
  const auto init = well_prepared_init(DensitySpec{}, cfg.n, cfg.seed, cfg);
  auto worst = [&](double dt) {
    cfg.dt = dt;
    return max_of(lemma51_residual(simulate(cfg, init.eps_state),
                                   simulate_limit(cfg, init.limit_positions)));
  };
  const double a = worst(1e-3), b = worst(5e-4);
  return {a / b >= 1.8, fmt("max residual %.3e -> %.3e, ratio %.3f", a, b, a / b)};
}

Outcome wasserstein_oracles() {
  Rng rng(5);
  auto cloud = [&](std::size_t m, int dim) {
    std::vector<double> p(m * dim);
    for (auto& x : p) x = rng.normal();
    return EmpiricalMeasure::uniform(std::move(p), dim);
  };
  std::size_t brute_bad = 0, quantile_bad = 0, axiom_bad = 0;
  double quantile_gap = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int dim = 1 + t % 2;
    const double p = (t / 2) % 2 ? 2.0 : 1.0;
    const std::size_t m = 1 + rng.next() % 7;
    const auto a = cloud(m, dim), b = cloud(m, dim);
    if (wasserstein_assignment(a, b, p) != wasserstein_bruteforce(a, b, p)) ++brute_bad;
  }
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 1 + rng.next() % 32;
    const auto a = cloud(m, 1), b = cloud(m, 1);
    for (double p : {1.0, 2.0}) {
      const double gap = std::abs(wasserstein_1d(a, b, p) - wasserstein_assignment(a, b, p));
      quantile_gap = std::max(quantile_gap, gap);
      if (gap > 1e-12) ++quantile_bad;
    }
  }
  for (int t = 0; t < 100; ++t) {
    const int dim = 1 + t % 2;
    const std::size_t m = 2 + rng.next() % 15;
    const auto a = cloud(m, dim), b = cloud(m, dim), c = cloud(m, dim);
    const auto d = Domain::euclidean(dim);
    for (double p : {1.0, 2.0}) {
      const double ab = wasserstein(a, b, p, d);
      if (std::abs(ab - wasserstein(b, a, p, d)) > 1e-10) ++axiom_bad;
      if (wasserstein(a, a, p, d) > 1e-10) ++axiom_bad;
      if (wasserstein(a, c, p, d) > ab + wasserstein(b, c, p, d) + 1e-10) ++axiom_bad;
    }
  }
  return {brute_bad == 0 && quantile_bad == 0 && axiom_bad == 0,
          fmt("brute-force mismatches %zu/200, quantile max gap %.2e, axiom violations %zu",
              brute_bad, quantile_gap, axiom_bad)};
}

Outcome limit_contraction() {
  Rng rng(6);
  std::size_t ratio_bad = 0, dense_bad = 0, bound_bad = 0;
  double worst_ratio = 0.0, worst_dense = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int dim = 1 + t % 3;
    const std::size_t n = 4 + rng.next() % 45;
    SimConfig cfg;
    cfg.model.domain = Domain::euclidean(dim);
    cfg.model.kernel = t % 2 ? InteractionKernel::gaussian(rng.uniform(-1.5, 1.5), rng.uniform(0.5, 1.5))
                             : InteractionKernel::morse_smoothed(1.0, 0.5, 1.0, 2.0, 0.2);
    const double K = rng.uniform(0.2, 2.0);
    cfg.model.comm = CommWeight::cucker_smale(K, rng.uniform(0.0, 2.0));
    cfg.gamma = 2.0 * K;
    cfg.n = n;
    cfg.t_final = 0.5;
    cfg.dt = 0.01;
    std::vector<double> x(n * dim);
    for (auto& c : x) c = rng.normal();

    SolveOptions opts;
    opts.record_increments = true;
    const auto sol = solve_velocity(cfg.model, cfg.gamma, x, opts);
    const double bound = K / cfg.gamma;
    for (std::size_t k = 1; k < sol.increments.size(); ++k) {
      if (sol.increments[k - 1] == 0.0) continue;
      const double r = sol.increments[k] / sol.increments[k - 1];
      worst_ratio = std::max(worst_ratio, r);
      if (r > bound + 1e-10) ++ratio_bad;
    }

    // dense oracle
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), rhs(n, dim);
    const auto sums = pair_sums(cfg.model, x, {}, Exec::serial);
    const auto phi = phi_matrix(cfg.model, x, Exec::serial);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) A(i, j) = -phi[i * n + j] / n;
      A(i, i) += cfg.gamma + sums.phi_mean[i];
      for (int a = 0; a < dim; ++a) rhs(i, a) = -sums.force[i * dim + a];
    }
    const Eigen::MatrixXd v = A.fullPivLu().solve(rhs);
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < dim; ++a) {
        const double gap = std::abs(v(i, a) - sol.velocities[i * dim + a]);
        worst_dense = std::max(worst_dense, gap);
        if (gap > 10 * opts.tol) ++dense_bad;
      }

    const auto traj = simulate_limit(cfg, x);
    const auto rep = velocity_bounds_report(traj, cfg);
    for (std::size_t k = 0; k < rep.snapshot_sup_u.size(); ++k)
      if (rep.snapshot_sup_u[k] > rep.snapshot_bound_u[k]) ++bound_bad;
  }
  return {ratio_bad == 0 && dense_bad == 0 && bound_bad == 0,
          fmt("worst sweep ratio %.4f (bound 0.5), worst dense gap %.2e, bound violations %zu",
              worst_ratio, worst_dense, bound_bad)};
}

Outcome flow_stability() {
  Rng rng(7);
  // three fields: linear contraction, smooth time-dependent analytic, limit solver
  const VelocityField contraction(1, [](const Vec& x, double) { return -x; }, 1.0);
  auto wavy_eval = [](const Vec& x, double t) {
    return Vec{std::sin(1.3 * x[1] + t), 0.7 * std::cos(0.9 * x[0]) - 0.3 * x[1], 0};
  };
  const auto wavy = VelocityField::estimated(2, wavy_eval, std::vector<double>{-2, -2, 2, 2}, 0.0, 1.0);

  auto cfg = gaussian_cs(32, 10.0);
  cfg.dt = 1e-3;
  const auto x0 = sample_positions(DensitySpec{}, cfg.n, cfg.model.domain, cfg.seed);
  const LimitVelocityField lf(simulate_limit(cfg, x0));
  const auto limit = VelocityField::estimated(
      1, [&lf](const Vec& x, double t) { return lf(x, t); }, x0, 0.0, 1.0);

  std::size_t lip_bad = 0;
  double lip_max = 0.0;
  for (const VelocityField* f : {&contraction, &wavy, &limit}) {
    std::vector<std::pair<Vec, Vec>> pairs;
    for (int k = 0; k < 100; ++k) {
      Vec a{}, b{};
      for (int c = 0; c < f->dim(); ++c) {
        a[c] = rng.normal() * (f == &limit ? 0.3 : 1.0);
        b[c] = a[c] + 0.1 * rng.normal();
      }
      pairs.emplace_back(a, b);
    }
    const auto rep = lipschitz_flow_check(*f, pairs, 1.0);
    lip_bad += rep.violations;
    lip_max = std::max(lip_max, rep.max_ratio / rep.bound);
  }

  // u_bar = u with coincident data: rho_bar by an independent fixed-step RK4
  std::vector<double> pts(2 * 24);
  for (auto& c : pts) c = rng.normal();
  const auto rho0 = EmpiricalMeasure::uniform(pts, 2);
  std::vector<MeasureSnapshot> same;
  std::vector<double> cur = pts;
  const double h = 1e-4;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    if (k > 0)
      for (std::size_t i = 0; i < 24; ++i) {
        Vec y = load(cur, i, 2);
        for (int s = 0; s < 1000; ++s) {
          const double ts = t - 0.1 + s * h;
          const Vec k1 = wavy_eval(y, ts);
          const Vec k2 = wavy_eval(y + (h / 2) * k1, ts + h / 2);
          const Vec k3 = wavy_eval(y + (h / 2) * k2, ts + h / 2);
          const Vec k4 = wavy_eval(y + h * k3, ts + h);
          y = y + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        store(cur, i, 2, y);
      }
    std::vector<double> v(cur.size());
    for (std::size_t i = 0; i < 24; ++i) store(v, i, 2, wavy_eval(load(cur, i, 2), t));
    same.push_back({t, EmpiricalMeasure::uniform(cur, 2), v});
  }
  const auto coincide = stability_inequality_check(same, wavy, 2.0, 1.0, rho0, Domain::euclidean(2));

  // contraction field, different initial data: C = 1 must be feasible
  std::vector<double> a(20), b(20);
  for (auto& c : a) c = rng.normal();
  for (auto& c : b) c = 0.5 + 1.5 * rng.normal();
  const auto rhob0 = EmpiricalMeasure::uniform(b, 1);
  std::vector<MeasureSnapshot> moved;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    std::vector<double> xs(20), vs(20);
    for (int i = 0; i < 20; ++i) {
      xs[i] = a[i] * std::exp(-t);
      vs[i] = -xs[i];
    }
    moved.push_back({t, EmpiricalMeasure::uniform(xs, 1), vs});
  }
  double cmax = 0.0;
  for (double p : {1.0, 2.0})
    cmax = std::max(cmax, stability_inequality_check(moved, contraction, p, 1.0, rhob0,
                                                     Domain::euclidean(1)).C_min_feasible);

  return {lip_bad == 0 && coincide.max_distance <= 1e-8 && cmax <= 1.0 + 1e-9,
          fmt("lipschitz violations %zu (max ratio/bound %.4f), coincident max d_2 %.2e, "
              "contraction C_min %.6f",
              lip_bad, lip_max, coincide.max_distance, cmax)};
}

Outcome tikhonov() {
  auto s = rate_study(KernelFamily::gaussian, 64);
  s.functionals = {"position_error_sup"};
  const auto r = epsilon_sweep(s);
  const double k = slope(r, "position_error_sup");
  return {k >= 0.9, fmt("slope max |x_eps - x| %.3f", k)};
}

Outcome determinism(const fs::path& first) {
  if (!fs::exists(first / "rates.json"))
    return {false, "criterion 2 output missing; run it first"};
  const fs::path again = kOut / "c9";
  fs::remove_all(again);
  auto s = rate_study(KernelFamily::gaussian, 256);
  s.functionals = {"rel_kinetic_sup", "rel_kinetic_timeint", "wass_sup"};
  s.output_dir = again;
  epsilon_sweep(s);
  const bool same = slurp(first / "rates.json") == slurp(again / "rates.json");
  return {same, same ? "rates.json byte-identical across runs" : "rates.json differs"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.count(9)) wanted.insert(2);
  auto run = [&](int k) { return wanted.empty() || wanted.count(k); };

  fs::create_directories(kOut);
  const fs::path c2 = kOut / "c2";
  fs::remove_all(c2);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, energy_identity},
      {2, [&] { return alignment_rate(c2); }},
      {3, coulomb_rate},
      {4, coulomb_identity},
      {5, wasserstein_oracles},
      {6, limit_contraction},
      {7, flow_stability},
      {8, tikhonov},
      {9, [&] { return determinism(c2); }},
  };
  int failed = 0;
  for (const auto& [k, fn] : criteria) {
    if (!run(k)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d: %s (%s)\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
