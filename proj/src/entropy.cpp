#include "ealign/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "ealign/errors.hpp"
#include "ealign/transport.hpp"

namespace ealign {

namespace {

// Midpoint CDF of a sorted 1-D cloud: (#{< x} + #{= x} / 2) / N.
double midpoint_cdf(std::span<const double> sorted, double x) {
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
  const auto hi = std::upper_bound(lo, sorted.end(), x);
  const double below = static_cast<double>(lo - sorted.begin());
  const double at = static_cast<double>(hi - lo);
  return (below + 0.5 * at) / static_cast<double>(sorted.size());
}

std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

double relative_kinetic(const ParticleState& state, const PointField& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i)
    s += norm2(state.velocity(i) - u(state.position(i)));
  return s / static_cast<double>(state.size());
}

RelativeEntropyBreakdown entropy_breakdown(const ParticleState& state,
                                           const ContinuumVelocity& u,
                                           const PointField& e,
                                           const SimConfig& cfg, double h) {
  if (!(h > 0.0) || !std::isfinite(h) || h < 1e-12)
    throw ConfigError("finite-difference step must be a positive number >= 1e-12");
  const Model& model = cfg.model;
  const int dim = state.dim;
  if (dim != u.dim()) throw ConfigError("state and field dimensions differ");
  const std::size_t n = state.size();
  const auto lim_x = u.positions();
  const auto lim_v = u.velocities();
  const std::size_t m = lim_x.size() / dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_m = 1.0 / static_cast<double>(m);
  const double eps = cfg.epsilon;

  std::vector<Vec> x(n), w(n), ux(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = state.position(i);
    ux[i] = u(x[i]);
    w[i] = state.velocity(i) - ux[i];
  }

  RelativeEntropyBreakdown out;
  out.time = state.time;
  std::vector<double> r(n), i2(n), i3(n), i4(n), i5(n), ad(n);

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = norm2(w[i]);

    // w . grad u w with (grad u)_{ab} = d_b u_a
    double quad = 0.0;
    for (int b = 0; b < dim; ++b) {
      Vec step{};
      step[b] = h;
      const Vec col = (0.5 / h) * (u(x[i] + step) - u(x[i] - step));
      quad += dot(w[i], col) * w[i][b];
    }
    i2[i] = -quad;

    Vec conv{};
    for (std::size_t j = 0; j < n; ++j) {
      const Vec d = displacement(model.domain, x[i], x[j]);
      if (d != Vec{}) conv = conv + inv_n * model.kernel.grad(d);
    }
    for (std::size_t j = 0; j < m; ++j) {
      const Vec d = displacement(model.domain, x[i], load(lim_x, j, dim));
      if (d != Vec{}) conv = conv - inv_m * model.kernel.grad(d);
    }
    i3[i] = -dot(w[i], conv) / eps;

    i4[i] = -dot(w[i], e(x[i]));

    Vec a_eps{}, a_lim{};
    double diss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double f = model.comm.value(displacement(model.domain, x[i], x[j]));
      a_eps = a_eps + (f * inv_n) * (ux[j] - ux[i]);
      diss += f * norm2(w[i] - w[j]);
    }
    for (std::size_t j = 0; j < m; ++j) {
      const Vec xj = load(lim_x, j, dim);
      const double f = model.comm.value(displacement(model.domain, x[i], xj));
      a_lim = a_lim + (f * inv_m) * (load(lim_v, j, dim) - ux[i]);
    }
    i5[i] = dot(w[i], a_eps - a_lim) / eps;
    ad[i] = diss;
  }

  for (std::size_t i = 0; i < n; ++i) {
    out.rel_kinetic += r[i];
    out.I2 += i2[i];
    out.I3 += i3[i];
    out.I4 += i4[i];
    out.I5 += i5[i];
    out.alignment_rel_diss += ad[i];
  }
  out.rel_kinetic *= inv_n;
  out.I2 *= inv_n;
  out.I3 *= inv_n;
  out.I4 *= inv_n;
  out.I5 *= inv_n;
  out.alignment_rel_diss *= 0.5 * inv_n * inv_n;
  return out;
}

Vec acceleration_field(const LimitVelocityField& field, std::size_t k,
                       const Vec& x, double h) {
  const auto times = field.times();
  const std::size_t ns = times.size();
  const auto& u = field.at_snapshot(k);
  const Vec ux = u(x);
  Vec dt{};
  if (ns > 1) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == ns ? k : k + 1;
    dt = (1.0 / (times[hi] - times[lo])) *
         (field.at_snapshot(hi)(x) - field.at_snapshot(lo)(x));
  }
  Vec adv{};
  for (int b = 0; b < field.dim(); ++b) {
    Vec step{};
    step[b] = h;
    adv = adv + (ux[b] * 0.5 / h) * (u(x + step) - u(x - step));
  }
  return dt + adv;
}

void check_aligned(const Trajectory& eps_run, const LimitTrajectory& limit_run) {
  const auto& a = eps_run.snapshots;
  const auto& b = limit_run.snapshots;
  if (a.size() != b.size())
    throw ConfigError("paired runs have different snapshot counts");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k].time - b[k].time) > 1e-9 * std::max(1.0, std::abs(a[k].time)))
      throw ConfigError("paired runs disagree on snapshot time " + std::to_string(k));
  if (a.empty()) throw ConfigError("empty trajectories");
  if (a.front().dim != b.front().dim)
    throw ConfigError("paired runs differ in dimension");
}

std::vector<RelativeEntropyBreakdown> entropy_history(
    const Trajectory& eps_run, const LimitTrajectory& limit_run, double h) {
  check_aligned(eps_run, limit_run);
  const LimitVelocityField field(limit_run);
  std::vector<RelativeEntropyBreakdown> out;
  for (std::size_t k = 0; k < eps_run.snapshots.size(); ++k) {
    auto e = [&](const Vec& x) { return acceleration_field(field, k, x, h); };
    out.push_back(entropy_breakdown(eps_run.snapshots[k], field.at_snapshot(k),
                                    e, eps_run.config, h));
  }
  return out;
}

std::string to_json(const std::vector<RelativeEntropyBreakdown>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"t", r.time},
                   {"rel_kinetic", r.rel_kinetic},
                   {"I2", r.I2},
                   {"I3", r.I3},
                   {"I4", r.I4},
                   {"I5", r.I5},
                   {"align_diss", r.alignment_rel_diss}});
  return arr.dump(2);
}

std::vector<double> lemma51_residual(const Trajectory& eps_run,
                                     const LimitTrajectory& limit_run) {
  const auto& model = eps_run.config.model;
  if (model.domain.dim != 1 || model.kernel.family != KernelFamily::coulomb_1d)
    throw UnsupportedError("the Coulomb energy identity is checked for coulomb_1d in d = 1");
  check_aligned(eps_run, limit_run);
  const auto& a = eps_run.snapshots;
  const auto& b = limit_run.snapshots;
  const std::size_t ns = a.size();

  std::vector<double> energy(ns), rhs(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    const auto fe = sorted_copy(a[k].positions);
    const auto fr = sorted_copy(b[k].positions);
    energy[k] = cramer_energy_1d(EmpiricalMeasure::uniform(a[k].positions, 1),
                                 EmpiricalMeasure::uniform(b[k].positions, 1));
    auto gap = [&](double x) { return midpoint_cdf(fe, x) - midpoint_cdf(fr, x); };
    double s = 0.0;
    for (std::size_t j = 0; j < b[k].size(); ++j)
      s += gap(b[k].positions[j]) * b[k].velocities[j] / static_cast<double>(b[k].size());
    for (std::size_t i = 0; i < a[k].size(); ++i)
      s -= gap(a[k].positions[i]) * a[k].velocities[i] / static_cast<double>(a[k].size());
    rhs[k] = s;
  }
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < ns; ++k) {
    const double dt = a[k + 1].time - a[k].time;
    out.push_back(std::abs(0.5 * (energy[k + 1] - energy[k]) / dt -
                           0.5 * (rhs[k] + rhs[k + 1])));
  }
  return out;
}

}  // namespace ealign
