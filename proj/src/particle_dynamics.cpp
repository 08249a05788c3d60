#include "ealign/particle_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ealign/errors.hpp"
#include "ealign/numerics.hpp"

namespace ealign {

void ParticleState::validate(const Domain& domain) const {
  if (dim != domain.dim)
    throw ConfigError("state dimension " + std::to_string(dim) +
                      " does not match domain dimension " +
                      std::to_string(domain.dim));
  if (positions.empty() || positions.size() % dim != 0)
    throw ConfigError("position array length is not a positive multiple of dim");
  if (velocities.size() != positions.size())
    throw ConfigError("velocity and position arrays differ in length");
  for (double c : positions) {
    if (!std::isfinite(c)) throw ConfigError("non-finite position");
    if (domain.is_torus() && (c < 0.0 || c >= domain.period))
      throw ConfigError("torus position outside [0, period)");
  }
  for (double c : velocities)
    if (!std::isfinite(c)) throw ConfigError("non-finite velocity");
}

std::string to_string(Scheme scheme) {
  return scheme == Scheme::explicit_rk2 ? "explicit_rk2" : "imex_exact_damping";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "explicit_rk2") return Scheme::explicit_rk2;
  if (name == "imex_exact_damping") return Scheme::imex_exact_damping;
  throw ConfigError("unknown scheme '" + name + "'");
}

void SimConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ConfigError("epsilon must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ConfigError("gamma must be positive");
  if (n < 1) throw ConfigError("need at least one particle");
  if (!(t_final > 0.0) || !std::isfinite(t_final))
    throw ConfigError("final time must be positive");
  if (!(dt > 0.0) || dt > t_final) throw ConfigError("dt must lie in (0, T]");
  model.validate();
  if (scheme == Scheme::explicit_rk2) {
    const double limit = epsilon / (2.0 * (gamma + model.comm.sup()));
    if (dt > limit) {
      std::ostringstream os;
      os << "explicit_rk2 is unstable for dt = " << dt
         << "; need dt <= eps / (2 (gamma + ||phi||)) = " << limit;
      throw ConfigError(os.str());
    }
  }
}

std::vector<std::string> SimConfig::warnings() const {
  std::vector<std::string> out;
  const double phi = model.comm.sup();
  if (gamma <= phi) {
    out.push_back("gamma <= ||phi||_inf: limit velocity solve is not certified");
  } else if (gamma < 2.0 * phi) {
    out.push_back("gamma is within a factor two of ||phi||_inf");
  }
  return out;
}

std::size_t SimConfig::step_count() const {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(t_final / dt - 1e-9)));
}

double SimConfig::step_size() const {
  return t_final / static_cast<double>(step_count());
}

std::size_t SimConfig::snapshot_cadence() const {
  if (snapshot_every > 0) return snapshot_every;
  return static_cast<std::size_t>(
      std::max(1.0, std::ceil(t_final / (100.0 * dt) - 1e-9)));
}

namespace {

// v-rates without the linear damping: (1/eps)(-force + alignment).
std::vector<double> nonlinear_rate(const PairSums& s, std::span<const double> v,
                                   int dim, double eps) {
  std::vector<double> out(v.size());
  const std::size_t n = v.size() / dim;
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < dim; ++a) {
      const std::size_t k = i * dim + a;
      out[k] = (-s.force[k] + s.phi_v[k] - s.phi_mean[i] * v[k]) / eps;
    }
  return out;
}

void wrap_all(const Domain& domain, std::vector<double>& x) {
  if (!domain.is_torus()) return;
  for (double& c : x) c = wrap(domain, c);
}

double kinetic(std::span<const double> v, double eps) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return 0.5 * eps * s / static_cast<double>(v.size());
}

struct StepOut {
  ParticleState state;
  double damping = 0.0;
  double alignment = 0.0;
};

// Step-averaged dissipation rates, integrating exactly along the
// interpolant v(s) = v_n - a (1 - exp(-lambda s)) that matches both step
// endpoints and carries the exact damping transient.
void dissipation(const SimConfig& cfg, const ParticleState& from, StepOut& out,
                 double h) {
  const int dim = from.dim;
  const std::size_t n = from.size();
  const double lambda = cfg.gamma / cfg.epsilon;
  const double z = lambda * h;
  const double j1 = h * one_minus_exp_integral(z);
  const double j2 = h * one_minus_exp_sq_integral(z);
  const double scale = std::expm1(-z);

  std::vector<double> a(n * dim);
  for (std::size_t k = 0; k < a.size(); ++k)
    a[k] = (out.state.velocities[k] - from.velocities[k]) / scale;

  double damp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec v0 = from.velocity(i);
    const Vec ai = load(a, i, dim);
    damp += norm2(v0) * h - 2.0 * dot(v0, ai) * j1 + norm2(ai) * j2;
  }
  const double nn = static_cast<double>(n);
  out.damping = cfg.gamma * damp / (nn * h);

  // phi at the step midpoint positions
  std::vector<double> mid(from.positions.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec x0 = from.position(i);
    const Vec dx = displacement(cfg.model.domain, out.state.position(i), x0);
    store(mid, i, dim, x0 + 0.5 * dx);
  }
  std::vector<double> rows(n, 0.0);
  const auto& domain = cfg.model.domain;
  const auto& comm = cfg.model.comm;
  auto row = [&](std::size_t i) {
    const Vec xi = load(mid, i, dim);
    const Vec wi = from.velocity(i);
    const Vec ci = load(a, i, dim);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = comm.value(displacement(domain, xi, load(mid, j, dim)));
      const Vec w0 = wi - from.velocity(j);
      const Vec c = ci - load(a, j, dim);
      s += w * (norm2(w0) * h - 2.0 * dot(w0, c) * j1 + norm2(c) * j2);
    }
    rows[i] = s;
  };
  if (cfg.exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) row(i);
  }
  double total = 0.0;
  for (double r : rows) total += r;
  out.alignment = total / (2.0 * nn * nn * h);
}

void check_finite(const ParticleState& s, std::size_t step_index) {
  for (double c : s.positions)
    if (!std::isfinite(c)) throw DivergenceError(step_index, s.time);
  for (double c : s.velocities)
    if (!std::isfinite(c)) throw DivergenceError(step_index, s.time);
}

// One step of size h. `start` holds the pair sums at the initial state.
ParticleState advance(const ParticleState& s, const SimConfig& cfg, double h,
                      const PairSums& start) {
  const int dim = s.dim;
  const double eps = cfg.epsilon;
  const auto& model = cfg.model;
  const std::size_t len = s.positions.size();

  ParticleState stage{s.time + h, dim, s.positions, s.velocities};
  ParticleState next{s.time + h, dim, s.positions, s.velocities};

  if (cfg.scheme == Scheme::imex_exact_damping) {
    // Exponential midpoint (ETD2RK): damping is integrated exactly, the
    // interaction and alignment terms by a second-order explicit stage.
    const double lambda = cfg.gamma / eps;
    const double z = lambda * h;
    const double decay = std::exp(-z);
    const double p1 = -std::expm1(-z) / lambda;
    const double p2 = h * etd_phi2(z);
    const auto n0 = nonlinear_rate(start, s.velocities, dim, eps);
    for (std::size_t k = 0; k < len; ++k) {
      stage.positions[k] = s.positions[k] + h * s.velocities[k];
      stage.velocities[k] = decay * s.velocities[k] + p1 * n0[k];
    }
    wrap_all(model.domain, stage.positions);
    const auto sa = pair_sums(model, stage.positions, stage.velocities, cfg.exec);
    const auto na = nonlinear_rate(sa, stage.velocities, dim, eps);
    for (std::size_t k = 0; k < len; ++k) {
      next.positions[k] =
          s.positions[k] + 0.5 * h * (s.velocities[k] + stage.velocities[k]);
      next.velocities[k] = stage.velocities[k] + p2 * (na[k] - n0[k]);
    }
  } else {
    // Heun on the full system.
    const double damp = cfg.gamma / eps;
    const auto n0 = nonlinear_rate(start, s.velocities, dim, eps);
    std::vector<double> k1(len);
    for (std::size_t k = 0; k < len; ++k) {
      k1[k] = n0[k] - damp * s.velocities[k];
      stage.positions[k] = s.positions[k] + h * s.velocities[k];
      stage.velocities[k] = s.velocities[k] + h * k1[k];
    }
    wrap_all(model.domain, stage.positions);
    const auto sa = pair_sums(model, stage.positions, stage.velocities, cfg.exec);
    const auto na = nonlinear_rate(sa, stage.velocities, dim, eps);
    for (std::size_t k = 0; k < len; ++k) {
      const double k2 = na[k] - damp * stage.velocities[k];
      next.positions[k] =
          s.positions[k] + 0.5 * h * (s.velocities[k] + stage.velocities[k]);
      next.velocities[k] = s.velocities[k] + 0.5 * h * (k1[k] + k2);
    }
  }
  wrap_all(model.domain, next.positions);
  return next;
}

PairSums sums_at(const ParticleState& s, const SimConfig& cfg) {
  try {
    return pair_sums(cfg.model, s.positions, s.velocities, cfg.exec);
  } catch (const SingularityError& e) {
    std::ostringstream os;
    os << " at t = " << s.time;
    throw SingularityError(e.first, e.second, os.str());
  }
}

void check_state(const SimConfig& cfg, const ParticleState& init) {
  cfg.validate();
  init.validate(cfg.model.domain);
  if (init.size() != cfg.n)
    throw ConfigError("initial state has " + std::to_string(init.size()) +
                      " particles, config expects " + std::to_string(cfg.n));
}

}  // namespace

Rates rhs(const ParticleState& state, const SimConfig& cfg) {
  check_state(cfg, state);
  const auto s = sums_at(state, cfg);
  const auto nl = nonlinear_rate(s, state.velocities, state.dim, cfg.epsilon);
  Rates r{state.velocities, nl};
  for (std::size_t k = 0; k < nl.size(); ++k)
    r.velocity_rates[k] -= cfg.gamma / cfg.epsilon * state.velocities[k];
  return r;
}

ParticleState step(const ParticleState& state, const SimConfig& cfg) {
  check_state(cfg, state);
  auto next = advance(state, cfg, cfg.dt, sums_at(state, cfg));
  check_finite(next, 0);
  return next;
}

Trajectory simulate(const SimConfig& cfg, const ParticleState& init) {
  check_state(cfg, init);
  const std::size_t steps = cfg.step_count();
  const double h = cfg.step_size();
  const std::size_t cadence = cfg.snapshot_cadence();

  Trajectory traj;
  traj.config = cfg;
  traj.snapshots.push_back(init);
  traj.energy_ledger.reserve(steps);

  ParticleState cur = init;
  PairSums sums = sums_at(cur, cfg);
  double energy = kinetic(cur.velocities, cfg.epsilon) +
                  potential_energy(cfg.model, cur.positions, cfg.exec);

  for (std::size_t k = 0; k < steps; ++k) {
    StepOut out;
    try {
      out.state = advance(cur, cfg, h, sums);
    } catch (const SingularityError& e) {
      std::ostringstream os;
      os << " during step " << k << " (t = " << cur.time << ")";
      throw SingularityError(e.first, e.second, os.str());
    }
    out.state.time = init.time + static_cast<double>(k + 1) * h;
    check_finite(out.state, k);
    dissipation(cfg, cur, out, h);

    sums = sums_at(out.state, cfg);
    EnergyRecord rec;
    rec.time = out.state.time;
    rec.kinetic = kinetic(out.state.velocities, cfg.epsilon);
    rec.potential = potential_energy(cfg.model, out.state.positions, cfg.exec);
    rec.damping_diss = out.damping;
    rec.alignment_diss = out.alignment;
    const double next_energy = rec.kinetic + rec.potential;
    rec.residual =
        std::abs((next_energy - energy) / h + rec.damping_diss + rec.alignment_diss);
    if (!std::isfinite(rec.residual)) throw DivergenceError(k, rec.time);
    traj.energy_ledger.push_back(rec);
    energy = next_energy;

    cur = std::move(out.state);
    if ((k + 1) % cadence == 0 || k + 1 == steps) traj.snapshots.push_back(cur);
  }
  return traj;
}

DiscreteEnergy discrete_energy(const ParticleState& state, const SimConfig& cfg) {
  state.validate(cfg.model.domain);
  return {kinetic(state.velocities, cfg.epsilon),
          potential_energy(cfg.model, state.positions, cfg.exec)};
}

std::vector<double> energy_balance_residual(const Trajectory& traj) {
  if (traj.snapshots.size() < 2)
    throw ConfigError("energy balance needs at least two snapshots");
  std::vector<double> out;
  out.reserve(traj.energy_ledger.size());
  for (const auto& r : traj.energy_ledger) out.push_back(r.residual);
  return out;
}

}  // namespace ealign
