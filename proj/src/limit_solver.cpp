#include "ealign/limit_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <sstream>

#include "ealign/errors.hpp"
#include "ealign/lattice.hpp"

namespace ealign {

VelocitySolution solve_velocity(const Model& model, double gamma,
                                std::span<const double> positions,
                                const SolveOptions& opts,
                                std::span<const double> guess) {
  const double phi_sup = model.comm.sup();
  if (!(gamma > phi_sup)) {
    std::ostringstream os;
    os << "gamma = " << gamma << " does not exceed ||phi||_inf = " << phi_sup
       << "; the velocity iteration is not a contraction";
    throw ContractionError(os.str());
  }
  const int dim = model.domain.dim;
  if (positions.empty() || positions.size() % dim != 0)
    throw ConfigError("position array length is not a positive multiple of dim");
  if (!guess.empty() && guess.size() != positions.size())
    throw ConfigError("initial guess has the wrong length");
  const std::size_t n = positions.size() / dim;

  const auto sums = pair_sums(model, positions, {}, opts.exec);
  const auto phi = phi_matrix(model, positions, opts.exec);

  VelocitySolution out;
  std::vector<double> cur(guess.begin(), guess.end());
  if (cur.empty()) cur.assign(positions.size(), 0.0);
  std::vector<double> next(positions.size());

  bool converged = false;
  double last = std::numeric_limits<double>::infinity();
  while (out.iterations < opts.max_iterations) {
    jacobi_sweep(phi, sums.force, sums.phi_mean, gamma, dim, cur, next,
                 opts.exec);
    ++out.iterations;
    // The residual of `cur` is (gamma + phi_mean_i) |next_i - cur_i|.
    double inc = 0.0;
    last = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < dim; ++a) {
        const double d = std::abs(next[i * dim + a] - cur[i * dim + a]);
        inc = std::max(inc, d);
        last = std::max(last, (gamma + sums.phi_mean[i]) * d);
      }
    if (opts.record_increments) out.increments.push_back(inc);
    std::swap(cur, next);
    if (!std::isfinite(last)) break;
    if (last <= opts.tol) {
      converged = true;
      break;
    }
  }
  out.residual = jacobi_residual(phi, sums.force, sums.phi_mean, gamma, dim,
                                 cur, opts.exec);
  if (!converged) throw IterationLimitError(out.iterations, out.residual);
  out.velocities = std::move(cur);
  return out;
}

std::vector<double> solve_velocity(std::span<const double> positions,
                                   const SimConfig& cfg, double tol) {
  cfg.model.validate();
  SolveOptions opts;
  opts.tol = tol;
  opts.exec = cfg.exec;
  return solve_velocity(cfg.model, cfg.gamma, positions, opts).velocities;
}

LimitTrajectory simulate_limit(const SimConfig& cfg,
                               std::span<const double> init_positions,
                               double tol) {
  cfg.model.validate();
  if (!(cfg.gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(cfg.t_final > 0.0)) throw ConfigError("final time must be positive");
  if (!(cfg.dt > 0.0) || cfg.dt > cfg.t_final)
    throw ConfigError("dt must lie in (0, T]");
  const Domain& domain = cfg.model.domain;
  const int dim = domain.dim;
  if (init_positions.size() != cfg.n * dim)
    throw ConfigError("initial positions do not match N * dim");
  for (double c : init_positions) {
    if (!std::isfinite(c)) throw ConfigError("non-finite position");
    if (domain.is_torus() && (c < 0.0 || c >= domain.period))
      throw ConfigError("torus position outside [0, period)");
  }

  SolveOptions opts;
  opts.tol = tol;
  opts.exec = cfg.exec;
  const std::size_t steps = cfg.step_count();
  const double h = cfg.step_size();
  const std::size_t cadence = cfg.snapshot_cadence();

  LimitTrajectory traj;
  traj.config = cfg;
  std::vector<double> x(init_positions.begin(), init_positions.end());
  auto sol = solve_velocity(cfg.model, cfg.gamma, x, opts);
  auto snap = [&](double t) {
    traj.snapshots.push_back(
        {t, dim, x, sol.velocities, sol.residual, sol.iterations});
  };
  snap(0.0);

  std::vector<double> stage(x.size());
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k + 1) * h;
    try {
      for (std::size_t m = 0; m < x.size(); ++m)
        stage[m] = wrap(domain, x[m] + h * sol.velocities[m]);
      auto mid = solve_velocity(cfg.model, cfg.gamma, stage, opts, sol.velocities);
      for (std::size_t m = 0; m < x.size(); ++m)
        x[m] = wrap(domain,
                    x[m] + 0.5 * h * (sol.velocities[m] + mid.velocities[m]));
      for (double c : x)
        if (!std::isfinite(c)) throw DivergenceError(k, t);
      sol = solve_velocity(cfg.model, cfg.gamma, x, opts, mid.velocities);
    } catch (const SingularityError& e) {
      std::ostringstream os;
      os << " during limit step " << k << " (t = " << t << ")";
      throw SingularityError(e.first, e.second, os.str());
    }
    if ((k + 1) % cadence == 0 || k + 1 == steps) snap(t);
  }
  return traj;
}

Vec force_convolution(const Model& model, std::span<const double> cloud,
                      const Vec& x) {
  const int dim = model.domain.dim;
  const std::size_t n = cloud.size() / dim;
  Vec f{};
  for (std::size_t j = 0; j < n; ++j) {
    const Vec r = displacement(model.domain, x, load(cloud, j, dim));
    if (r[0] == 0.0 && r[1] == 0.0 && r[2] == 0.0) continue;
    f = f + model.kernel.grad(r);
  }
  return (1.0 / static_cast<double>(n)) * f;
}

ContinuumVelocity::ContinuumVelocity(const Model& model, double gamma,
                                     std::vector<double> positions,
                                     std::vector<double> velocities)
    : model_(model),
      gamma_(gamma),
      x_(std::move(positions)),
      v_(std::move(velocities)) {
  const int dim = model_.domain.dim;
  if (x_.empty() || x_.size() % dim != 0 || v_.size() != x_.size())
    throw ConfigError("continuum velocity needs matching position/velocity arrays");
  if (model_.kernel.family != KernelFamily::coulomb_1d) return;

  std::vector<double> sorted = x_;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::size_t below = 0;
  for (std::size_t k = 0; k < sorted.size();) {
    std::size_t m = k;
    while (m < sorted.size() && sorted[m] == sorted[k]) ++m;
    const double count = static_cast<double>(m - k);
    knots_x_.push_back(sorted[k]);
    knots_f_.push_back((static_cast<double>(below) + 0.5 * count) / n);
    below += m - k;
    k = m;
  }
}

double ContinuumVelocity::interpolated_cdf(double x) const {
  const std::size_t m = knots_x_.size();
  if (m == 1) return knots_f_[0];
  auto slope = [&](std::size_t a) {
    return (knots_f_[a + 1] - knots_f_[a]) / (knots_x_[a + 1] - knots_x_[a]);
  };
  double f;
  if (x <= knots_x_.front()) {
    f = knots_f_.front() + slope(0) * (x - knots_x_.front());
  } else if (x >= knots_x_.back()) {
    f = knots_f_.back() + slope(m - 2) * (x - knots_x_.back());
  } else {
    const auto it = std::upper_bound(knots_x_.begin(), knots_x_.end(), x);
    const std::size_t a = static_cast<std::size_t>(it - knots_x_.begin()) - 1;
    f = knots_f_[a] + slope(a) * (x - knots_x_[a]);
  }
  return std::clamp(f, 0.0, 1.0);
}

Vec ContinuumVelocity::force(const Vec& x) const {
  if (model_.kernel.family == KernelFamily::coulomb_1d)
    return {0.5 - interpolated_cdf(x[0]), 0.0, 0.0};
  return force_convolution(model_, x_, x);
}

Vec ContinuumVelocity::operator()(const Vec& x) const {
  const int dim = model_.domain.dim;
  const std::size_t n = x_.size() / dim;
  double pm = 0.0;
  Vec pv{};
  for (std::size_t j = 0; j < n; ++j) {
    const double w =
        model_.comm.value(displacement(model_.domain, x, load(x_, j, dim)));
    pm += w;
    pv = pv + w * load(v_, j, dim);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return (1.0 / (gamma_ + inv_n * pm)) * (inv_n * pv - force(x));
}

LimitVelocityField::LimitVelocityField(const LimitTrajectory& traj) {
  if (traj.snapshots.empty()) throw ConfigError("empty limit trajectory");
  dim_ = traj.config.model.domain.dim;
  for (const auto& s : traj.snapshots) {
    fields_.emplace_back(traj.config.model, traj.config.gamma, s);
    times_.push_back(s.time);
  }
}

Vec LimitVelocityField::operator()(const Vec& x, double t) const {
  if (t <= times_.front() || fields_.size() == 1) return fields_.front()(x);
  if (t >= times_.back()) return fields_.back()(x);
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t b = static_cast<std::size_t>(it - times_.begin());
  const std::size_t a = b - 1;
  const double s = (t - times_[a]) / (times_[b] - times_[a]);
  return (1.0 - s) * fields_[a](x) + s * fields_[b](x);
}

namespace {

double spectral_norm(const std::array<Vec, kMaxDim>& cols, int dim) {
  Eigen::MatrixXd j(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) j(b, a) = cols[a][b];
  if (dim == 1) return std::abs(j(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  return svd.singularValues()(0);
}

constexpr double kFdStep = 1e-4;

}  // namespace

bool VelocityBoundsReport::holds() const {
  auto le = [](double a, double b) { return a <= b * (1.0 + 1e-12) + 1e-14; };
  if (!le(sup_u, bound_u)) return false;
  for (std::size_t k = 0; k < snapshot_sup_u.size(); ++k)
    if (!le(snapshot_sup_u[k], snapshot_bound_u[k])) return false;
  if (bound_grad_u && !le(sup_grad_u, *bound_grad_u)) return false;
  if (bound_dt_u && !le(sup_dt_u, *bound_dt_u)) return false;
  return true;
}

std::string VelocityBoundsReport::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["sup_u"] = sup_u;
  j["bound_u"] = bound_u;
  j["sup_grad_u"] = sup_grad_u;
  j["bound_grad_u"] = opt(bound_grad_u);
  j["sup_dt_u"] = sup_dt_u;
  j["bound_dt_u"] = opt(bound_dt_u);
  j["gamma_threshold"] = gamma_threshold;
  j["near_threshold"] = near_threshold;
  j["holds"] = holds();
  return j.dump(2);
}

VelocityBoundsReport velocity_bounds_report(const LimitTrajectory& traj,
                                            const SimConfig& cfg) {
  const Model& model = cfg.model;
  const double gamma = cfg.gamma;
  const double phi_sup = model.comm.sup();
  if (!(gamma > phi_sup)) {
    std::ostringstream os;
    os << "velocity bounds need gamma > ||phi||_inf (gamma = " << gamma
       << ", ||phi||_inf = " << phi_sup << ")";
    throw ContractionError(os.str());
  }
  if (traj.snapshots.empty()) throw ConfigError("empty limit trajectory");

  VelocityBoundsReport rep;
  rep.gamma_threshold = phi_sup;
  rep.near_threshold = gamma < 2.0 * phi_sup;

  std::optional<double> lip_grad_w;
  if (!model.kernel.is_coulomb()) lip_grad_w = kernel_constants(model.kernel).lip_const;
  const double phi_lip = kernel_constants(model.comm).lip_const.value_or(0.0);

  const LimitVelocityField field(traj);
  const int dim = field.dim();
  const auto times = field.times();
  const std::size_t ns = traj.snapshots.size();
  double g_max = 0.0;

  for (std::size_t k = 0; k < ns; ++k) {
    const auto& snap = traj.snapshots[k];
    const auto& u = field.at_snapshot(k);
    auto samples = lattice_points(snap.positions, dim, model.domain);
    samples.insert(samples.end(), snap.positions.begin(), snap.positions.end());
    const std::size_t m = samples.size() / dim;

    double g = 0.0;
    for (std::size_t s = 0; s < m; ++s)
      g = std::max(g, norm(u.force(load(samples, s, dim))));
    g_max = std::max(g_max, g);

    double su = 0.0;
    for (std::size_t i = 0; i < snap.size(); ++i)
      su = std::max(su, norm(load(snap.velocities, i, dim)));
    rep.snapshot_sup_u.push_back(su);
    rep.snapshot_bound_u.push_back(g / (gamma - phi_sup));
    rep.sup_u = std::max(rep.sup_u, su);

    for (std::size_t s = 0; s < m; ++s) {
      const Vec x = load(samples, s, dim);
      std::array<Vec, kMaxDim> cols{};
      for (int a = 0; a < dim; ++a) {
        Vec e{};
        e[a] = kFdStep;
        cols[a] = (0.5 / kFdStep) * (u(x + e) - u(x - e));
      }
      rep.sup_grad_u = std::max(rep.sup_grad_u, spectral_norm(cols, dim));

      if (ns > 1) {
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 == ns ? k : k + 1;
        const Vec du = field.at_snapshot(hi)(x) - field.at_snapshot(lo)(x);
        rep.sup_dt_u =
            std::max(rep.sup_dt_u, norm(du) / (times[hi] - times[lo]));
      }
    }
  }

  const double big_u = g_max / (gamma - phi_sup);
  rep.bound_u = big_u;
  if (lip_grad_w) {
    const double h = *lip_grad_w;
    const double phi1 = phi_sup + phi_lip;
    const double ug = (1.0 + phi_lip / gamma) / gamma *
                      (g_max + h + phi1 * g_max / (gamma - phi_sup));
    rep.bound_grad_u = ug;
    rep.bound_dt_u = (h * big_u + 2.0 * phi1 * (big_u + ug) * (big_u + ug)) /
                         (gamma - phi_sup) +
                     phi_lip * big_u * (g_max + phi_sup * big_u) /
                         (gamma * (gamma - phi_sup));
  }
  return rep;
}

}  // namespace ealign
