#include "ealign/flow.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "ealign/errors.hpp"
#include "ealign/lattice.hpp"

namespace ealign {

VelocityField::VelocityField(int dim, Eval eval, double grad_sup)
    : dim_(dim), eval_(std::move(eval)), grad_sup_(grad_sup) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("field dimension must be 1..3");
  if (!eval_) throw ConfigError("velocity field needs an evaluator");
  if (!(grad_sup >= 0.0)) throw ConfigError("grad_sup must be non-negative");
}

VelocityField VelocityField::estimated(int dim, Eval eval,
                                       std::span<const double> cloud,
                                       double t0, double t1, int time_samples,
                                       double h) {
  const auto grid = lattice_points(cloud, dim, Domain::euclidean(dim));
  const std::size_t m = grid.size() / dim;
  double sup = 0.0;
  for (int s = 0; s < std::max(time_samples, 1); ++s) {
    const double t =
        time_samples > 1 ? t0 + (t1 - t0) * s / (time_samples - 1) : t0;
    for (std::size_t k = 0; k < m; ++k) {
      const Vec x = load(grid, k, dim);
      double fro = 0.0;
      for (int b = 0; b < dim; ++b) {
        Vec e{};
        e[b] = h;
        fro += norm2((0.5 / h) * (eval(x + e, t) - eval(x - e, t)));
      }
      sup = std::max(sup, std::sqrt(fro));
    }
  }
  return VelocityField(dim, std::move(eval), sup);
}

namespace {

Vec rk4(const VelocityField& f, const Vec& x, double t, double h) {
  const Vec k1 = f(x, t);
  const Vec k2 = f(x + (0.5 * h) * k1, t + 0.5 * h);
  const Vec k3 = f(x + (0.5 * h) * k2, t + 0.5 * h);
  const Vec k4 = f(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool finite(const Vec& x) {
  return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

}  // namespace

Vec flow_map(const VelocityField& field, const Vec& x0, double t0, double t1,
             const FlowOptions& opts) {
  if (t1 == t0) return x0;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  double t = t0;
  Vec x = x0;
  double h = std::min(opts.initial_step, std::abs(t1 - t0));
  std::size_t steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > opts.max_steps)
      throw DivergenceError("flow map exceeded the step budget");
    const double remaining = std::abs(t1 - t);
    const bool last = h >= remaining;
    const double hs = dir * (last ? remaining : h);
    const Vec big = rk4(field, x, t, hs);
    const Vec half = rk4(field, x, t, 0.5 * hs);
    const Vec small = rk4(field, half, t + 0.5 * hs, 0.5 * hs);
    const double err = norm(small - big) / 15.0;
    const double scale = std::max(1.0, norm(small));
    if (!finite(big) || !finite(small)) {
      if (std::abs(hs) <= opts.min_step)
        throw DivergenceError("flow trajectory became non-finite");
      h = 0.25 * std::abs(hs);
      continue;
    }
    if (err <= opts.tol * scale || std::abs(hs) <= opts.min_step) {
      x = small + (1.0 / 15.0) * (small - big);
      t = last ? t1 : t + hs;
      const double grow = err > 0.0 ? 0.9 * std::pow(opts.tol * scale / err, 0.2) : 4.0;
      h = std::abs(hs) * std::clamp(grow, 0.2, 4.0);
    } else {
      h = std::abs(hs) * std::clamp(0.9 * std::pow(opts.tol * scale / err, 0.2), 0.1, 0.9);
    }
  }
  if (!finite(x)) throw DivergenceError("flow trajectory became non-finite");
  return x;
}

EmpiricalMeasure pushforward(const EmpiricalMeasure& measure,
                             const VelocityField& field, double t0, double t1,
                             const FlowOptions& opts) {
  measure.validate();
  if (measure.dim != field.dim())
    throw ConfigError("measure and field dimensions differ");
  EmpiricalMeasure out = measure;
  const int dim = measure.dim;
  const std::size_t m = measure.size();
  std::vector<char> failed(m, 0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < m; ++i) {
    try {
      store(out.points, i, dim, flow_map(field, measure.point(i), t0, t1, opts));
    } catch (const NumericalError&) {
      failed[i] = 1;
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    if (failed[i])
      throw DivergenceError("flow of point " + std::to_string(i) + " diverged");
  return out;
}

LipschitzReport lipschitz_flow_check(const VelocityField& field,
                                     std::span<const std::pair<Vec, Vec>> pairs,
                                     double T, const FlowOptions& opts) {
  LipschitzReport rep;
  rep.bound = std::exp(field.grad_sup() * T) * (1.0 + 1e-6);
  for (const auto& [x, y] : pairs) {
    const double d0 = norm(x - y);
    if (d0 == 0.0) continue;
    const double d1 = norm(flow_map(field, x, 0.0, T, opts) -
                           flow_map(field, y, 0.0, T, opts));
    const double ratio = d1 / d0;
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio > rep.bound) ++rep.violations;
  }
  return rep;
}

std::string StabilityReport::to_json() const {
  nlohmann::json j;
  j["p"] = p;
  j["T"] = T;
  j["grad_sup"] = grad_sup;
  j["C_min_feasible"] =
      std::isfinite(C_min_feasible) ? nlohmann::json(C_min_feasible) : nlohmann::json(nullptr);
  j["max_ratio_lipschitz"] = max_ratio_lipschitz;
  j["max_distance"] = max_distance;
  j["holds"] = holds;
  return j.dump(2);
}

StabilityReport stability_inequality_check(
    std::span<const MeasureSnapshot> rho_bar, const VelocityField& field,
    double p, double C_fit, const EmpiricalMeasure& rho0, const Domain& domain,
    const FlowOptions& opts) {
  if (!(p >= 1.0 && p <= 2.0))
    throw ConfigError("the L2 form of the stability estimate needs p in [1, 2]");
  if (rho_bar.empty()) throw ConfigError("empty comparison trajectory");
  if (!(C_fit > 0.0)) throw ConfigError("C_fit must be positive");
  const int dim = field.dim();

  StabilityReport rep;
  rep.p = p;
  rep.T = rho_bar.back().time - rho_bar.front().time;
  rep.grad_sup = field.grad_sup();
  rep.C = C_fit * std::exp(C_fit * field.grad_sup());
  rep.max_ratio_lipschitz = std::exp(field.grad_sup() * rep.T);

  const double t0 = rho_bar.front().time;
  const double d0 = wasserstein(rho_bar.front().measure, rho0, p, domain);
  double integral = 0.0, prev_rate = 0.0;
  EmpiricalMeasure rho = rho0;
  double rho_time = t0;

  for (std::size_t k = 0; k < rho_bar.size(); ++k) {
    const auto& snap = rho_bar[k];
    const auto& mb = snap.measure;
    if (snap.velocities.size() != mb.points.size())
      throw ConfigError("u_bar samples do not match the measure");
    double rate = 0.0;
    for (std::size_t i = 0; i < mb.size(); ++i) {
      const Vec du = load(snap.velocities, i, dim) - field(mb.point(i), snap.time);
      rate += mb.weights[i] * norm2(du);
    }
    if (k > 0) integral += 0.5 * (rate + prev_rate) * (snap.time - rho_bar[k - 1].time);
    prev_rate = rate;

    rho = pushforward(rho, field, rho_time, snap.time, opts);
    rho_time = snap.time;
    const double lhs = wasserstein(mb, rho, p, domain);
    const double rhs = d0 + std::sqrt(integral);
    rep.times.push_back(snap.time);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    rep.max_distance = std::max(rep.max_distance, lhs);
    if (rhs > 0.0) {
      rep.C_min_feasible = std::max(rep.C_min_feasible, lhs / rhs);
    } else if (lhs > 1e-8) {
      rep.C_min_feasible = std::numeric_limits<double>::infinity();
    }
    if (lhs > rep.C * rhs + 1e-8) rep.holds = false;
  }
  return rep;
}

}  // namespace ealign
