#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ealign/kernels.hpp"
#include "ealign/transport.hpp"

namespace ealign {

// Time-dependent velocity field u(x, t) with an estimate of sup |grad u|.
class VelocityField {
 public:
  using Eval = std::function<Vec(const Vec&, double)>;

  VelocityField(int dim, Eval eval, double grad_sup);

  // grad_sup from central differences (Frobenius norm of the Jacobian) on
  // the 64^d lattice (16^3 in 3-D) over the bounding box of `cloud` plus
  // 20%, at `time_samples` times spread over [t0, t1].
  static VelocityField estimated(int dim, Eval eval,
                                 std::span<const double> cloud, double t0,
                                 double t1, int time_samples = 5,
                                 double h = 1e-5);

  Vec operator()(const Vec& x, double t) const { return eval_(x, t); }
  int dim() const { return dim_; }
  double grad_sup() const { return grad_sup_; }

 private:
  int dim_;
  Eval eval_;
  double grad_sup_;
};

struct FlowOptions {
  double tol = 1e-11;
  double initial_step = 1e-2;
  double min_step = 1e-12;
  std::size_t max_steps = 1000000;
};

// X(t1; t0, x0) by step-doubling adaptive RK4; t1 < t0 integrates backwards.
Vec flow_map(const VelocityField& field, const Vec& x0, double t0, double t1,
             const FlowOptions& opts = {});
inline Vec flow_map(const VelocityField& field, const Vec& x0, double T) {
  return flow_map(field, x0, 0.0, T);
}

// Points moved by the flow from t0 to t1, weights unchanged.
EmpiricalMeasure pushforward(const EmpiricalMeasure& measure,
                             const VelocityField& field, double t0, double t1,
                             const FlowOptions& opts = {});
inline EmpiricalMeasure pushforward(const EmpiricalMeasure& measure,
                                    const VelocityField& field, double T) {
  return pushforward(measure, field, 0.0, T);
}

struct LipschitzReport {
  double bound = 0.0;  // exp(grad_sup T) (1 + 1e-6)
  double max_ratio = 0.0;
  std::size_t violations = 0;
  std::vector<double> ratios;

  bool passed() const { return violations == 0; }
};

LipschitzReport lipschitz_flow_check(
    const VelocityField& field, std::span<const std::pair<Vec, Vec>> pairs,
    double T, const FlowOptions& opts = {});

// One snapshot of a comparison trajectory rho_bar: its measure and the
// velocities u_bar carried by its points.
struct MeasureSnapshot {
  double time = 0.0;
  EmpiricalMeasure measure;
  std::vector<double> velocities;
};

struct StabilityReport {
  double p = 2.0;
  double T = 0.0;
  double grad_sup = 0.0;
  double C = 0.0;  // C_fit exp(C_fit grad_sup)
  double C_min_feasible = 0.0;
  double max_ratio_lipschitz = 0.0;
  double max_distance = 0.0;
  bool holds = true;
  std::vector<double> times;
  std::vector<double> lhs;  // d_p(rho_bar(t), rho(t))
  std::vector<double> rhs;  // d_p(rho_bar(0), rho(0)) + (int int |u_bar - u|^2)^(1/2)

  std::string to_json() const;
};

// rho(t) is the pushforward of rho0 by `field`. Checks
//   d_p(rho_bar(t), rho(t)) <= C [d_p(rho_bar(0), rho0) + (int_0^t int |u_bar - u|^2 drho_bar)^(1/2)]
// at every snapshot, the time integral by the trapezoid rule.
StabilityReport stability_inequality_check(
    std::span<const MeasureSnapshot> rho_bar, const VelocityField& field,
    double p, double C_fit, const EmpiricalMeasure& rho0,
    const Domain& domain, const FlowOptions& opts = {});

}  // namespace ealign
