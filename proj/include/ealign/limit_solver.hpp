#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ealign/kernels.hpp"
#include "ealign/pair_sums.hpp"
#include "ealign/particle_dynamics.hpp"

namespace ealign {

struct SolveOptions {
  double tol = 1e-12;
  std::size_t max_iterations = 10000;
  Exec exec = Exec::parallel;
  // Keep ||v^{k+1} - v^k||_inf for every sweep.
  bool record_increments = false;
};

struct VelocitySolution {
  std::vector<double> velocities;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::vector<double> increments;
};

// Solves (gamma + (1/N) sum_j phi_ij) v_i = -(1/N) sum_j grad W_ij
//                                          + (1/N) sum_j phi_ij v_j
// by Jacobi iteration. `guess` (optional, N*dim) seeds the iteration.
// Throws ContractionError if gamma <= ||phi||_inf, IterationLimitError if
// the componentwise residual stays above tol.
VelocitySolution solve_velocity(const Model& model, double gamma,
                                std::span<const double> positions,
                                const SolveOptions& opts = {},
                                std::span<const double> guess = {});

std::vector<double> solve_velocity(std::span<const double> positions,
                                   const SimConfig& cfg, double tol = 1e-12);

struct LimitState {
  double time = 0.0;
  int dim = 1;
  std::vector<double> positions;
  std::vector<double> velocities;
  double residual = 0.0;
  std::size_t iterations = 0;

  std::size_t size() const { return dim > 0 ? positions.size() / dim : 0; }
};

struct LimitTrajectory {
  std::vector<LimitState> snapshots;
  SimConfig config{};
};

// Heun's method on dx_i/dt = v_i(x), velocities re-solved at every stage.
// Uses the step count and snapshot cadence of cfg; cfg.epsilon is ignored.
LimitTrajectory simulate_limit(const SimConfig& cfg,
                               std::span<const double> init_positions,
                               double tol = 1e-12);

// (1/N) sum_j grad W(x - x_j) over the points of `cloud`, skipping exact
// coincidences (grad W(0) := 0, the midpoint of the 1-D Coulomb jump).
Vec force_convolution(const Model& model, std::span<const double> cloud,
                      const Vec& x);

// Velocity field of the limit system away from the particles:
//   u(x) = [-(grad W * rho)(x) + (phi * (rho u))(x)] / (gamma + (phi * rho)(x))
// with rho the empirical measure of the limit particles and u_j their solved
// velocities. For the 1-D Coulomb kernel, grad W * rho = 1/2 - F is taken
// with F the piecewise-linear interpolant of the midpoint CDF through
// (x_(k), (k - 1/2)/N), so that u is continuous; at the particles it
// reproduces the solved velocities.
class ContinuumVelocity {
 public:
  ContinuumVelocity(const Model& model, double gamma,
                    std::vector<double> positions,
                    std::vector<double> velocities);
  ContinuumVelocity(const Model& model, double gamma, const LimitState& state)
      : ContinuumVelocity(model, gamma, state.positions, state.velocities) {}

  Vec operator()(const Vec& x) const;
  Vec force(const Vec& x) const;
  int dim() const { return model_.domain.dim; }
  std::span<const double> positions() const { return x_; }
  std::span<const double> velocities() const { return v_; }

 private:
  double interpolated_cdf(double x) const;

  Model model_;
  double gamma_;
  std::vector<double> x_;
  std::vector<double> v_;
  std::vector<double> knots_x_;
  std::vector<double> knots_f_;
};

// Time-dependent field from a limit trajectory, linear in t between
// snapshots and constant outside [t_0, t_end].
class LimitVelocityField {
 public:
  explicit LimitVelocityField(const LimitTrajectory& traj);

  Vec operator()(const Vec& x, double t) const;
  const ContinuumVelocity& at_snapshot(std::size_t k) const {
    return fields_[k];
  }
  std::span<const double> times() const { return times_; }
  int dim() const { return dim_; }

 private:
  std::vector<ContinuumVelocity> fields_;
  std::vector<double> times_;
  int dim_ = 1;
};

struct VelocityBoundsReport {
  double sup_u = 0.0;
  double bound_u = 0.0;
  double sup_grad_u = 0.0;
  std::optional<double> bound_grad_u;
  double sup_dt_u = 0.0;
  std::optional<double> bound_dt_u;
  double gamma_threshold = 0.0;  // ||phi||_inf
  bool near_threshold = false;   // gamma < 2 ||phi||_inf
  // est_u1 check per snapshot: max_i |u(x_i)| <= sup|grad W * rho| / (gamma - ||phi||)
  std::vector<double> snapshot_sup_u;
  std::vector<double> snapshot_bound_u;

  bool holds() const;
  std::string to_json() const;
};

VelocityBoundsReport velocity_bounds_report(const LimitTrajectory& traj,
                                            const SimConfig& cfg);

}  // namespace ealign
