#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ealign/limit_solver.hpp"
#include "ealign/particle_dynamics.hpp"

namespace ealign {

using PointField = std::function<Vec(const Vec&)>;

// (1/N) sum_i |v_i - u(x_i)|^2
double relative_kinetic(const ParticleState& state, const PointField& u);

// Instantaneous rates of the relative-entropy balance
//   d/dt (R/2) + (gamma/eps) R = I2 + I3 + I4 + I5 - align_diss / eps
// for the particle state rho^eps against the limit field u (whose empirical
// measure rho is carried by the ContinuumVelocity). With w_i = v_i - u(x_i):
//   R          = (1/N) sum |w_i|^2
//   I2         = -(1/N) sum w_i . grad u(x_i) w_i
//   I3         = -(1/eps)(1/N) sum w_i . (grad W * (rho^eps - rho))(x_i)
//   I4         = -(1/N) sum w_i . e(x_i),   e = d_t u + (u . grad) u
//   I5         = (1/eps)(1/N) sum w_i . [ (phi * ((u(.) - u(x_i)) rho^eps))(x_i)
//                                       - (phi * ((u(.) - u(x_i)) rho))(x_i) ]
//   align_diss = (1/2N^2) sum phi_ij |w_i - w_j|^2
struct RelativeEntropyBreakdown {
  double time = 0.0;
  double rel_kinetic = 0.0;
  double I2 = 0.0;
  double I3 = 0.0;
  double I4 = 0.0;
  double I5 = 0.0;
  double alignment_rel_diss = 0.0;
};

// grad u by central differences with step h (throws ConfigError if h is not
// a usable positive step).
RelativeEntropyBreakdown entropy_breakdown(const ParticleState& state,
                                           const ContinuumVelocity& u,
                                           const PointField& e,
                                           const SimConfig& cfg,
                                           double h = 1e-4);

// e = d_t u + (u . grad) u at snapshot k of a limit trajectory: central
// differences across neighbouring snapshots in time (one-sided at the ends)
// and step h in space.
Vec acceleration_field(const LimitVelocityField& field, std::size_t k,
                       const Vec& x, double h = 1e-4);

// Breakdown at every snapshot of a paired run (snapshot times must agree).
std::vector<RelativeEntropyBreakdown> entropy_history(
    const Trajectory& eps_run, const LimitTrajectory& limit_run,
    double h = 1e-4);

std::string to_json(const std::vector<RelativeEntropyBreakdown>& rows);

// Per-interval residual of the 1-D Coulomb identity
//   (1/2) d/dt int |F_eps - F_rho|^2 = int D (rho u - rho^eps u^eps),
// D = F_eps - F_rho taken with the midpoint convention at jumps: the time
// derivative by forward differences, the right side by the trapezoid rule.
std::vector<double> lemma51_residual(const Trajectory& eps_run,
                                     const LimitTrajectory& limit_run);

// Throws ConfigError unless the two runs share their snapshot times.
void check_aligned(const Trajectory& eps_run, const LimitTrajectory& limit_run);

}  // namespace ealign
