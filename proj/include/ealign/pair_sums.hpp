#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ealign/kernels.hpp"

namespace ealign {

// Execution policy for the O(N^2) pair loops. `serial` is the plain
// reference implementation kept for testing; `parallel` distributes the
// outer particle index over OpenMP threads. Both visit j in increasing order
// for every i, so they agree bit for bit.
enum class Exec { serial, parallel };

// Nonlocal sums for one configuration of N particles (flat arrays, N*dim):
//   force[i]    = (1/N) sum_j grad W(x_i - x_j)
//   phi_mean[i] = (1/N) sum_j phi(x_i - x_j)
//   phi_v[i]    = (1/N) sum_j phi(x_i - x_j) v_j      (empty if v is empty)
// The j = i term contributes nothing to `force`; it is included in the two
// phi sums, where it cancels in the alignment force phi_v - phi_mean * v.
struct PairSums {
  std::vector<double> force;
  std::vector<double> phi_mean;
  std::vector<double> phi_v;

  Vec alignment(std::size_t i, int dim, std::span<const double> v) const;
};

// Throws SingularityError (with the pair's indices) if two distinct
// particles coincide under a Coulomb kernel.
PairSums pair_sums(const Model& model, std::span<const double> x,
                   std::span<const double> v, Exec exec = Exec::parallel);

// Dense phi_ij = phi(x_i - x_j), row-major N x N.
std::vector<double> phi_matrix(const Model& model, std::span<const double> x,
                               Exec exec = Exec::parallel);

// (1/(2N^2)) sum_{i,j} W(x_i - x_j); the diagonal is skipped for Coulomb
// families in d >= 2, where W(0) is infinite.
double potential_energy(const Model& model, std::span<const double> x,
                        Exec exec = Exec::parallel);

// One Jacobi sweep of the overdamped velocity relation
//   (gamma + phi_mean_i) v_i = -force_i + (1/N) sum_j phi_ij v_j,
// reading `v_old` and writing `v_new` (double buffering).
void jacobi_sweep(std::span<const double> phi, std::span<const double> force,
                  std::span<const double> phi_mean, double gamma, int dim,
                  std::span<const double> v_old, std::span<double> v_new,
                  Exec exec = Exec::parallel);

// Componentwise residual max_i |(gamma + phi_mean_i) v_i + force_i
//   - (1/N) sum_j phi_ij v_j|.
double jacobi_residual(std::span<const double> phi,
                       std::span<const double> force,
                       std::span<const double> phi_mean, double gamma, int dim,
                       std::span<const double> v, Exec exec = Exec::parallel);

namespace reference {

// Serial, unoptimised counterparts of the kernels above.
PairSums pair_sums(const Model& model, std::span<const double> x,
                   std::span<const double> v);
void jacobi_sweep(std::span<const double> phi, std::span<const double> force,
                  std::span<const double> phi_mean, double gamma, int dim,
                  std::span<const double> v_old, std::span<double> v_new);

}  // namespace reference

}  // namespace ealign
