#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ealign/kernels.hpp"
#include "ealign/pair_sums.hpp"

namespace ealign {

// Weighted point cloud; points flat (M * dim), weights positive, summing to 1.
struct EmpiricalMeasure {
  int dim = 1;
  std::vector<double> points;
  std::vector<double> weights;

  static EmpiricalMeasure uniform(std::vector<double> points, int dim);

  std::size_t size() const { return weights.size(); }
  Vec point(std::size_t i) const { return load(points, i, dim); }
  bool is_uniform() const;
  void validate() const;
};

struct CouplingPair {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
};

struct Coupling {
  std::vector<CouplingPair> pairs;

  // Throws NumericalError unless both marginals reproduce the weights to tol.
  void check_marginals(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       double tol = 1e-12) const;
  // sum mass * |x - y|^p
  double cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
              const Domain& domain) const;
};

// Exact 1-D distance by monotone rearrangement of the two quantile functions.
double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      double p);
Coupling monotone_coupling_1d(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu);

// |x_i - y_j|^p, row-major M x M, minimum image on a torus.
std::vector<double> cost_matrix(const EmpiricalMeasure& mu,
                                const EmpiricalMeasure& nu, double p,
                                const Domain& domain,
                                Exec exec = Exec::parallel);

// Minimum-cost perfect matching of a square cost matrix (Hungarian method,
// O(M^3)). Returns the column matched to each row.
std::vector<std::size_t> optimal_assignment(std::span<const double> cost,
                                            std::size_t m);

// Equal-cardinality uniform-weight measures.
double wasserstein_assignment(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, double p,
                              const Domain& domain);
double wasserstein_assignment(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, double p);
Coupling assignment_coupling(const EmpiricalMeasure& mu,
                             const EmpiricalMeasure& nu, double p,
                             const Domain& domain);

// Exhaustive search over all permutations; M <= 8.
double wasserstein_bruteforce(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, double p,
                              const Domain& domain);
double wasserstein_bruteforce(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, double p);

// Bottleneck distance min_sigma max_i |x_i - y_sigma(i)|.
double wasserstein_inf(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       const Domain& domain);
double wasserstein_inf(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);
double bottleneck_bruteforce(const EmpiricalMeasure& mu,
                             const EmpiricalMeasure& nu, const Domain& domain);

// Quantile formula on the line, assignment otherwise.
double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   double p, const Domain& domain);

// int (F_mu - F_nu)^2 dx on the line.
double cramer_energy_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

}  // namespace ealign
