// Plain serial versions of the pair kernels. These go through the checked
// kernel API one pair at a time and exist to validate the OpenMP paths.
#include "ealign/pair_sums.hpp"

namespace ealign::reference {

PairSums pair_sums(const Model& model, std::span<const double> x,
                   std::span<const double> v) {
  const int dim = model.domain.dim;
  const std::size_t n = x.size() / dim;
  const bool with_v = !v.empty();
  const double inv_n = 1.0 / static_cast<double>(n);

  PairSums out;
  out.force.assign(n * dim, 0.0);
  out.phi_mean.assign(n, 0.0);
  if (with_v) out.phi_v.assign(n * dim, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    Vec f{}, pv{};
    double pm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Vec r = displacement(model.domain, load(x, i, dim), load(x, j, dim));
      if (j != i) {
        if (model.kernel.is_coulomb() && r == Vec{}) throw SingularityError(i, j);
        f = f + grad_W(model.kernel, model.domain, r);
      }
      const double w = phi_eval(model.comm, model.domain, r);
      pm += w;
      if (with_v) pv = pv + w * load(v, j, dim);
    }
    store(out.force, i, dim, inv_n * f);
    out.phi_mean[i] = inv_n * pm;
    if (with_v) store(out.phi_v, i, dim, inv_n * pv);
  }
  return out;
}

void jacobi_sweep(std::span<const double> phi, std::span<const double> force,
                  std::span<const double> phi_mean, double gamma, int dim,
                  std::span<const double> v_old, std::span<double> v_new) {
  const std::size_t n = phi_mean.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += phi[i * n + j] * v_old[j * dim + a];
      v_new[i * dim + a] = (-force[i * dim + a] + inv_n * acc) / (gamma + phi_mean[i]);
    }
  }
}

}  // namespace ealign::reference
