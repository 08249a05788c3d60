#include "ealign/pair_sums.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ealign {

namespace {

constexpr std::size_t kNoPair = std::numeric_limits<std::size_t>::max();

std::vector<Vec> load_all(std::span<const double> flat, int dim) {
  const std::size_t n = flat.size() / dim;
  std::vector<Vec> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = load(flat, i, dim);
  return out;
}

bool coincident(const Vec& r) {
  return r[0] == 0.0 && r[1] == 0.0 && r[2] == 0.0;
}

}  // namespace

Vec PairSums::alignment(std::size_t i, int dim, std::span<const double> v) const {
  const Vec pv = load(phi_v, i, dim);
  const Vec vi = load(v, i, dim);
  return pv - phi_mean[i] * vi;
}

PairSums pair_sums(const Model& model, std::span<const double> x,
                   std::span<const double> v, Exec exec) {
  if (exec == Exec::serial) return reference::pair_sums(model, x, v);

  const int dim = model.domain.dim;
  const std::size_t n = x.size() / dim;
  const bool with_v = !v.empty();
  const bool singular = model.kernel.is_coulomb();
  const auto pos = load_all(x, dim);
  const auto vel = with_v ? load_all(v, dim) : std::vector<Vec>{};

  PairSums out;
  out.force.assign(n * dim, 0.0);
  out.phi_mean.assign(n, 0.0);
  if (with_v) out.phi_v.assign(n * dim, 0.0);
  std::vector<std::size_t> bad(n, kNoPair);
  const double inv_n = 1.0 / static_cast<double>(n);

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const Vec xi = pos[i];
    Vec f{}, pv{};
    double pm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Vec r = displacement(model.domain, xi, pos[j]);
      if (j != i) {
        if (singular && coincident(r)) {
          if (bad[i] == kNoPair) bad[i] = j;
          continue;
        }
        f = f + model.kernel.grad(r);
      }
      const double w = model.comm.value(r);
      pm += w;
      if (with_v) pv = pv + w * vel[j];
    }
    store(out.force, i, dim, inv_n * f);
    out.phi_mean[i] = inv_n * pm;
    if (with_v) store(out.phi_v, i, dim, inv_n * pv);
  }

  for (std::size_t i = 0; i < n; ++i)
    if (bad[i] != kNoPair) throw SingularityError(i, bad[i]);
  return out;
}

std::vector<double> phi_matrix(const Model& model, std::span<const double> x,
                               Exec exec) {
  const int dim = model.domain.dim;
  const std::size_t n = x.size() / dim;
  const auto pos = load_all(x, dim);
  std::vector<double> phi(n * n);
  auto row = [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j)
      phi[i * n + j] =
          model.comm.value(displacement(model.domain, pos[i], pos[j]));
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) row(i);
  }
  return phi;
}

double potential_energy(const Model& model, std::span<const double> x,
                        Exec exec) {
  const int dim = model.domain.dim;
  const std::size_t n = x.size() / dim;
  const auto pos = load_all(x, dim);
  const bool skip_diag = model.kernel.is_coulomb() &&
                         model.kernel.family != KernelFamily::coulomb_1d;
  std::vector<double> rows(n, 0.0);
  auto row = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (skip_diag && j == i) continue;
      s += model.kernel.value(displacement(model.domain, pos[i], pos[j]));
    }
    rows[i] = s;
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) row(i);
  }
  double total = 0.0;
  for (double r : rows) total += r;
  const double nn = static_cast<double>(n);
  return total / (2.0 * nn * nn);
}

void jacobi_sweep(std::span<const double> phi, std::span<const double> force,
                  std::span<const double> phi_mean, double gamma, int dim,
                  std::span<const double> v_old, std::span<double> v_new,
                  Exec exec) {
  if (exec == Exec::serial) {
    reference::jacobi_sweep(phi, force, phi_mean, gamma, dim, v_old, v_new);
    return;
  }
  const std::size_t n = phi_mean.size();
  const double inv_n = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = phi.data() + i * n;
    double acc[kMaxDim] = {0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j)
      for (int a = 0; a < dim; ++a) acc[a] += row[j] * v_old[j * dim + a];
    const double denom = gamma + phi_mean[i];
    for (int a = 0; a < dim; ++a)
      v_new[i * dim + a] = (-force[i * dim + a] + inv_n * acc[a]) / denom;
  }
}

double jacobi_residual(std::span<const double> phi,
                       std::span<const double> force,
                       std::span<const double> phi_mean, double gamma, int dim,
                       std::span<const double> v, Exec exec) {
  const std::size_t n = phi_mean.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> rows(n, 0.0);
  auto row_residual = [&](std::size_t i) {
    const double* row = phi.data() + i * n;
    double acc[kMaxDim] = {0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j)
      for (int a = 0; a < dim; ++a) acc[a] += row[j] * v[j * dim + a];
    double worst = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double r = (gamma + phi_mean[i]) * v[i * dim + a] +
                       force[i * dim + a] - inv_n * acc[a];
      worst = std::max(worst, std::abs(r));
    }
    rows[i] = worst;
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) row_residual(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) row_residual(i);
  }
  return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

}  // namespace ealign
