#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include "ealign/pair_sums.hpp"
#include "ealign/rng.hpp"

using namespace ealign;

namespace {

std::vector<double> randn(Rng& rng, std::size_t n, double s) {
  std::vector<double> v(n);
  for (auto& x : v) x = s * rng.normal();
  return v;
}

Model make(int dim, InteractionKernel k) {
  Model m;
  m.domain = Domain::euclidean(dim);
  m.kernel = k;
  m.comm = CommWeight::cucker_smale(1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("parallel pair sums equal the serial reference bit for bit") {
  omp_set_num_threads(4);
  Rng rng(1);
  for (int dim = 1; dim <= 3; ++dim) {
    for (const auto& k : {InteractionKernel::gaussian(), InteractionKernel::coulomb(dim)}) {
      const auto m = make(dim, k);
      const std::size_t n = 97;
      const auto x = randn(rng, n * dim, 1.0), v = randn(rng, n * dim, 1.0);
      const auto a = pair_sums(m, x, v, Exec::parallel);
      const auto b = reference::pair_sums(m, x, v);
      CHECK(a.force == b.force);
      CHECK(a.phi_mean == b.phi_mean);
      CHECK(a.phi_v == b.phi_v);
      CHECK(potential_energy(m, x, Exec::parallel) == potential_energy(m, x, Exec::serial));
      CHECK(phi_matrix(m, x, Exec::parallel) == phi_matrix(m, x, Exec::serial));
    }
  }
}

TEST_CASE("pair sums against a direct double loop") {
  Rng rng(3);
  const int dim = 2;
  const std::size_t n = 9;
  const auto m = make(dim, InteractionKernel::gaussian(-0.5, 0.7));
  const auto x = randn(rng, n * dim, 1.0), v = randn(rng, n * dim, 1.0);
  const auto s = pair_sums(m, x, v);
  for (std::size_t i = 0; i < n; ++i) {
    Vec f{}, pv{};
    double pm = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const Vec r = load(x, i, dim) - load(x, j, dim);
      const Vec g = grad_W(m.kernel, m.domain, r);
      const double ph = phi_eval(m.comm, m.domain, r);
      for (int a = 0; a < dim; ++a) {
        f[a] += g[a] / n;
        pv[a] += ph * v[j * dim + a] / n;
      }
      pm += ph / n;
    }
    CHECK(s.phi_mean[i] == doctest::Approx(pm).epsilon(1e-14));
    for (int a = 0; a < dim; ++a) {
      CHECK(s.force[i * dim + a] == doctest::Approx(f[a]).epsilon(1e-13));
      CHECK(s.phi_v[i * dim + a] == doctest::Approx(pv[a]).epsilon(1e-13));
    }
  }
}

TEST_CASE("coincident Coulomb particles are reported with their indices") {
  const auto m = make(1, InteractionKernel::coulomb(1));
  const std::vector<double> x{0.0, 0.3, 0.0};
  try {
    pair_sums(m, x, {});
    FAIL("expected a singularity");
  } catch (const SingularityError& e) {
    CHECK(e.first == 0);
    CHECK(e.second == 2);
  }
}

TEST_CASE("jacobi sweep matches reference") {
  Rng rng(8);
  const int dim = 2;
  const std::size_t n = 40;
  const auto m = make(dim, InteractionKernel::gaussian());
  const auto x = randn(rng, n * dim, 1.0), v = randn(rng, n * dim, 1.0);
  const auto s = pair_sums(m, x, {});
  const auto phi = phi_matrix(m, x);
  std::vector<double> a(n * dim), b(n * dim);
  jacobi_sweep(phi, s.force, s.phi_mean, 3.0, dim, v, a, Exec::parallel);
  reference::jacobi_sweep(phi, s.force, s.phi_mean, 3.0, dim, v, b);
  CHECK(a == b);
}

TEST_CASE("potential energy of a Coulomb pair") {
  const auto m = make(1, InteractionKernel::coulomb(1));
  CHECK(potential_energy(m, std::vector<double>{0.0, 1.0}) == doctest::Approx(-0.125));
  const auto z = make(1, InteractionKernel::zero());
  CHECK(potential_energy(z, std::vector<double>{0.0, 1.0}) == 0.0);
}
