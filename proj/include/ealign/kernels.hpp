#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "ealign/errors.hpp"
#include "ealign/vec.hpp"

namespace ealign {

enum class DomainKind { euclidean, torus };

struct Domain {
  DomainKind kind = DomainKind::euclidean;
  int dim = 1;
  double period = 1.0;  // per axis, torus only

  static Domain euclidean(int dim) { return {DomainKind::euclidean, dim, 1.0}; }
  static Domain torus(int dim, double period) {
    return {DomainKind::torus, dim, period};
  }

  bool is_torus() const { return kind == DomainKind::torus; }
  void validate() const;
};

// Minimum-image displacement x - y. On the torus each component lands in
// (-period/2, period/2].
Vec displacement(const Domain& domain, const Vec& x, const Vec& y);

// Maps a torus coordinate into [0, period); identity on euclidean domains.
double wrap(const Domain& domain, double coordinate);

enum class KernelFamily {
  gaussian,
  morse_smoothed,
  coulomb_1d,
  coulomb_2d,
  coulomb_3d,
  zero
};

// Family parameters. gaussian uses amplitude/length:
//   W(x) = amplitude * exp(-|x|^2 / length^2)
// (amplitude > 0 is repulsive, < 0 attractive). morse_smoothed uses
//   W(x) = c_rep exp(-q/l_rep) - c_att exp(-q/l_att),  q = sqrt(|x|^2 + core^2).
struct KernelParams {
  double amplitude = 1.0;
  double length = 1.0;
  double c_rep = 1.0;
  double l_rep = 0.5;
  double c_att = 1.0;
  double l_att = 2.0;
  double core = 0.1;
};

struct InteractionKernel {
  KernelFamily family = KernelFamily::zero;
  KernelParams params{};

  static InteractionKernel zero() { return {}; }
  static InteractionKernel gaussian(double amplitude = 1.0, double length = 1.0);
  static InteractionKernel morse_smoothed(double c_rep, double l_rep,
                                          double c_att, double l_att,
                                          double core);
  static InteractionKernel coulomb(int dim);

  bool is_coulomb() const {
    return family == KernelFamily::coulomb_1d ||
           family == KernelFamily::coulomb_2d ||
           family == KernelFamily::coulomb_3d;
  }
  // Spatial dimension the Coulomb family is the fundamental solution for.
  int coulomb_dim() const;

  void validate() const;
  // Unchecked evaluations; callers go through W_eval / grad_W or the pair
  // kernels, which reject singular arguments.
  double value(const Vec& r) const;
  Vec grad(const Vec& r) const;
};

enum class CommFamily { constant, cucker_smale };

// phi(x) = K                         (constant)
// phi(x) = K / (1 + |x|^2)^beta      (cucker_smale)
struct CommWeight {
  CommFamily family = CommFamily::constant;
  double K = 0.0;
  double beta = 0.0;

  static CommWeight constant(double K) { return {CommFamily::constant, K, 0.0}; }
  static CommWeight cucker_smale(double K, double beta) {
    return {CommFamily::cucker_smale, K, beta};
  }

  void validate() const;
  double value(const Vec& r) const {
    if (family == CommFamily::constant) return K;
    const double s = 1.0 + norm2(r);
    if (beta == 1.0) return K / s;
    return K * std::pow(s, -beta);
  }
  double sup() const { return K; }
};

// Interaction kernel, communication weight and geometry of one system.
struct Model {
  Domain domain{};
  InteractionKernel kernel{};
  CommWeight comm{};

  void validate() const;
};

// Throws UnsupportedError for Coulomb on a torus or a Coulomb family whose
// dimension differs from the domain's.
void check_compatible(const InteractionKernel& kernel, const Domain& domain);

double W_eval(const InteractionKernel& kernel, const Domain& domain,
              const Vec& r);
Vec grad_W(const InteractionKernel& kernel, const Domain& domain, const Vec& r);
double phi_eval(const CommWeight& comm, const Domain& domain, const Vec& r);

// Certified sup-norm and Lipschitz constant. For an interaction kernel these
// refer to grad W; for a communication weight to phi itself. An empty
// optional means the constant does not exist (e.g. Lip of the 1-D Coulomb
// force, which jumps at the origin).
struct KernelConstants {
  std::optional<double> sup_norm;
  std::optional<double> lip_const;
};

KernelConstants kernel_constants(const InteractionKernel& kernel);
KernelConstants kernel_constants(const CommWeight& comm);

std::string to_string(KernelFamily family);
std::string to_string(CommFamily family);
std::string to_string(DomainKind kind);
KernelFamily parse_kernel_family(const std::string& name);
CommFamily parse_comm_family(const std::string& name);
DomainKind parse_domain_kind(const std::string& name);

}  // namespace ealign
