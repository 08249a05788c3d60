#include "ealign/kernels.hpp"

#include <algorithm>

namespace ealign {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

bool is_zero(const Vec& r) { return r[0] == 0.0 && r[1] == 0.0 && r[2] == 0.0; }

}  // namespace

void Domain::validate() const {
  require(dim >= 1 && dim <= kMaxDim,
          "domain.dim must be in [1, " + std::to_string(kMaxDim) + "]");
  if (is_torus()) require(period > 0.0, "domain.period must be positive");
}

Vec displacement(const Domain& domain, const Vec& x, const Vec& y) {
  Vec d{};
  for (int a = 0; a < domain.dim; ++a) {
    double s = x[a] - y[a];
    if (domain.is_torus()) {
      const double L = domain.period;
      s -= L * std::floor(s / L);
      if (s > 0.5 * L) s -= L;
    }
    d[a] = s;
  }
  return d;
}

double wrap(const Domain& domain, double coordinate) {
  if (!domain.is_torus()) return coordinate;
  const double L = domain.period;
  double s = coordinate - L * std::floor(coordinate / L);
  if (s >= L) s -= L;  // floor rounding can land exactly on L
  return s;
}

InteractionKernel InteractionKernel::gaussian(double amplitude, double length) {
  InteractionKernel k;
  k.family = KernelFamily::gaussian;
  k.params.amplitude = amplitude;
  k.params.length = length;
  return k;
}

InteractionKernel InteractionKernel::morse_smoothed(double c_rep, double l_rep,
                                                    double c_att, double l_att,
                                                    double core) {
  InteractionKernel k;
  k.family = KernelFamily::morse_smoothed;
  k.params.c_rep = c_rep;
  k.params.l_rep = l_rep;
  k.params.c_att = c_att;
  k.params.l_att = l_att;
  k.params.core = core;
  return k;
}

InteractionKernel InteractionKernel::coulomb(int dim) {
  InteractionKernel k;
  switch (dim) {
    case 1: k.family = KernelFamily::coulomb_1d; break;
    case 2: k.family = KernelFamily::coulomb_2d; break;
    case 3: k.family = KernelFamily::coulomb_3d; break;
    default: throw UnsupportedError("Coulomb kernel requires dimension 1, 2 or 3");
  }
  return k;
}

int InteractionKernel::coulomb_dim() const {
  switch (family) {
    case KernelFamily::coulomb_1d: return 1;
    case KernelFamily::coulomb_2d: return 2;
    case KernelFamily::coulomb_3d: return 3;
    default: return 0;
  }
}

void InteractionKernel::validate() const {
  const auto& p = params;
  switch (family) {
    case KernelFamily::gaussian:
      require(p.length > 0.0, "kernel.params.length must be positive");
      require(std::isfinite(p.amplitude), "kernel.params.amplitude must be finite");
      break;
    case KernelFamily::morse_smoothed:
      require(p.c_rep >= 0.0 && p.c_att >= 0.0,
              "morse amplitudes must be non-negative");
      require(p.l_rep > 0.0 && p.l_att > 0.0 && p.core > 0.0,
              "morse lengths and core must be positive");
      break;
    default:
      break;
  }
}

double InteractionKernel::value(const Vec& r) const {
  const auto& p = params;
  switch (family) {
    case KernelFamily::gaussian:
      return p.amplitude * std::exp(-norm2(r) / (p.length * p.length));
    case KernelFamily::morse_smoothed: {
      const double q = std::sqrt(norm2(r) + p.core * p.core);
      return p.c_rep * std::exp(-q / p.l_rep) - p.c_att * std::exp(-q / p.l_att);
    }
    case KernelFamily::coulomb_1d:
      return -0.5 * std::abs(r[0]);
    case KernelFamily::coulomb_2d:
      return -std::log(norm(r)) / (2.0 * kPi);
    case KernelFamily::coulomb_3d:
      return 1.0 / (4.0 * kPi * norm(r));
    case KernelFamily::zero:
      return 0.0;
  }
  return 0.0;
}

Vec InteractionKernel::grad(const Vec& r) const {
  const auto& p = params;
  switch (family) {
    case KernelFamily::gaussian: {
      const double l2 = p.length * p.length;
      return (-2.0 * p.amplitude / l2 * std::exp(-norm2(r) / l2)) * r;
    }
    case KernelFamily::morse_smoothed: {
      const double q = std::sqrt(norm2(r) + p.core * p.core);
      const double dfdq = -p.c_rep / p.l_rep * std::exp(-q / p.l_rep) +
                          p.c_att / p.l_att * std::exp(-q / p.l_att);
      return (dfdq / q) * r;
    }
    case KernelFamily::coulomb_1d:
      // W' = -sgn(x)/2, with the midpoint value 0 at the jump
      return {r[0] > 0.0 ? -0.5 : (r[0] < 0.0 ? 0.5 : 0.0), 0.0, 0.0};
    case KernelFamily::coulomb_2d:
      return (-1.0 / (2.0 * kPi * norm2(r))) * r;
    case KernelFamily::coulomb_3d: {
      const double n = norm(r);
      return (-1.0 / (4.0 * kPi * n * n * n)) * r;
    }
    case KernelFamily::zero:
      return {};
  }
  return {};
}

void CommWeight::validate() const {
  require(K >= 0.0, "comm.K must be non-negative");
  require(beta >= 0.0, "comm.beta must be non-negative");
}

void check_compatible(const InteractionKernel& kernel, const Domain& domain) {
  if (!kernel.is_coulomb()) return;
  if (domain.is_torus())
    throw UnsupportedError(
        "Coulomb kernels are not supported on the torus (the convolution "
        "form does not hold there)");
  if (kernel.coulomb_dim() != domain.dim)
    throw UnsupportedError(to_string(kernel.family) +
                           " requires domain.dim = " +
                           std::to_string(kernel.coulomb_dim()));
}

void Model::validate() const {
  domain.validate();
  kernel.validate();
  comm.validate();
  check_compatible(kernel, domain);
}

double W_eval(const InteractionKernel& kernel, const Domain& domain,
              const Vec& r) {
  check_compatible(kernel, domain);
  if (kernel.is_coulomb() && kernel.family != KernelFamily::coulomb_1d &&
      is_zero(r))
    throw SingularityError("Coulomb potential evaluated at the origin");
  return kernel.value(r);
}

Vec grad_W(const InteractionKernel& kernel, const Domain& domain, const Vec& r) {
  check_compatible(kernel, domain);
  if (kernel.is_coulomb() && is_zero(r))
    throw SingularityError("Coulomb force evaluated at the origin");
  return kernel.grad(r);
}

double phi_eval(const CommWeight& comm, const Domain& /*domain*/, const Vec& r) {
  return comm.value(r);
}

KernelConstants kernel_constants(const InteractionKernel& kernel) {
  const auto& p = kernel.params;
  switch (kernel.family) {
    case KernelFamily::zero:
      return {0.0, 0.0};
    case KernelFamily::gaussian: {
      // |grad W| = 2|A| r exp(-r^2/l^2) / l^2 peaks at r = l/sqrt(2); the
      // Hessian's largest eigenvalue magnitude is attained at the origin.
      const double a = std::abs(p.amplitude);
      return {a * std::sqrt(2.0) * std::exp(-0.5) / p.length,
              2.0 * a / (p.length * p.length)};
    }
    case KernelFamily::morse_smoothed: {
      // grad W = g'(q) grad q with |grad q| <= 1 and |Hess q| <= 1/core.
      auto sup_term = [](double c, double l) { return c / l; };
      auto lip_term = [&](double c, double l) {
        return c / (l * l) + c / (l * p.core);
      };
      return {sup_term(p.c_rep, p.l_rep) + sup_term(p.c_att, p.l_att),
              lip_term(p.c_rep, p.l_rep) + lip_term(p.c_att, p.l_att)};
    }
    case KernelFamily::coulomb_1d:
      return {0.5, std::nullopt};
    case KernelFamily::coulomb_2d:
    case KernelFamily::coulomb_3d:
      throw UnsupportedError(to_string(kernel.family) +
                             " has no finite sup-norm for its gradient");
  }
  return {};
}

KernelConstants kernel_constants(const CommWeight& comm) {
  if (comm.family == CommFamily::constant || comm.beta == 0.0)
    return {comm.K, 0.0};
  // |phi'(r)| = 2 beta K r (1+r^2)^(-beta-1), maximised at r^2 = 1/(2 beta+1).
  const double b = comm.beta;
  const double peak = std::pow(2.0 * b + 1.0, -0.5) *
                      std::pow((2.0 * b + 1.0) / (2.0 * b + 2.0), b + 1.0);
  return {comm.K, 2.0 * b * comm.K * peak};
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::morse_smoothed: return "morse_smoothed";
    case KernelFamily::coulomb_1d: return "coulomb_1d";
    case KernelFamily::coulomb_2d: return "coulomb_2d";
    case KernelFamily::coulomb_3d: return "coulomb_3d";
    case KernelFamily::zero: return "zero";
  }
  return "?";
}

std::string to_string(CommFamily family) {
  return family == CommFamily::constant ? "constant" : "cucker_smale";
}

std::string to_string(DomainKind kind) {
  return kind == DomainKind::euclidean ? "euclidean" : "torus";
}

KernelFamily parse_kernel_family(const std::string& name) {
  for (auto f : {KernelFamily::gaussian, KernelFamily::morse_smoothed,
                 KernelFamily::coulomb_1d, KernelFamily::coulomb_2d,
                 KernelFamily::coulomb_3d, KernelFamily::zero})
    if (to_string(f) == name) return f;
  throw ConfigError("unknown kernel.family '" + name + "'");
}

CommFamily parse_comm_family(const std::string& name) {
  if (name == "constant") return CommFamily::constant;
  if (name == "cucker_smale") return CommFamily::cucker_smale;
  throw ConfigError("unknown comm.family '" + name + "'");
}

DomainKind parse_domain_kind(const std::string& name) {
  if (name == "euclidean") return DomainKind::euclidean;
  if (name == "torus") return DomainKind::torus;
  throw ConfigError("unknown domain.kind '" + name + "'");
}

}  // namespace ealign
