#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ealign/kernels.hpp"
#include "ealign/pair_sums.hpp"

namespace ealign {

// N particles with uniform mass 1/N. Positions and velocities are stored
// flat, particle-major (N * dim).
struct ParticleState {
  double time = 0.0;
  int dim = 1;
  std::vector<double> positions;
  std::vector<double> velocities;

  std::size_t size() const { return dim > 0 ? positions.size() / dim : 0; }
  double weight() const { return 1.0 / static_cast<double>(size()); }
  Vec position(std::size_t i) const { return load(positions, i, dim); }
  Vec velocity(std::size_t i) const { return load(velocities, i, dim); }

  // Throws ConfigError on length mismatch, non-finite coordinates or torus
  // positions outside [0, period).
  void validate(const Domain& domain) const;
};

enum class Scheme { explicit_rk2, imex_exact_damping };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct SimConfig {
  double epsilon = 0.1;
  double gamma = 1.0;
  std::size_t n = 1;
  Model model{};
  double t_final = 1.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::imex_exact_damping;
  std::uint64_t seed = 0;
  // Steps between stored snapshots; 0 selects ceil(T / (100 dt)).
  std::size_t snapshot_every = 0;
  Exec exec = Exec::parallel;

  void validate() const;
  // Human-readable notes when gamma does not exceed ||phi||_inf, or is
  // within a factor two of it.
  std::vector<std::string> warnings() const;

  std::size_t step_count() const;
  // Uniform step actually taken: T / step_count() (never above dt).
  double step_size() const;
  std::size_t snapshot_cadence() const;
};

// One step of the discrete energy balance
//   d/dt [kinetic + potential] = -damping_diss - alignment_diss,
// kinetic = (eps/2N) sum |v_i|^2, potential = (1/2N^2) sum W(x_i - x_j),
// damping_diss = (gamma/N) sum |v_i|^2,
// alignment_diss = (1/2N^2) sum phi_ij |v_i - v_j|^2.
// `time`, `kinetic` and `potential` refer to the end of the step; the two
// dissipation rates are averages over the step.
struct EnergyRecord {
  double time = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double damping_diss = 0.0;
  double alignment_diss = 0.0;
  double residual = 0.0;
};

struct Trajectory {
  std::vector<ParticleState> snapshots;
  SimConfig config{};
  std::vector<EnergyRecord> energy_ledger;  // one record per time step
};

struct Rates {
  std::vector<double> position_rates;
  std::vector<double> velocity_rates;
};

Rates rhs(const ParticleState& state, const SimConfig& cfg);

// Advances by cfg.dt with cfg.scheme.
ParticleState step(const ParticleState& state, const SimConfig& cfg);

Trajectory simulate(const SimConfig& cfg, const ParticleState& init);

struct DiscreteEnergy {
  double kinetic = 0.0;
  double potential = 0.0;
  double total() const { return kinetic + potential; }
};

DiscreteEnergy discrete_energy(const ParticleState& state, const SimConfig& cfg);

// Per-step residual |d(kinetic + potential)/dt + dissipation| of the ledger.
std::vector<double> energy_balance_residual(const Trajectory& traj);

}  // namespace ealign
