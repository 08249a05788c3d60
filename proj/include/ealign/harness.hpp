#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ealign/config.hpp"
#include "ealign/entropy.hpp"
#include "ealign/limit_solver.hpp"
#include "ealign/particle_dynamics.hpp"

namespace ealign {

inline constexpr const char* kCodeVersion = "0.1.0";

std::vector<double> sample_positions(const DensitySpec& density, std::size_t n,
                                     const Domain& domain, std::uint64_t seed);

struct InitialData {
  ParticleState eps_state;              // velocities solved from positions
  std::vector<double> limit_positions;  // identical positions
};

// Shared positions for both systems; the eps-run starts on the limit
// velocities, so the initial density gap and relative kinetic energy vanish.
InitialData well_prepared_init(const DensitySpec& density, std::size_t n,
                               std::uint64_t seed, const SimConfig& cfg);

// Least-squares line through (log eps, log value), zeros dropped.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square log residual
  std::size_t points = 0;
  bool exact = false;     // every value was zero
};

RateFit fit_rate(std::span<const std::pair<double, double>> points);

// Functional names understood by the sweep:
//   rel_kinetic_sup, rel_kinetic_timeint, wass_sup, coulomb_energy_sup,
//   coulomb_energy_timeint, position_error_sup,
// and the derived combined_sup = sup_t (R + d_p^2), combined_timeint =
// int R dt + sup_t d_p^2, added whenever rel_kinetic and wass are requested.
const std::vector<std::string>& known_functionals();

struct StudySpec {
  SimConfig base{};
  DensitySpec density{};
  std::vector<double> epsilons;
  double p = 2.0;
  std::vector<std::string> functionals;
  std::filesystem::path output_dir;  // empty: nothing is written
  int workers = 1;
  bool svg = true;
  bool entropy = true;
  std::string config_text;  // canonical config, hashed into the report

  void validate() const;
};

StudySpec study_from(const ConfigFile& cfg);

struct EpsilonRow {
  double epsilon = 0.0;
  std::map<std::string, double> values;
};

struct RateReport {
  std::vector<EpsilonRow> rows;
  std::map<std::string, RateFit> slopes;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t snapshot_cadence = 0;
  std::string error;

  std::string to_json() const;
};

// Per-snapshot values of the comparison functionals between a particle run
// and the limit run, reduced to sups and trapezoid time integrals.
std::map<std::string, double> evaluate_functionals(
    const Trajectory& eps_run, const LimitTrajectory& limit_run, double p,
    const std::vector<std::string>& names);

RateReport epsilon_sweep(const StudySpec& study);

std::string rates_svg(const RateReport& report);

// Writes manifest.json listing every file in `files` (names relative to dir)
// with its SHA-256.
void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& files,
                    const std::string& config_hash, std::uint64_t seed,
                    std::size_t snapshot_cadence, double dt);

}  // namespace ealign
