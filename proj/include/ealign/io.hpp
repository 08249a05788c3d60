#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ealign/limit_solver.hpp"
#include "ealign/particle_dynamics.hpp"
#include "ealign/transport.hpp"

namespace ealign {

// %.17g, round-trips every double.
std::string format_double(double x);

// t,particle,x0..x{d-1},v0..v{d-1}
std::string trajectory_csv(const Trajectory& traj);
std::string trajectory_csv(const LimitTrajectory& traj);
// t,kinetic,potential,damping_diss,alignment_diss,residual
std::string energy_csv(const Trajectory& traj);

// Point cloud with columns x0..x{d-1},w (header required). Weights are
// normalised to sum to one.
EmpiricalMeasure read_cloud_csv(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ealign
