#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ealign/particle_dynamics.hpp"

namespace ealign {

// Flat `section.key = value` file. Blank lines and lines starting with '#'
// are ignored; anything else without '=' is an error.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Throws ConfigError naming the first key that is not recognised.
  void check_known() const;

  // Sorted `key = value` lines; stable input for hashing.
  std::string canonical() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

enum class DensityKind { gaussian, uniform, two_cluster };

std::string to_string(DensityKind kind);
DensityKind parse_density_kind(const std::string& name);

// Initial particle cloud. gaussian: center + spread * N(0, 1) per axis;
// uniform: the box [center - spread, center + spread]^d; two_cluster: two
// gaussian blobs of width `spread` centred at center -/+ separation/2 on the
// first axis, N/2 points in the first.
struct DensitySpec {
  DensityKind kind = DensityKind::two_cluster;
  double center = 0.0;
  double spread = 0.1;
  double separation = 1.0;
};

Model model_from(const ConfigFile& cfg);
SimConfig sim_config_from(const ConfigFile& cfg);
DensitySpec density_from(const ConfigFile& cfg);

}  // namespace ealign
