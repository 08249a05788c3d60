#include "ealign/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "ealign/errors.hpp"

namespace ealign {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "domain.kind",          "domain.dim",          "domain.period",
      "kernel.family",        "kernel.params.amplitude",
      "kernel.params.length", "kernel.params.c_rep", "kernel.params.l_rep",
      "kernel.params.c_att",  "kernel.params.l_att", "kernel.params.core",
      "comm.family",          "comm.K",              "comm.beta",
      "sim.epsilon",          "sim.gamma",           "sim.n",
      "sim.t_final",          "sim.dt",              "sim.scheme",
      "sim.seed",             "sim.snapshot_every",  "sim.threads",
      "init.density",         "init.center",         "init.spread",
      "init.separation",      "init.velocities",
      "study.epsilons",       "study.p",             "study.functionals",
      "study.workers",        "study.svg",           "study.entropy",
      "verify.energy_bound",  "verify.p",            "verify.c_fit",
      "verify.pairs",         "verify.tol"};
  return keys;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  }
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  cfg.check_known();
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ConfigFile::get(const std::string& key,
                            const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(key, it->second);
}

long long ConfigFile::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long long v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
  return v;
}

std::uint64_t ConfigFile::get_u64(const std::string& key,
                                  std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s + "' is not an unsigned integer");
  return v;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false");
}

std::vector<double> ConfigFile::get_list(const std::string& key) const {
  std::vector<double> out;
  const auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

void ConfigFile::check_known() const {
  for (const auto& [k, v] : values_)
    if (!known_keys().count(k)) throw ConfigError("unknown config key '" + k + "'");
}

std::string ConfigFile::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::gaussian: return "gaussian";
    case DensityKind::uniform: return "uniform";
    default: return "two_cluster";
  }
}

DensityKind parse_density_kind(const std::string& name) {
  if (name == "gaussian") return DensityKind::gaussian;
  if (name == "uniform") return DensityKind::uniform;
  if (name == "two_cluster") return DensityKind::two_cluster;
  throw ConfigError("unknown init.density '" + name + "'");
}

Model model_from(const ConfigFile& cfg) {
  Model m;
  const auto dim = cfg.get_int("domain.dim", 1);
  if (dim < 1 || dim > kMaxDim) throw ConfigError("domain.dim must be in [1, 3]");
  m.domain.kind = parse_domain_kind(cfg.get("domain.kind", "euclidean"));
  m.domain.dim = static_cast<int>(dim);
  m.domain.period = cfg.get_double("domain.period", 1.0);

  m.kernel.family = parse_kernel_family(cfg.get("kernel.family", "gaussian"));
  auto& p = m.kernel.params;
  p.amplitude = cfg.get_double("kernel.params.amplitude", p.amplitude);
  p.length = cfg.get_double("kernel.params.length", p.length);
  p.c_rep = cfg.get_double("kernel.params.c_rep", p.c_rep);
  p.l_rep = cfg.get_double("kernel.params.l_rep", p.l_rep);
  p.c_att = cfg.get_double("kernel.params.c_att", p.c_att);
  p.l_att = cfg.get_double("kernel.params.l_att", p.l_att);
  p.core = cfg.get_double("kernel.params.core", p.core);

  m.comm.family = parse_comm_family(cfg.get("comm.family", "cucker_smale"));
  m.comm.K = cfg.get_double("comm.K", 1.0);
  m.comm.beta = cfg.get_double("comm.beta", 1.0);
  m.validate();
  return m;
}

SimConfig sim_config_from(const ConfigFile& cfg) {
  SimConfig s;
  s.model = model_from(cfg);
  s.epsilon = cfg.get_double("sim.epsilon", s.epsilon);
  s.gamma = cfg.get_double("sim.gamma", s.gamma);
  const auto n = cfg.get_int("sim.n", 64);
  if (n < 1) throw ConfigError("sim.n must be positive");
  s.n = static_cast<std::size_t>(n);
  s.t_final = cfg.get_double("sim.t_final", s.t_final);
  s.dt = cfg.get_double("sim.dt", s.dt);
  s.scheme = parse_scheme(cfg.get("sim.scheme", to_string(s.scheme)));
  s.seed = cfg.get_u64("sim.seed", 0);
  const auto every = cfg.get_int("sim.snapshot_every", 0);
  if (every < 0) throw ConfigError("sim.snapshot_every must be non-negative");
  s.snapshot_every = static_cast<std::size_t>(every);
  return s;
}

DensitySpec density_from(const ConfigFile& cfg) {
  DensitySpec d;
  d.kind = parse_density_kind(cfg.get("init.density", "two_cluster"));
  d.center = cfg.get_double("init.center", d.center);
  d.spread = cfg.get_double("init.spread", d.spread);
  d.separation = cfg.get_double("init.separation", d.separation);
  if (!(d.spread > 0.0)) throw ConfigError("init.spread must be positive");
  return d;
}

}  // namespace ealign
