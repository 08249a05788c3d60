#include "ealign/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ealign/errors.hpp"

namespace ealign {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string header(int dim) {
  std::string h = "t,particle";
  for (int a = 0; a < dim; ++a) h += ",x" + std::to_string(a);
  for (int a = 0; a < dim; ++a) h += ",v" + std::to_string(a);
  return h + "\n";
}

template <class Snap>
void append_rows(std::string& out, const Snap& s) {
  const std::size_t n = s.positions.size() / s.dim;
  for (std::size_t i = 0; i < n; ++i) {
    out += format_double(s.time);
    out += ',' + std::to_string(i);
    for (int a = 0; a < s.dim; ++a) out += ',' + format_double(s.positions[i * s.dim + a]);
    for (int a = 0; a < s.dim; ++a) out += ',' + format_double(s.velocities[i * s.dim + a]);
    out += '\n';
  }
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = header(traj.config.model.domain.dim);
  for (const auto& s : traj.snapshots) append_rows(out, s);
  return out;
}

std::string trajectory_csv(const LimitTrajectory& traj) {
  std::string out = header(traj.config.model.domain.dim);
  for (const auto& s : traj.snapshots) append_rows(out, s);
  return out;
}

std::string energy_csv(const Trajectory& traj) {
  std::string out = "t,kinetic,potential,damping_diss,alignment_diss,residual\n";
  for (const auto& r : traj.energy_ledger) {
    out += format_double(r.time) + ',' + format_double(r.kinetic) + ',' +
           format_double(r.potential) + ',' + format_double(r.damping_diss) + ',' +
           format_double(r.alignment_diss) + ',' + format_double(r.residual) + '\n';
  }
  return out;
}

EmpiricalMeasure read_cloud_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
      while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
      cols.push_back(c);
    }
  }
  const int dim = static_cast<int>(cols.size()) - 1;
  if (dim < 1 || dim > kMaxDim || cols.back() != "w")
    throw ConfigError(path.string() + ": expected header x0..x{d-1},w");
  for (int a = 0; a < dim; ++a)
    if (cols[a] != "x" + std::to_string(a))
      throw ConfigError(path.string() + ": expected header x0..x{d-1},w");

  EmpiricalMeasure m;
  m.dim = dim;
  int lineno = 1;
  double total = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string c;
    std::vector<double> vals;
    while (std::getline(ss, c, ',')) {
      try {
        vals.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad number");
      }
    }
    if (vals.size() != cols.size())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    for (int a = 0; a < dim; ++a) m.points.push_back(vals[a]);
    m.weights.push_back(vals.back());
    total += vals.back();
  }
  if (m.weights.empty()) throw ConfigError(path.string() + " has no points");
  if (!(total > 0.0)) throw ConfigError(path.string() + ": weights must be positive");
  for (double& w : m.weights) w /= total;
  m.validate();
  return m;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace ealign
