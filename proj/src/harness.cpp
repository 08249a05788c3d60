#include "ealign/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ealign/errors.hpp"
#include "ealign/io.hpp"
#include "ealign/rng.hpp"
#include "ealign/transport.hpp"

namespace ealign {

std::vector<double> sample_positions(const DensitySpec& density, std::size_t n,
                                     const Domain& domain, std::uint64_t seed) {
  domain.validate();
  const int dim = domain.dim;
  Rng rng(seed);
  std::vector<double> x(n * dim);
  const std::size_t first = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) {
      double c = density.center;
      double v = 0.0;
      switch (density.kind) {
        case DensityKind::gaussian:
          v = c + density.spread * rng.normal();
          break;
        case DensityKind::uniform:
          v = rng.uniform(c - density.spread, c + density.spread);
          break;
        case DensityKind::two_cluster:
          if (a == 0) c += (i < first ? -0.5 : 0.5) * density.separation;
          v = c + density.spread * rng.normal();
          break;
      }
      x[i * dim + a] = wrap(domain, v);
    }
  }
  return x;
}

InitialData well_prepared_init(const DensitySpec& density, std::size_t n,
                               std::uint64_t seed, const SimConfig& cfg) {
  cfg.model.validate();
  if (n < 1) throw ConfigError("need at least one particle");
  InitialData out;
  out.limit_positions = sample_positions(density, n, cfg.model.domain, seed);
  out.eps_state.time = 0.0;
  out.eps_state.dim = cfg.model.domain.dim;
  out.eps_state.positions = out.limit_positions;
  SolveOptions opts;
  opts.exec = cfg.exec;
  out.eps_state.velocities =
      solve_velocity(cfg.model, cfg.gamma, out.limit_positions, opts).velocities;
  return out;
}

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  std::vector<std::pair<double, double>> logs;
  for (const auto& [eps, value] : points) {
    if (!(eps > 0.0) || !std::isfinite(eps))
      throw ConfigError("rate fit needs positive epsilons");
    if (value < 0.0 || !std::isfinite(value))
      throw ConfigError("rate fit needs finite non-negative values");
    if (value > 0.0) logs.emplace_back(std::log(eps), std::log(value));
  }
  RateFit fit;
  fit.points = logs.size();
  if (logs.empty()) {
    fit.exact = true;
    return fit;
  }
  if (logs.size() < 2) throw ConfigError("rate fit needs at least two non-zero values");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= logs.size();
  my /= logs.size();
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : logs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("rate fit needs at least two distinct epsilons");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : logs) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / logs.size());
  return fit;
}

const std::vector<std::string>& known_functionals() {
  static const std::vector<std::string> names = {
      "rel_kinetic_sup",    "rel_kinetic_timeint",    "wass_sup",
      "coulomb_energy_sup", "coulomb_energy_timeint", "position_error_sup",
      "combined_sup",       "combined_timeint"};
  return names;
}

void StudySpec::validate() const {
  base.model.validate();
  if (epsilons.size() < 3) throw ConfigError("a sweep needs at least three epsilons");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0.0) || !(epsilons[k] < 1.0))
      throw ConfigError("epsilons must lie in (0, 1)");
    if (k > 0 && !(epsilons[k] < epsilons[k - 1]))
      throw ConfigError("epsilons must be strictly decreasing");
  }
  if (!(p >= 1.0 && p <= 2.0)) throw ConfigError("study.p must lie in [1, 2]");
  if (functionals.empty()) throw ConfigError("no functionals requested");
  const auto& known = known_functionals();
  for (const auto& f : functionals)
    if (std::find(known.begin(), known.end(), f) == known.end())
      throw ConfigError("unknown functional '" + f + "'");
  if (workers < 1) throw ConfigError("study.workers must be positive");
  for (double e : epsilons) {
    SimConfig c = base;
    c.epsilon = e;
    c.validate();
  }
}

StudySpec study_from(const ConfigFile& cfg) {
  StudySpec s;
  s.base = sim_config_from(cfg);
  s.density = density_from(cfg);
  s.epsilons = cfg.get_list("study.epsilons");
  if (s.epsilons.empty()) s.epsilons = {0.2, 0.1, 0.05, 0.025, 0.0125};
  s.p = cfg.get_double("study.p", 2.0);
  std::stringstream ss(cfg.get("study.functionals",
                               "rel_kinetic_sup,rel_kinetic_timeint,wass_sup"));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) s.functionals.push_back(item);
  }
  s.workers = static_cast<int>(cfg.get_int("study.workers", 1));
  s.svg = cfg.get_bool("study.svg", true);
  s.entropy = cfg.get_bool("study.entropy", true);
  s.config_text = cfg.canonical();
  return s;
}

namespace {

bool wants(const std::vector<std::string>& names, const std::string& f) {
  return std::find(names.begin(), names.end(), f) != names.end();
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) s += 0.5 * (y[k] + y[k - 1]) * (t[k] - t[k - 1]);
  return s;
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

std::map<std::string, double> evaluate_functionals(
    const Trajectory& eps_run, const LimitTrajectory& limit_run, double p,
    const std::vector<std::string>& names) {
  check_aligned(eps_run, limit_run);
  const auto& model = eps_run.config.model;
  const bool combined = wants(names, "combined_sup") || wants(names, "combined_timeint");
  const bool need_r = combined || wants(names, "rel_kinetic_sup") ||
                      wants(names, "rel_kinetic_timeint");
  const bool need_w = combined || wants(names, "wass_sup");
  const bool need_c =
      wants(names, "coulomb_energy_sup") || wants(names, "coulomb_energy_timeint");
  const bool need_x = wants(names, "position_error_sup");
  if (need_c && model.domain.dim != 1)
    throw UnsupportedError("the Coulomb energy functional is computed in d = 1 only");

  const LimitVelocityField field(limit_run);
  const std::size_t ns = eps_run.snapshots.size();
  const int dim = model.domain.dim;
  std::vector<double> t(ns), r(ns, 0.0), w(ns, 0.0), c(ns, 0.0), xe(ns, 0.0);
  for (std::size_t k = 0; k < ns; ++k) {
    const auto& a = eps_run.snapshots[k];
    const auto& b = limit_run.snapshots[k];
    t[k] = a.time;
    if (need_r) {
      const auto& u = field.at_snapshot(k);
      r[k] = relative_kinetic(a, [&](const Vec& x) { return u(x); });
    }
    if (need_w || need_c) {
      const auto ma = EmpiricalMeasure::uniform(a.positions, dim);
      const auto mb = EmpiricalMeasure::uniform(b.positions, dim);
      if (need_w) w[k] = wasserstein(ma, mb, p, model.domain);
      if (need_c) c[k] = cramer_energy_1d(ma, mb);
    }
    if (need_x) {
      for (std::size_t i = 0; i < a.size(); ++i)
        xe[k] = std::max(xe[k], norm(displacement(model.domain, a.position(i),
                                                  load(b.positions, i, dim))));
    }
  }
  auto sup = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  };
  std::map<std::string, double> out;
  if (wants(names, "rel_kinetic_sup")) out["rel_kinetic_sup"] = sup(r);
  if (wants(names, "rel_kinetic_timeint")) out["rel_kinetic_timeint"] = trapezoid(t, r);
  if (wants(names, "wass_sup")) out["wass_sup"] = sup(w);
  if (wants(names, "coulomb_energy_sup")) out["coulomb_energy_sup"] = sup(c);
  if (wants(names, "coulomb_energy_timeint")) out["coulomb_energy_timeint"] = trapezoid(t, c);
  if (need_x) out["position_error_sup"] = sup(xe);
  if (combined) {
    std::vector<double> rw(ns), w2(ns);
    for (std::size_t k = 0; k < ns; ++k) {
      w2[k] = w[k] * w[k];
      rw[k] = r[k] + w2[k];
    }
    out["combined_sup"] = sup(rw);
    out["combined_timeint"] = trapezoid(t, r) + sup(w2);
  }
  return out;
}

std::string RateReport::to_json() const {
  nlohmann::ordered_json j;
  j["code_version"] = kCodeVersion;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["snapshot_cadence"] = snapshot_cadence;
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["epsilon"] = row.epsilon;
    for (const auto& [k, v] : row.values) r[k] = number_or_null(v);
    rows_json.push_back(r);
  }
  j["rows"] = rows_json;
  nlohmann::ordered_json fits = nlohmann::ordered_json::object();
  for (const auto& [name, f] : slopes) {
    nlohmann::ordered_json e;
    if (f.exact) {
      e["slope"] = nullptr;
      e["exact"] = true;
    } else {
      e["slope"] = f.slope;
      e["intercept"] = f.intercept;
      e["residual"] = f.residual;
      e["points"] = f.points;
    }
    fits[name] = e;
  }
  j["slopes"] = fits;
  if (!error.empty()) j["error"] = error;
  return j.dump(2) + "\n";
}

std::string rates_svg(const RateReport& report) {
  const double w = 640, h = 480, left = 70, right = 170, top = 30, bottom = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& row : report.rows) {
    xmin = std::min(xmin, std::log10(row.epsilon));
    xmax = std::max(xmax, std::log10(row.epsilon));
    for (const auto& [k, v] : row.values)
      if (v > 0.0 && std::isfinite(v)) {
        ymin = std::min(ymin, std::log10(v));
        ymax = std::max(ymax, std::log10(v));
      }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double lx) { return left + (lx - xmin) / (xmax - xmin) * (w - left - right); };
  auto py = [&](double ly) { return h - bottom - (ly - ymin) / (ymax - ymin) * (h - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right
     << "\" y2=\"" << h - bottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << h - bottom << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 15
     << "\" text-anchor=\"middle\">log10 epsilon</text>\n";
  os << "<text x=\"15\" y=\"" << (top + h - bottom) / 2 << "\" transform=\"rotate(-90 15 "
     << (top + h - bottom) / 2 << ")\" text-anchor=\"middle\">log10 value</text>\n";
  for (const auto& row : report.rows) {
    const double x = px(std::log10(row.epsilon));
    os << "<text x=\"" << x << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"middle\">"
       << eps_tag(row.epsilon) << "</text>\n";
  }
  std::size_t series = 0;
  std::set<std::string> names;
  for (const auto& row : report.rows)
    for (const auto& [k, v] : row.values) names.insert(k);
  for (const auto& name : names) {
    const char* col = colors[series % 8];
    std::string pts;
    for (const auto& row : report.rows) {
      const auto it = row.values.find(name);
      if (it == row.values.end() || !(it->second > 0.0)) continue;
      const double x = px(std::log10(row.epsilon)), y = py(std::log10(it->second));
      pts += format_double(x) + "," + format_double(y) + " ";
      os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"" << pts << "\"/>\n";
    const auto fit = report.slopes.find(name);
    std::string label = name;
    if (fit != report.slopes.end() && !fit->second.exact) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " (%.2f)", fit->second.slope);
      label += buf;
    }
    os << "<text x=\"" << w - right + 10 << "\" y=\"" << top + 16 * series << "\" fill=\""
       << col << "\">" << label << "</text>\n";
    ++series;
  }
  os << "</svg>\n";
  return os.str();
}

void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& files,
                    const std::string& config_hash, std::uint64_t seed,
                    std::size_t snapshot_cadence, double dt) {
  nlohmann::ordered_json j;
  j["code_version"] = kCodeVersion;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["dt"] = dt;
  j["snapshot_cadence"] = snapshot_cadence;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  j["created_utc"] = stamp;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    std::ifstream in(dir / f, std::ios::binary);
    if (!in) throw ConfigError("manifest: cannot read " + (dir / f).string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    list.push_back({{"name", f}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  j["files"] = list;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

RateReport epsilon_sweep(const StudySpec& study) {
  study.validate();
  const SimConfig& base = study.base;
  std::vector<std::string> names = study.functionals;
  const bool have_r = wants(names, "rel_kinetic_sup") || wants(names, "rel_kinetic_timeint");
  if (have_r && wants(names, "wass_sup")) {
    if (!wants(names, "combined_sup")) names.push_back("combined_sup");
    if (!wants(names, "combined_timeint")) names.push_back("combined_timeint");
  }

  RateReport report;
  report.config_hash = sha256_hex(study.config_text);
  report.seed = base.seed;
  report.snapshot_cadence = base.snapshot_cadence();

  const bool write = !study.output_dir.empty();
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(study.output_dir / name, text);
    files.push_back(name);
  };

  const auto init = well_prepared_init(study.density, base.n, base.seed, base);
  const auto limit = simulate_limit(base, init.limit_positions);
  if (write) emit("traj_limit.csv", trajectory_csv(limit));

  const std::size_t ne = study.epsilons.size();
  struct Result {
    bool ok = false;
    std::map<std::string, double> values;
    std::string traj, energy, entropy;
    std::exception_ptr error;
  };
  std::vector<Result> results(ne);
  const Exec inner = study.workers > 1 ? Exec::serial : base.exec;

#pragma omp parallel for schedule(dynamic) num_threads(study.workers)
  for (std::size_t k = 0; k < ne; ++k) {
    try {
      SimConfig cfg = base;
      cfg.epsilon = study.epsilons[k];
      cfg.exec = inner;
      const auto traj = simulate(cfg, init.eps_state);
      results[k].values = evaluate_functionals(traj, limit, study.p, names);
      if (write) {
        results[k].traj = trajectory_csv(traj);
        results[k].energy = energy_csv(traj);
        if (study.entropy) results[k].entropy = to_json(entropy_history(traj, limit));
      }
      results[k].ok = true;
    } catch (...) {
      results[k].error = std::current_exception();
    }
  }

  std::exception_ptr first_error;
  for (std::size_t k = 0; k < ne; ++k) {
    if (!results[k].ok) {
      if (!first_error) first_error = results[k].error;
      continue;
    }
    report.rows.push_back({study.epsilons[k], results[k].values});
    if (write) {
      const std::string tag = eps_tag(study.epsilons[k]);
      emit("traj_eps_" + tag + ".csv", results[k].traj);
      emit("energy_" + tag + ".csv", results[k].energy);
      if (study.entropy) emit("entropy_" + tag + ".json", results[k].entropy + "\n");
    }
  }

  for (const auto& name : names) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : report.rows) {
      const auto it = row.values.find(name);
      if (it != row.values.end()) pts.emplace_back(row.epsilon, it->second);
    }
    try {
      report.slopes[name] = fit_rate(pts);
    } catch (const ConfigError&) {
      // too few usable points (partial sweep); leave the slope out
    }
  }

  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      report.error = e.what();
    }
  }
  if (write) {
    emit("rates.json", report.to_json());
    if (study.svg && !report.rows.empty()) emit("rates.svg", rates_svg(report));
    write_manifest(study.output_dir, files, report.config_hash, base.seed,
                   report.snapshot_cadence, base.step_size());
  }
  if (first_error) std::rethrow_exception(first_error);
  return report;
}

}  // namespace ealign
