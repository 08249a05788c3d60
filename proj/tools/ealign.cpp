#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <json.hpp>
#include <limits>

#include "ealign/errors.hpp"
#include "ealign/flow.hpp"
#include "ealign/harness.hpp"
#include "ealign/io.hpp"
#include "ealign/rng.hpp"
#include "ealign/transport.hpp"

namespace fs = std::filesystem;
using namespace ealign;

namespace {

struct Loaded {
  ConfigFile file;
  SimConfig cfg;
  DensitySpec density;
  std::string hash;
};

Loaded load(const std::string& path) {
  Loaded l;
  l.file = ConfigFile::load(path);
  l.file.check_known();
  l.cfg = sim_config_from(l.file);
  l.cfg.validate();
  l.density = density_from(l.file);
  l.hash = sha256_hex(l.file.canonical());
  const long long threads = l.file.get_int("sim.threads", 0);
  if (threads < 0) throw ConfigError("sim.threads must be non-negative");
  if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
  for (const auto& w : l.cfg.warnings()) std::cerr << "warning: " << w << "\n";
  return l;
}

ParticleState initial_state(const Loaded& l) {
  auto init = well_prepared_init(l.density, l.cfg.n, l.cfg.seed, l.cfg);
  const std::string mode = l.file.get("init.velocities", "limit");
  if (mode == "zero")
    std::fill(init.eps_state.velocities.begin(), init.eps_state.velocities.end(), 0.0);
  else if (mode != "limit")
    throw ConfigError("init.velocities must be 'limit' or 'zero'");
  return init.eps_state;
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  void add(const std::string& name, const std::string& text) {
    write_text(dir_ / name, text);
    files_.push_back(name);
  }
  void finish(const Loaded& l) {
    write_manifest(dir_, files_, l.hash, l.cfg.seed, l.cfg.snapshot_cadence(),
                   l.cfg.step_size());
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

int cmd_simulate(const std::string& config, const std::string& out) {
  const auto l = load(config);
  const auto traj = simulate(l.cfg, initial_state(l));
  Outputs o(out);
  o.add("traj.csv", trajectory_csv(traj));
  o.add("energy.csv", energy_csv(traj));
  o.finish(l);
  return 0;
}

int cmd_limit(const std::string& config, const std::string& out) {
  const auto l = load(config);
  const auto x0 = sample_positions(l.density, l.cfg.n, l.cfg.model.domain, l.cfg.seed);
  const auto traj = simulate_limit(l.cfg, x0);
  const auto bounds = velocity_bounds_report(traj, l.cfg);
  Outputs o(out);
  o.add("traj_limit.csv", trajectory_csv(traj));
  o.add("bounds.json", bounds.to_json());
  o.finish(l);
  return bounds.holds() ? 0 : 2;
}

int cmd_sweep(const std::string& config, const std::string& out) {
  const auto l = load(config);
  auto study = study_from(l.file);
  study.output_dir = out;
  const auto report = epsilon_sweep(study);
  for (const auto& [name, fit] : report.slopes) {
    if (fit.exact)
      std::cout << name << ": exact (all zero)\n";
    else
      std::cout << name << ": slope " << fit.slope << "\n";
  }
  return 0;
}

int cmd_metrics(const std::string& a, const std::string& b, const std::string& p_text,
                const std::string& out) {
  const auto mu = read_cloud_csv(a);
  const auto nu = read_cloud_csv(b);
  if (mu.dim != nu.dim) throw ConfigError("the two clouds have different dimensions");
  const Domain domain = Domain::euclidean(mu.dim);
  nlohmann::ordered_json j;
  j["dim"] = mu.dim;
  j["points_a"] = mu.size();
  j["points_b"] = nu.size();
  if (p_text == "inf") {
    j["p"] = "inf";
    j["distance"] = wasserstein_inf(mu, nu, domain);
  } else {
    double p = 0.0;
    try {
      p = std::stod(p_text);
    } catch (const std::exception&) {
      throw ConfigError("--p must be a number >= 1 or 'inf'");
    }
    if (!(p >= 1.0)) throw ConfigError("--p must be >= 1");
    j["p"] = p;
    j["distance"] = wasserstein(mu, nu, p, domain);
  }
  if (mu.dim == 1) j["cramer_energy"] = cramer_energy_1d(mu, nu);
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!out.empty()) {
    write_text(fs::path(out) / "metrics.json", text);
    write_manifest(out, {"metrics.json"}, sha256_hex(a + "\n" + b + "\n" + p_text), 0, 0, 0.0);
  }
  return 0;
}

int cmd_verify_energy(const std::string& config, const std::string& out) {
  const auto l = load(config);
  const double bound = l.file.get_double("verify.energy_bound", 1e-6);
  const auto traj = simulate(l.cfg, initial_state(l));
  const auto res = energy_balance_residual(traj);
  const double worst = max_of(res);
  nlohmann::ordered_json j;
  j["steps"] = res.size();
  j["dt"] = l.cfg.step_size();
  j["max_residual"] = worst;
  j["bound"] = bound;
  j["passed"] = worst <= bound;
  Outputs o(out);
  o.add("energy.csv", energy_csv(traj));
  o.add("energy_check.json", j.dump(2) + "\n");
  o.finish(l);
  std::cout << "max energy residual " << worst << " (bound " << bound << ")\n";
  return worst <= bound ? 0 : 2;
}

int cmd_verify_lemma51(const std::string& config, const std::string& out) {
  const auto l = load(config);
  const auto init = well_prepared_init(l.density, l.cfg.n, l.cfg.seed, l.cfg);
  const auto eps_run = simulate(l.cfg, init.eps_state);
  const auto limit_run = simulate_limit(l.cfg, init.limit_positions);
  const auto res = lemma51_residual(eps_run, limit_run);
  const double tol = l.file.get_double("verify.tol", std::numeric_limits<double>::infinity());
  nlohmann::ordered_json j;
  j["intervals"] = res.size();
  j["max_residual"] = max_of(res);
  j["residuals"] = res;
  Outputs o(out);
  o.add("lemma51.json", j.dump(2) + "\n");
  o.finish(l);
  std::cout << "max residual " << max_of(res) << "\n";
  return max_of(res) <= tol ? 0 : 2;
}

int cmd_verify_flow(const std::string& config, const std::string& out) {
  const auto l = load(config);
  const double p = l.file.get_double("verify.p", 2.0);
  const double c_fit = l.file.get_double("verify.c_fit", 1.0);
  const long long npairs = l.file.get_int("verify.pairs", 100);
  if (npairs < 1) throw ConfigError("verify.pairs must be positive");
  const auto init = well_prepared_init(l.density, l.cfg.n, l.cfg.seed, l.cfg);
  const auto eps_run = simulate(l.cfg, init.eps_state);
  const auto limit_run = simulate_limit(l.cfg, init.limit_positions);
  const LimitVelocityField lf(limit_run);
  const int dim = l.cfg.model.domain.dim;
  const double T = l.cfg.t_final;
  auto field = VelocityField::estimated(
      dim, [&lf](const Vec& x, double t) { return lf(x, t); }, init.limit_positions, 0.0, T);

  Rng rng(l.cfg.seed ^ 0x5eedULL);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (long long k = 0; k < npairs; ++k) {
    Vec a{}, b{};
    const std::size_t i = rng.next() % l.cfg.n;
    for (int c = 0; c < dim; ++c) {
      a[c] = init.limit_positions[i * dim + c] + 0.05 * rng.normal();
      b[c] = a[c] + 0.05 * rng.normal();
    }
    pairs.emplace_back(a, b);
  }
  const auto lip = lipschitz_flow_check(field, pairs, T);

  std::vector<MeasureSnapshot> rho_bar;
  for (const auto& s : eps_run.snapshots)
    rho_bar.push_back({s.time, EmpiricalMeasure::uniform(s.positions, dim), s.velocities});
  const auto rho0 = EmpiricalMeasure::uniform(init.limit_positions, dim);
  const auto stab =
      stability_inequality_check(rho_bar, field, p, c_fit, rho0, l.cfg.model.domain);

  auto j = nlohmann::ordered_json::parse(stab.to_json());
  j["lipschitz_pairs"] = lip.ratios.size();
  j["lipschitz_bound"] = lip.bound;
  j["lipschitz_violations"] = lip.violations;
  Outputs o(out);
  o.add("flow.json", j.dump(2) + "\n");
  o.finish(l);
  std::cout << "lipschitz max ratio " << lip.max_ratio << " (bound " << lip.bound
            << "), C_min_feasible " << stab.C_min_feasible << "\n";
  return lip.passed() && stab.holds ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-friction Euler-alignment particle simulations and diagnostics"};
  app.require_subcommand(1);
  std::string config, out = "out", a, b, p = "2";

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", config, "key = value configuration file")->required();
    sub->add_option("--out", out, "output directory");
  };
  auto* simulate_cmd = app.add_subcommand("simulate", "particle run at fixed epsilon");
  with_config(simulate_cmd);
  auto* limit_cmd = app.add_subcommand("limit", "first-order limit run and velocity bounds");
  with_config(limit_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "epsilon sweep with fitted rates");
  with_config(sweep_cmd);
  auto* metrics_cmd = app.add_subcommand("metrics", "Wasserstein distance of two clouds");
  metrics_cmd->add_option("--a", a, "first cloud (x0..,w CSV)")->required();
  metrics_cmd->add_option("--b", b, "second cloud")->required();
  metrics_cmd->add_option("--p", p, "order, >= 1 or 'inf'");
  auto* metrics_out = metrics_cmd->add_option("--out", out, "also write metrics.json here");
  auto* flow_cmd = app.add_subcommand("verify-flow", "flow Lipschitz and stability checks");
  with_config(flow_cmd);
  auto* energy_cmd = app.add_subcommand("verify-energy", "discrete energy balance");
  with_config(energy_cmd);
  auto* lemma_cmd = app.add_subcommand("verify-lemma51", "1-D Coulomb energy identity");
  with_config(lemma_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(config, out);
    if (*limit_cmd) return cmd_limit(config, out);
    if (*sweep_cmd) return cmd_sweep(config, out);
    if (*metrics_cmd) return cmd_metrics(a, b, p, *metrics_out ? out : "");
    if (*flow_cmd) return cmd_verify_flow(config, out);
    if (*energy_cmd) return cmd_verify_energy(config, out);
    if (*lemma_cmd) return cmd_verify_lemma51(config, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
