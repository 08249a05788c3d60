#include "ealign/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "ealign/errors.hpp"

namespace ealign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw ConfigError("Wasserstein order p must lie in [1, inf)");
}

void check_same_dim(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.dim != nu.dim) throw ConfigError("measures live in different dimensions");
}

void check_uniform_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  check_same_dim(mu, nu);
  if (mu.size() != nu.size())
    throw UnsupportedError("assignment needs equal cardinalities");
  if (!mu.is_uniform() || !nu.is_uniform())
    throw UnsupportedError("assignment needs uniform weights");
}

// Points of a 1-D measure sorted ascending, with their weights.
std::vector<std::pair<double, double>> sorted_atoms(const EmpiricalMeasure& m) {
  std::vector<std::pair<double, double>> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = {m.points[i], m.weights[i]};
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> sorted_order(const EmpiricalMeasure& m) {
  std::vector<std::size_t> idx(m.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return m.points[a] < m.points[b];
  });
  return idx;
}

double ground_distance(const EmpiricalMeasure& mu, std::size_t i,
                       const EmpiricalMeasure& nu, std::size_t j,
                       const Domain& domain) {
  return norm(displacement(domain, mu.point(i), nu.point(j)));
}

// Correctly rounded sum (Shewchuk's partials, as in Python's math.fsum).
class ExactSum {
 public:
  void add(double x) {
    std::size_t k = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[k++] = lo;
      x = hi;
    }
    partials_.resize(k);
    partials_.push_back(x);
  }
  double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size() - 1;
    double hi = partials_[n], lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

// Adds |x - y|^p without rounding where that is possible (euclidean ground
// cost with p = 2, or p = 1 on the line), so that matchings of equal real
// cost produce the same double; otherwise adds the cost matrix entry.
void add_pair_cost(ExactSum& sum, const EmpiricalMeasure& mu, std::size_t i,
                   const EmpiricalMeasure& nu, std::size_t j, double p,
                   const Domain& domain, double fallback) {
  const bool exact = !domain.is_torus() && (p == 2.0 || (p == 1.0 && mu.dim == 1));
  if (!exact) {
    sum.add(fallback);
    return;
  }
  for (int a = 0; a < mu.dim; ++a) {
    const double x = mu.points[i * mu.dim + a], y = -nu.points[j * nu.dim + a];
    double hi = x + y;
    const double z = hi - x;
    double lo = (x - (hi - z)) + (y - z);
    if (p == 1.0) {
      if (hi < 0.0 || (hi == 0.0 && lo < 0.0)) hi = -hi, lo = -lo;
      sum.add(hi);
      sum.add(lo);
      continue;
    }
    // (hi + lo)^2 = hi^2 + 2 hi lo + lo^2, each product split exactly
    for (const auto& [u, v] : {std::pair{hi, hi}, std::pair{2.0 * hi, lo}, std::pair{lo, lo}}) {
      const double prod = u * v;
      sum.add(prod);
      sum.add(std::fma(u, v, -prod));
    }
  }
}

double assignment_value(std::span<const double> cost, std::size_t m,
                        std::span<const std::size_t> perm, double p,
                        const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                        const Domain& domain) {
  ExactSum s;
  for (std::size_t i = 0; i < m; ++i)
    add_pair_cost(s, mu, i, nu, perm[i], p, domain, cost[i * m + perm[i]]);
  return std::pow(s.value() / static_cast<double>(m), 1.0 / p);
}

// Hopcroft-Karp on the graph {(i, j) : dist_ij <= r}; true if perfect.
bool perfect_matching(std::span<const double> dist, std::size_t m, double r) {
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> adj(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (dist[i * m + j] <= r) adj[i].push_back(j);
  std::vector<std::size_t> match_l(m, kNone), match_r(m, kNone), layer(m);

  auto bfs = [&]() {
    std::queue<std::size_t> q;
    bool found = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (match_l[i] == kNone) {
        layer[i] = 0;
        q.push(i);
      } else {
        layer[i] = kNone;
      }
    }
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      for (std::size_t j : adj[i]) {
        const std::size_t k = match_r[j];
        if (k == kNone) {
          found = true;
        } else if (layer[k] == kNone) {
          layer[k] = layer[i] + 1;
          q.push(k);
        }
      }
    }
    return found;
  };
  auto dfs = [&](auto&& self, std::size_t i) -> bool {
    for (std::size_t j : adj[i]) {
      const std::size_t k = match_r[j];
      if (k == kNone || (layer[k] == layer[i] + 1 && self(self, k))) {
        match_l[i] = j;
        match_r[j] = i;
        return true;
      }
    }
    layer[i] = kNone;
    return false;
  };

  std::size_t matched = 0;
  while (bfs())
    for (std::size_t i = 0; i < m; ++i)
      if (match_l[i] == kNone && dfs(dfs, i)) ++matched;
  return matched == m;
}

}  // namespace

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<double> points, int dim) {
  if (dim < 1) throw ConfigError("dimension must be positive");
  if (points.empty() || points.size() % dim != 0)
    throw ConfigError("point array length is not a positive multiple of dim");
  const std::size_t m = points.size() / dim;
  return {dim, std::move(points),
          std::vector<double>(m, 1.0 / static_cast<double>(m))};
}

bool EmpiricalMeasure::is_uniform() const {
  const double w = 1.0 / static_cast<double>(size());
  return std::all_of(weights.begin(), weights.end(),
                     [&](double x) { return std::abs(x - w) <= 1e-12 * w; });
}

void EmpiricalMeasure::validate() const {
  if (dim < 1) throw ConfigError("dimension must be positive");
  if (weights.empty()) throw ConfigError("empty measure");
  if (points.size() != weights.size() * dim)
    throw ConfigError("points and weights differ in count");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("weights must sum to 1");
  for (double c : points)
    if (!std::isfinite(c)) throw ConfigError("non-finite point");
}

void Coupling::check_marginals(const EmpiricalMeasure& mu,
                               const EmpiricalMeasure& nu, double tol) const {
  std::vector<double> a(mu.size(), 0.0), b(nu.size(), 0.0);
  for (const auto& pr : pairs) {
    if (pr.source >= a.size() || pr.target >= b.size())
      throw NumericalError("coupling index out of range");
    if (!(pr.mass > 0.0)) throw NumericalError("coupling mass must be positive");
    a[pr.source] += pr.mass;
    b[pr.target] += pr.mass;
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - mu.weights[i]) > tol)
      throw NumericalError("first marginal mismatch at " + std::to_string(i));
  for (std::size_t j = 0; j < b.size(); ++j)
    if (std::abs(b[j] - nu.weights[j]) > tol)
      throw NumericalError("second marginal mismatch at " + std::to_string(j));
}

double Coupling::cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      double p, const Domain& domain) const {
  double s = 0.0;
  for (const auto& pr : pairs)
    s += pr.mass * std::pow(ground_distance(mu, pr.source, nu, pr.target, domain), p);
  return s;
}

Coupling monotone_coupling_1d(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu) {
  check_same_dim(mu, nu);
  if (mu.dim != 1) throw UnsupportedError("monotone coupling needs d = 1");
  const auto ia = sorted_order(mu);
  const auto ib = sorted_order(nu);
  Coupling c;
  std::size_t a = 0, b = 0;
  double ra = mu.weights[ia[0]], rb = nu.weights[ib[0]];
  while (a < ia.size() && b < ib.size()) {
    if (std::abs(ra - rb) <= 1e-15) {
      c.pairs.push_back({ia[a], ib[b], std::min(ra, rb)});
      if (++a < ia.size()) ra = mu.weights[ia[a]];
      if (++b < ib.size()) rb = nu.weights[ib[b]];
    } else if (ra < rb) {
      c.pairs.push_back({ia[a], ib[b], ra});
      rb -= ra;
      if (++a < ia.size()) ra = mu.weights[ia[a]];
    } else {
      c.pairs.push_back({ia[a], ib[b], rb});
      ra -= rb;
      if (++b < ib.size()) rb = nu.weights[ib[b]];
    }
  }
  return c;
}

double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      double p) {
  check_p(p);
  check_same_dim(mu, nu);
  if (mu.dim != 1) throw UnsupportedError("quantile formula needs d = 1");
  const auto a = sorted_atoms(mu);
  const auto b = sorted_atoms(nu);
  double total = 0.0;
  std::size_t i = 0, j = 0;
  double ra = a[0].second, rb = b[0].second;
  while (i < a.size() && j < b.size()) {
    if (std::abs(ra - rb) <= 1e-15) {
      total += 0.5 * (ra + rb) * std::pow(std::abs(a[i].first - b[j].first), p);
      if (++i < a.size()) ra = a[i].second;
      if (++j < b.size()) rb = b[j].second;
    } else if (ra < rb) {
      total += ra * std::pow(std::abs(a[i].first - b[j].first), p);
      rb -= ra;
      if (++i < a.size()) ra = a[i].second;
    } else {
      total += rb * std::pow(std::abs(a[i].first - b[j].first), p);
      ra -= rb;
      if (++j < b.size()) rb = b[j].second;
    }
  }
  return std::pow(total, 1.0 / p);
}

std::vector<double> cost_matrix(const EmpiricalMeasure& mu,
                                const EmpiricalMeasure& nu, double p,
                                const Domain& domain, Exec exec) {
  const std::size_t m = mu.size(), n = nu.size();
  std::vector<double> c(m * n);
  auto row = [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = ground_distance(mu, i, nu, j, domain);
      c[i * n + j] = p == 1.0 ? d : p == 2.0 ? d * d : std::pow(d, p);
    }
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < m; ++i) row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) row(i);
  }
  return c;
}

std::vector<std::size_t> optimal_assignment(std::span<const double> cost,
                                            std::size_t m) {
  if (cost.size() != m * m) throw ConfigError("cost matrix is not M x M");
  // Potentials u (rows), v (columns); p[j] is the row matched to column j,
  // with 1-based indices and column 0 as the virtual root.
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> perm(m);
  for (std::size_t j = 1; j <= m; ++j) perm[match[j] - 1] = j - 1;
  return perm;
}

Coupling assignment_coupling(const EmpiricalMeasure& mu,
                             const EmpiricalMeasure& nu, double p,
                             const Domain& domain) {
  check_p(p);
  check_uniform_pair(mu, nu);
  const std::size_t m = mu.size();
  const auto perm = optimal_assignment(cost_matrix(mu, nu, p, domain), m);
  Coupling c;
  for (std::size_t i = 0; i < m; ++i) c.pairs.push_back({i, perm[i], mu.weights[i]});
  return c;
}

double wasserstein_assignment(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, double p,
                              const Domain& domain) {
  check_p(p);
  check_uniform_pair(mu, nu);
  const std::size_t m = mu.size();
  const auto cost = cost_matrix(mu, nu, p, domain);
  const auto perm = optimal_assignment(cost, m);
  return assignment_value(cost, m, perm, p, mu, nu, domain);
}

double wasserstein_assignment(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, double p) {
  return wasserstein_assignment(mu, nu, p, Domain::euclidean(mu.dim));
}

double wasserstein_bruteforce(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, double p,
                              const Domain& domain) {
  check_p(p);
  check_uniform_pair(mu, nu);
  const std::size_t m = mu.size();
  if (m > 8) throw ConfigError("brute force is limited to M <= 8");
  const auto cost = cost_matrix(mu, nu, p, domain, Exec::serial);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    best = std::min(best, assignment_value(cost, m, perm, p, mu, nu, domain));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double wasserstein_bruteforce(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, double p) {
  return wasserstein_bruteforce(mu, nu, p, Domain::euclidean(mu.dim));
}

double wasserstein_inf(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       const Domain& domain) {
  check_uniform_pair(mu, nu);
  const std::size_t m = mu.size();
  const auto dist = cost_matrix(mu, nu, 1.0, domain);
  std::vector<double> radii(dist.begin(), dist.end());
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  std::size_t lo = 0, hi = radii.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (perfect_matching(dist, m, radii[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return radii[lo];
}

double wasserstein_inf(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return wasserstein_inf(mu, nu, Domain::euclidean(mu.dim));
}

double bottleneck_bruteforce(const EmpiricalMeasure& mu,
                             const EmpiricalMeasure& nu, const Domain& domain) {
  check_uniform_pair(mu, nu);
  const std::size_t m = mu.size();
  if (m > 8) throw ConfigError("brute force is limited to M <= 8");
  const auto dist = cost_matrix(mu, nu, 1.0, domain, Exec::serial);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, dist[i * m + perm[i]]);
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   double p, const Domain& domain) {
  if (domain.dim != mu.dim) throw ConfigError("measure and domain dimensions differ");
  if (mu.dim == 1 && !domain.is_torus()) return wasserstein_1d(mu, nu, p);
  return wasserstein_assignment(mu, nu, p, domain);
}

double cramer_energy_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  check_same_dim(mu, nu);
  if (mu.dim != 1) throw UnsupportedError("Cramer energy needs d = 1");
  const auto a = sorted_atoms(mu);
  const auto b = sorted_atoms(nu);
  // Sweep the merged breakpoints; F_mu - F_nu is constant in between.
  double diff = 0.0, total = 0.0, prev = 0.0;
  std::size_t i = 0, j = 0;
  bool started = false;
  while (i < a.size() || j < b.size()) {
    const double x = j >= b.size() || (i < a.size() && a[i].first <= b[j].first)
                         ? a[i].first
                         : b[j].first;
    if (started) total += diff * diff * (x - prev);
    while (i < a.size() && a[i].first == x) diff += a[i++].second;
    while (j < b.size() && b[j].first == x) diff -= b[j++].second;
    prev = x;
    started = true;
  }
  return total;
}

}  // namespace ealign
