#include "ealign/lattice.hpp"

#include <algorithm>
#include <limits>

namespace ealign {

std::vector<double> lattice_points(std::span<const double> cloud, int dim,
                                   const Domain& domain, int per_axis,
                                   double margin) {
  if (per_axis <= 0) per_axis = dim <= 2 ? 64 : 16;
  std::array<double, kMaxDim> lo{}, hi{};
  for (int a = 0; a < dim; ++a) {
    if (domain.is_torus()) {
      lo[a] = 0.0;
      hi[a] = domain.period * (1.0 - 1.0 / per_axis);
      continue;
    }
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (std::size_t i = a; i < cloud.size(); i += dim) {
      mn = std::min(mn, cloud[i]);
      mx = std::max(mx, cloud[i]);
    }
    if (cloud.empty()) mn = mx = 0.0;
    const double pad = std::max(margin * (mx - mn), 1e-3);
    lo[a] = mn - pad;
    hi[a] = mx + pad;
  }
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(per_axis);
  std::vector<double> out(total * dim);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rest = p;
    for (int a = 0; a < dim; ++a) {
      const auto idx = static_cast<double>(rest % per_axis);
      rest /= per_axis;
      out[p * dim + a] = lo[a] + (hi[a] - lo[a]) * idx / (per_axis - 1);
    }
  }
  return out;
}

}  // namespace ealign
