#pragma once

#include <span>
#include <vector>

#include "ealign/kernels.hpp"

namespace ealign {

// Regular lattice (flat, M*dim) over the bounding box of `cloud` widened by
// `margin` of its extent on each side; the whole cell on a torus. With
// per_axis = 0 the count is 64 per axis for dim <= 2 and 16 for dim 3.
std::vector<double> lattice_points(std::span<const double> cloud, int dim,
                                   const Domain& domain, int per_axis = 0,
                                   double margin = 0.2);

}  // namespace ealign
