#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

namespace ealign {

inline constexpr int kMaxDim = 3;

// Fixed-capacity spatial vector. Components beyond the active dimension
// are kept at zero, so norms and dot products need no dimension argument.
using Vec = std::array<double, kMaxDim>;

inline Vec load(std::span<const double> flat, std::size_t i, int dim) {
  Vec r{};
  for (int a = 0; a < dim; ++a) r[a] = flat[i * dim + a];
  return r;
}

inline void store(std::span<double> flat, std::size_t i, int dim,
                  const Vec& r) {
  for (int a = 0; a < dim; ++a) flat[i * dim + a] = r[a];
}

inline Vec operator+(const Vec& a, const Vec& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec operator-(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec operator*(double s, const Vec& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline double dot(const Vec& a, const Vec& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

}  // namespace ealign
