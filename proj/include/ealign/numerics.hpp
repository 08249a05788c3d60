#pragma once

#include <cmath>

namespace ealign {

// (exp(-z) - 1 + z) / z^2, the second exponential-integrator weight.
inline double etd_phi2(double z) {
  if (z < 0.5) {
    // sum_k (-z)^k / (k+2)!
    double term = 0.5, sum = 0.5;
    for (int k = 1; k < 30; ++k) {
      term *= -z / (k + 2);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return (std::expm1(-z) + z) / (z * z);
}

// (1/h) int_0^h (1 - exp(-lambda s)) ds with z = lambda h.
inline double one_minus_exp_integral(double z) {
  if (z < 0.5) {
    // sum_{k>=1} (-1)^(k+1) z^k / (k+1)!
    double term = z / 2.0, sum = term;
    for (int k = 2; k < 40; ++k) {
      term *= -z / (k + 1);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return (z + std::expm1(-z)) / z;
}

// (1/h) int_0^h (1 - exp(-lambda s))^2 ds with z = lambda h.
inline double one_minus_exp_sq_integral(double z) {
  if (z < 0.5) {
    // (1 - e^-x)^2 = sum_{k>=2} (-1)^k (2^k - 2) x^k / k!
    double pow_z = z * z, fact = 2.0, two_k = 4.0, sum = 0.0;
    for (int k = 2; k < 60; ++k) {
      if (k > 2) {
        pow_z *= z;
        fact *= k;
        two_k *= 2.0;
      }
      const double term = ((k % 2 == 0) ? 1.0 : -1.0) * (two_k - 2.0) * pow_z /
                          (fact * (k + 1));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return (z + 2.0 * std::expm1(-z) - 0.5 * std::expm1(-2.0 * z)) / z;
}

}  // namespace ealign
