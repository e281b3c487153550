#pragma once

// Independent oracles shared by the unit and acceptance suites.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "slab/geometry.hpp"

namespace slab::testing {

/// Haar-distributed point of S^3: a normalized standard Gaussian in R^4.
inline UnitQuaternion random_unit_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return UnitQuaternion::normalized(n(rng), n(rng), n(rng), n(rng));
}

/// Chebyshev polynomial of the second kind by the three-term recurrence.
inline double chebyshev_u(int k, double x) {
  if (k == 0) return 1.0;
  double u0 = 1.0, u1 = 2.0 * x;
  for (int i = 1; i < k; ++i) {
    const double u2 = 2.0 * x * u1 - u0;
    u0 = u1;
    u1 = u2;
  }
  return u1;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Plain Monte Carlo mean and standard error of a sample stream.
template <class Draw>
MonteCarloEstimate monte_carlo(Draw&& draw, std::size_t samples) {
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double v = draw();
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean) * n / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace slab::testing
