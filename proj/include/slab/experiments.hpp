#pragma once

// Extremizer families on S^3 x S^3, scaling experiments on S^3 and T^2, and
// log-log exponent fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slab/errors.hpp"
#include "slab/geometry.hpp"
#include "slab/norms.hpp"
#include "slab/operators.hpp"
#include "slab/parallel.hpp"
#include "slab/spectral.hpp"

namespace slab {

// ---------------------------------------------------------------------------
// Log-log fits

struct ScalingPoint {
  double param = 0.0;
  double value = 0.0;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
  std::optional<double> predicted;
  double tolerance = 0.0;

  bool within_tolerance() const { return predicted && std::abs(slope - *predicted) <= tolerance; }

  FitResult with_prediction(double p, double tol) const {
    FitResult r = *this;
    r.predicted = p;
    r.tolerance = tol;
    return r;
  }
};

/// Ordinary least squares of log(value) on log(param).
inline FitResult fit_loglog(const std::vector<ScalingPoint>& pts) {
  if (pts.size() < 3) throw InvalidArgument("fit_loglog: need at least 3 points");
  const auto n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    if (!(p.param > 0.0) || !(p.value > 0.0) || !std::isfinite(p.value) || !std::isfinite(p.param)) {
      throw InvalidArgument("fit_loglog: parameters and values must be positive and finite");
    }
    mx += std::log(p.param);
    my += std::log(p.value);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : pts) {
    const double dx = std::log(p.param) - mx;
    const double dy = std::log(p.value) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_loglog: parameters must not all coincide");
  FitResult r;
  r.points = pts.size();
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ssr = 0.0;
  for (const auto& p : pts) {
    const double e = std::log(p.value) - (r.intercept + r.slope * std::log(p.param));
    ssr += e * e;
  }
  r.stderr_slope = pts.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  r.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  return r;
}

/// Parameter sweep of one observable with the exponent it is compared to.
struct ScalingExperiment {
  std::string family;
  std::string observable;
  std::string claim;                 ///< the estimate the predicted exponent comes from
  std::optional<double> predicted;   ///< empty for exploratory sweeps
  std::vector<ScalingPoint> results;

  /// >= 4 points spanning >= 2 dyadic octaves.
  void validate() const {
    if (results.size() < 4) throw InvalidArgument("ScalingExperiment: need at least 4 parameter points");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& p : results) {
      lo = std::min(lo, p.param);
      hi = std::max(hi, p.param);
    }
    if (!(lo > 0.0) || hi / lo < 4.0 * (1.0 - 1e-12)) {
      throw InvalidArgument("ScalingExperiment: parameters must span at least two octaves");
    }
  }

  FitResult fit(double tolerance) const {
    validate();
    FitResult f = fit_loglog(results);
    if (predicted) f = f.with_prediction(*predicted, tolerance);
    return f;
  }
};

// ---------------------------------------------------------------------------
// Bump profiles and the S^3 families

/// Radial bump psi_rad on [0, inf) supported in [0, r0] with psi_rad(0) = 1.
struct BumpProfile {
  double r0 = 0.5;
  std::function<double(double)> psi;
  double operator()(double r) const { return psi(r); }
};

/// psi_rad(r) = exp(1 - 1 / (1 - (r / r0)^2)) for r < r0, else 0.
inline BumpProfile make_bump_profile(double r0 = 0.5) {
  if (!(r0 > 0.0 && r0 < 1.0)) throw InvalidArgument("make_bump_profile: r0 must lie in (0, 1)");
  return BumpProfile{r0, [r0](double r) {
                       const double x = std::abs(r) / r0;
                       if (x >= 1.0) return 0.0;
                       return std::exp(1.0 - 1.0 / (1.0 - x * x));
                     }};
}

/// Largest magnitude of the one-sided finite differences of order 1..order
/// at r0 with step h. A flat contact makes all of them vanish.
inline double flat_contact_defect(const BumpProfile& profile, int order = 4, double h = 1e-3) {
  double worst = 0.0;
  for (int k = 1; k <= order; ++k) {
    double diff = 0.0;
    double binom = 1.0;
    for (int i = 0; i <= k; ++i) {
      diff += ((i % 2) ? -binom : binom) * profile(profile.r0 - i * h);
      binom = binom * (k - i) / (i + 1);
    }
    worst = std::max(worst, std::abs(diff) / std::pow(h, k));
  }
  return worst;
}

/// Zonal grid resolution per unit of lambda for the bump family. The bump's
/// spectrum decays like exp(-c sqrt(kappa / lambda)), so the H^2 tail needs
/// K = N/4 well beyond the support scale.
inline constexpr int kBumpGridMultiplier = 1024;

inline std::shared_ptr<const ZonalGrid> bump_grid(double lambda, int multiplier = kBumpGridMultiplier) {
  if (!(lambda >= 1.0)) throw InvalidArgument("bump_grid: lambda must be >= 1");
  return std::make_shared<const ZonalGrid>(static_cast<int>(std::ceil(multiplier * lambda)));
}

/// phi_lambda(theta) = psi_rad(lambda sin theta) for theta < pi/2, else 0.
/// Throws ResolutionError unless at least 8 nodes lie inside the support.
inline GridField<ZonalGrid> bump_family(double lambda, const BumpProfile& profile,
                                        std::shared_ptr<const ZonalGrid> grid) {
  if (!(lambda >= 1.0)) throw InvalidArgument("bump_family: lambda must be >= 1");
  if (!grid) throw InvalidArgument("bump_family: null grid");
  int inside = 0;
  std::vector<Complex> v(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double th = grid->theta(i);
    if (th >= 0.5 * kPi) continue;
    const double r = lambda * std::sin(th);
    if (r < profile.r0) ++inside;
    v[i] = profile(r);
  }
  if (inside < 8) {
    throw ResolutionError("bump_family: only " + std::to_string(inside) + " nodes inside the support at lambda = " +
                          std::to_string(lambda) + " (need 8)");
  }
  return GridField<ZonalGrid>(std::move(grid), std::move(v));
}

/// u0(x, y) = phi_lambda(x.y), held as zonal coefficients of phi_lambda plus
/// its samples. Its flow under Delta_x - Delta_y is the identity.
struct StationaryDatum {
  double lambda = 1.0;
  SpectralField coeffs;
  GridField<ZonalGrid> samples;

  /// The datum as a paired-character field on S^3 x S^3.
  SpectralField lifted() const { return lift_product_zonal(coeffs); }
  double lq(double q) const { return product_zonal_lq(samples, q); }
  double hs(double s) const { return product_zonal_hs(coeffs, s); }
};

inline StationaryDatum stationary_family(double lambda, const BumpProfile& profile,
                                         std::shared_ptr<const ZonalGrid> grid = nullptr) {
  if (!grid) grid = bump_grid(lambda);
  auto samples = bump_family(lambda, profile, grid);
  auto coeffs = analyze_zonal_s3(samples, grid->n() / 4);
  return StationaryDatum{lambda, std::move(coeffs), std::move(samples)};
}

/// Analytic (1 - Delta) phi_lambda on S^3, Delta f = f'' + 2 cot(theta) f',
/// at colatitude theta; used to cross-check the spectral H^2 norm of the
/// default exp(1 - 1/(1 - x^2)) profile.
inline double bump_resolvent_profile(double lambda, double r0, double theta) {
  if (theta >= 0.5 * kPi) return 0.0;
  const double s = std::sin(theta), c = std::cos(theta);
  const double x = lambda * s / r0;
  if (x >= 1.0) return 0.0;
  const double g = 1.0 - x * x;
  const double p = std::exp(1.0 - 1.0 / g);
  // d/dx and d^2/dx^2 of exp(1 - 1/(1 - x^2)).
  const double dp = p * (-2.0 * x) / (g * g);
  const double d2p = dp * (-2.0 * x) / (g * g) + p * (-2.0 / (g * g) - 8.0 * x * x / (g * g * g));
  const double dx = lambda * c / r0;
  const double d2x = -lambda * s / r0;
  const double f1 = dp * dx;
  const double f2 = d2p * dx * dx + dp * d2x;
  const double lap = s > 0.0 ? f2 + 2.0 * c / s * f1 : 3.0 * f2;
  return p - lap;
}

// ---------------------------------------------------------------------------
// Bump scaling on S^3

struct BumpScalingResult {
  ScalingExperiment lq;
  ScalingExperiment h2;
  FitResult lq_fit;
  FitResult h2_fit;
};

inline constexpr double kQuadratureExactTolerance = 0.05;
inline constexpr double kDispersionTolerance = 0.15;

/// ||phi_lambda||_{L^q(S^3)} ~ lambda^{-3/q} and ||phi_lambda||_{H^2(S^3)} ~
/// lambda^{1/2}.
inline BumpScalingResult bump_scaling_experiment(double q, const std::vector<double>& lambdas,
                                                 const BumpProfile& profile,
                                                 double tolerance = kQuadratureExactTolerance,
                                                 int grid_multiplier = kBumpGridMultiplier) {
  if (!(q >= 1.0)) throw InvalidArgument("bump_scaling_experiment: q must be >= 1");
  BumpScalingResult r;
  r.lq.family = "bump";
  r.lq.observable = "lq_norm";
  r.lq.claim = "bump L^q scaling lambda^{-3/q}";
  r.lq.predicted = std::isinf(q) ? 0.0 : -3.0 / q;
  r.h2.family = "bump";
  r.h2.observable = "h2_norm";
  r.h2.claim = "bump H^2 scaling lambda^{2-3/2}";
  r.h2.predicted = 0.5;
  r.lq.results.resize(lambdas.size());
  r.h2.results.resize(lambdas.size());
  parallel_for(lambdas.size(), [&](std::size_t i) {
    const auto datum = stationary_family(lambdas[i], profile, bump_grid(lambdas[i], grid_multiplier));
    r.lq.results[i] = {lambdas[i], lq_norm(datum.samples, q)};
    r.h2.results[i] = {lambdas[i], sobolev_norm(datum.coeffs, 2.0)};
  });
  r.lq_fit = r.lq.fit(tolerance);
  r.h2_fit = r.h2.fit(tolerance);
  return r;
}

// ---------------------------------------------------------------------------
// Sharpness on S^3 x S^3

struct SharpnessResult {
  double p = 2.0, q = 3.0, s = 0.0;
  bool admissible = false;
  ScalingExperiment quotient;
  FitResult fit;
  FitResult lq_fit;   ///< log L^q factor, predicted -3/q
  FitResult hs_fit;   ///< log H^s factor, predicted s - 3/2
  std::vector<double> lq_values;  ///< ||u0||_{L^q(S^3 x S^3)} per lambda
  std::vector<double> hs_values;  ///< ||u0||_{H^s(S^3 x S^3)} per lambda
  bool sub_slopes_ok() const { return lq_fit.within_tolerance() && hs_fit.within_tolerance(); }
  /// Sub-slopes first, then the quotient slope. Exploratory when inadmissible.
  bool pass() const { return admissible && sub_slopes_ok() && fit.within_tolerance(); }
};

/// Q(lambda) = ||u(t)||_{L^p([0,1]; L^q)} / ||u0||_{H^s} for the stationary
/// family u0 = phi_lambda(x.y). Stationarity makes the numerator
/// product_zonal_lq(phi_lambda, q). Predicted slope 1/p - s.
inline SharpnessResult sharpness_experiment(double s, double p, double q, const std::vector<double>& lambdas,
                                            const BumpProfile& profile,
                                            double tolerance = kQuadratureExactTolerance,
                                            int grid_multiplier = kBumpGridMultiplier) {
  if (!(s >= 0.0 && s <= 2.0)) throw InvalidArgument("sharpness_experiment: s must lie in [0, 2]");
  MixedNormSpec spec{p, q};
  spec.validate();
  SharpnessResult r;
  r.p = p;
  r.q = q;
  r.s = s;
  r.admissible = spec.admissible(6);
  r.quotient.family = "stationary";
  r.quotient.observable = "strichartz_quotient";
  r.quotient.claim = "stationary-family sharpness bound s >= 3(1/2 - 1/q) = 1/p";
  r.quotient.predicted = 1.0 / p - s;
  ScalingExperiment lq = r.quotient, hs = r.quotient;
  lq.observable = "lq_factor";
  lq.predicted = -3.0 / q;
  hs.observable = "hs_factor";
  hs.predicted = s - 1.5;
  r.quotient.results.resize(lambdas.size());
  lq.results.resize(lambdas.size());
  hs.results.resize(lambdas.size());
  parallel_for(lambdas.size(), [&](std::size_t i) {
    const auto datum = stationary_family(lambdas[i], profile, bump_grid(lambdas[i], grid_multiplier));
    const double num = datum.lq(q);  // T = 1, so the time factor is 1
    const double den = datum.hs(s);
    lq.results[i] = {lambdas[i], num};
    hs.results[i] = {lambdas[i], den};
    r.quotient.results[i] = {lambdas[i], num / den};
  });
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    r.lq_values.push_back(lq.results[i].value);
    r.hs_values.push_back(hs.results[i].value);
  }
  r.fit = r.quotient.fit(tolerance);
  r.lq_fit = lq.fit(tolerance);
  r.hs_fit = hs.fit(tolerance);
  return r;
}

// ---------------------------------------------------------------------------
// Dispersion on T^2

struct DispersionResult {
  int j = 0;
  double h = 0.0;
  double alpha = 0.5;
  int m = 0;
  ScalingExperiment sup;
  ScalingExperiment sup_half;   ///< same with alpha halved
  FitResult fit;
  FitResult fit_half;
  double sup_at_zero = 0.0;     ///< ||u(0)||_inf
  double mode_sum = 0.0;        ///< sum of LP weights / (2 pi), the value at x = 0, t = 0
  double stability() const { return std::abs(fit.slope - fit_half.slope); }
  bool pass(double stability_tol = 0.05) const { return fit.within_tolerance() && stability() <= stability_tol; }
};

namespace detail {

/// Band-limited trigonometric sum on T^2 with value, gradient and Hessian.
struct TorusSum {
  std::vector<int> k1, k2;
  std::vector<Complex> c;

  void eval(double x, double y, Complex& u, Complex g[2], Complex hess[3]) const {
    u = 0.0;
    g[0] = g[1] = 0.0;
    hess[0] = hess[1] = hess[2] = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Complex e = c[i] * std::polar(1.0, k1[i] * x + k2[i] * y);
      const double a = k1[i], b = k2[i];
      u += e;
      g[0] += Complex(0.0, a) * e;
      g[1] += Complex(0.0, b) * e;
      hess[0] -= a * a * e;
      hess[1] -= a * b * e;
      hess[2] -= b * b * e;
    }
  }
};

/// Newton ascent on |u|^2 from a grid maximum; keeps the best value seen.
inline double refine_sup(const TorusSum& sum, double x, double y, double start, double spacing) {
  double best = start;
  for (int it = 0; it < 8; ++it) {
    Complex u, g[2], hs[3];
    sum.eval(x, y, u, g, hs);
    best = std::max(best, std::abs(u));
    const double gx = 2.0 * std::real(std::conj(u) * g[0]);
    const double gy = 2.0 * std::real(std::conj(u) * g[1]);
    const double hxx = 2.0 * std::real(std::conj(g[0]) * g[0] + std::conj(u) * hs[0]);
    const double hxy = 2.0 * std::real(std::conj(g[0]) * g[1] + std::conj(u) * hs[1]);
    const double hyy = 2.0 * std::real(std::conj(g[1]) * g[1] + std::conj(u) * hs[2]);
    const double det = hxx * hyy - hxy * hxy;
    if (!(hxx < 0.0 && det > 0.0)) break;  // not locally concave
    double dx = -(hyy * gx - hxy * gy) / det;
    double dy = -(-hxy * gx + hxx * gy) / det;
    const double step = std::hypot(dx, dy);
    if (step > spacing) {
      dx *= spacing / step;
      dy *= spacing / step;
    }
    x += dx;
    y += dy;
    if (step < 1e-12) break;
  }
  Complex u, g[2], hs[3];
  sum.eval(x, y, u, g, hs);
  return std::max(best, std::abs(u));
}

}  // namespace detail

/// Sup norm of the field on T^2: grid maximum on `grid` followed by Newton
/// refinement of the `candidates` largest grid values by direct summation.
inline double torus_sup_norm(const SpectralField& field, const std::shared_ptr<const TorusGrid>& grid,
                             int candidates = 4) {
  if (grid->dim() != 2) throw InvalidArgument("torus_sup_norm: T^2 only");
  const auto values = synthesize_torus(field, grid);
  std::vector<std::size_t> order(values.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto top = std::min<std::size_t>(static_cast<std::size_t>(candidates), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(top), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double va = std::abs(values.values[a]), vb = std::abs(values.values[b]);
                      return va != vb ? va > vb : a < b;
                    });
  detail::TorusSum sum;
  const double norm = 1.0 / kTwoPi;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field.coeffs()[i] == Complex(0.0, 0.0)) continue;
    const auto k = flat_wavevector(field.modes()[i]);
    sum.k1.push_back(k[0]);
    sum.k2.push_back(k[1]);
    sum.c.push_back(field.coeffs()[i] * norm);
  }
  double best = 0.0;
  for (std::size_t r = 0; r < top; ++r) {
    const auto x = grid->node(order[r]);
    best = std::max(best, detail::refine_sup(sum, x[0], x[1], std::abs(values.values[order[r]]), grid->spacing()));
  }
  return best;
}

/// Dirichlet-kernel surrogate of a point mass (all coefficients 1) on the
/// manifold of `op` (T^2 or two circles), localized by phi(4^{-j} lambda).
inline SpectralField localized_point_mass(const SignatureOperator& op, int j, const PartitionBump& bump) {
  if (!op.manifold.is_flat_torus() || op.manifold.dimension() != 2) {
    throw InvalidArgument("localized_point_mass: operator must live on a flat 2-torus");
  }
  for (const auto& f : op.manifold.factors()) {
    if (std::get<Torus>(f).period != kTwoPi) throw InvalidArgument("localized_point_mass: period must be 2 pi");
  }
  const double hi = std::ldexp(4.0, 2 * j);
  const double lo = std::ldexp(0.25, 2 * j);
  const auto ks = lattice_shell(2, lo, hi);
  std::vector<Complex> c(ks.size(), Complex(1.0, 0.0));
  const auto field = torus_field(op.manifold, ks, std::move(c));
  return lp_project(field, j, bump);
}

/// Sup-norm decay of e^{-itP} phi(-h^2 Delta) delta on T^2, h = 2^{-j}, over
/// n_times log-spaced times in [h/64, alpha h], and again with alpha / 2.
/// Predicted slope -m/2 with m the (H2) rank of the signature.
inline DispersionResult dispersion_experiment(const SignatureOperator& op, int j, const PartitionBump& bump,
                                              double alpha = 0.5, int n_times = 16, int grid_n = 0,
                                              double tolerance = kDispersionTolerance) {
  if (j < 4) throw InvalidArgument("dispersion_experiment: need h = 2^{-j} with j >= 4");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("dispersion_experiment: alpha must lie in (0, 1]");
  if (n_times < 4) throw InvalidArgument("dispersion_experiment: need at least 4 time samples");
  DispersionResult r;
  r.j = j;
  r.h = std::ldexp(1.0, -j);
  r.alpha = alpha;
  r.m = degeneracy_check(op, 1).m;

  const int kmax = 1 << (j + 1);
  if (grid_n == 0) grid_n = 4 * kmax;
  if (grid_n <= 2 * kmax) {
    throw ResolutionError("dispersion_experiment: grid N = " + std::to_string(grid_n) +
                          " does not resolve |k| < " + std::to_string(kmax));
  }
  auto grid = std::make_shared<const TorusGrid>(2, grid_n);
  const double t_min = r.h / 64.0;
  // Fastest group velocity 2 |k| must move the packet at least one cell.
  if (2.0 * kmax * t_min < grid->spacing()) {
    throw ResolutionError("dispersion_experiment: time window below grid resolution");
  }

  const auto u0 = localized_point_mass(op, j, bump);
  for (const auto& c : u0.coeffs()) r.mode_sum += c.real();
  r.mode_sum /= kTwoPi;
  r.sup_at_zero = torus_sup_norm(u0, grid);

  auto run = [&](double a, ScalingExperiment& e) {
    e.family = "point-mass";
    e.observable = "sup_norm";
    e.claim = "dispersive bound |t|^{-m/2} h^{m-n}";
    e.predicted = -0.5 * r.m;
    e.results.resize(static_cast<std::size_t>(n_times));
    const double t_max = a * r.h;
    parallel_for(e.results.size(), [&](std::size_t i) {
      const double t = t_min * std::pow(t_max / t_min, static_cast<double>(i) / (n_times - 1));
      e.results[i] = {t, torus_sup_norm(propagate_exact(op, u0, t), grid)};
    });
    return e.fit(tolerance);
  };
  r.fit = run(alpha, r.sup);
  r.fit_half = run(0.5 * alpha, r.sup_half);
  return r;
}

// ---------------------------------------------------------------------------
// Random data on T^2

/// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

struct RandomSweepResult {
  MixedNormSpec spec;
  double s = 0.0;
  std::vector<int> js;
  std::vector<std::vector<double>> quotients;  ///< [block][trial]
  ScalingExperiment block_max;                 ///< param 2^j = 1/h
  FitResult fit;                               ///< slope of the block maxima against 1/h
  bool all_converged = true;

  /// max / min of the per-block maxima.
  double variation() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& p : block_max.results) {
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
    }
    return hi / lo;
  }
  /// Largest Q(j') / Q(j) over j < j'.
  double growth() const {
    double g = 0.0;
    for (std::size_t a = 0; a < block_max.results.size(); ++a) {
      for (std::size_t b = a + 1; b < block_max.results.size(); ++b) {
        g = std::max(g, block_max.results[b].value / block_max.results[a].value);
      }
    }
    return g;
  }
};

/// Complex Gaussian data on lambda in (4^{j-1}, 4^{j+1}) for each block j;
/// records the Strichartz quotient at regularity s for every trial. Streams
/// are seeded from (seed, j, trial), so results do not depend on scheduling.
inline RandomSweepResult random_data_sweep(const SignatureOperator& op, const MixedNormSpec& spec, double s,
                                           const std::vector<int>& js, int trials, std::uint64_t seed) {
  if (trials < 8) throw InvalidArgument("random_data_sweep: need at least 8 trials per block");
  if (js.empty()) throw InvalidArgument("random_data_sweep: empty block list");
  if (!op.manifold.is_flat_torus() || op.manifold.dimension() != 2) {
    throw InvalidArgument("random_data_sweep: operator must live on a flat 2-torus");
  }
  spec.validate();
  RandomSweepResult r;
  r.spec = spec;
  r.s = s;
  r.js = js;
  r.quotients.assign(js.size(), std::vector<double>(static_cast<std::size_t>(trials)));
  std::vector<char> converged(js.size() * static_cast<std::size_t>(trials), 1);

  for (std::size_t b = 0; b < js.size(); ++b) {
    const int j = js[b];
    if (j < 1 || j > 10) throw InvalidArgument("random_data_sweep: block index j must lie in [1, 10]");
    const auto ks = lattice_shell(2, std::ldexp(1.0, 2 * (j - 1)), std::ldexp(1.0, 2 * (j + 1)));
    auto grid = std::make_shared<const TorusGrid>(2, 1 << (j + 3));
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
      std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(j), t));
      std::normal_distribution<double> g(0.0, 1.0);
      std::vector<Complex> c(ks.size());
      for (auto& v : c) {
        const double re = g(rng);
        v = Complex(re, g(rng));
      }
      const auto u0 = torus_field(op.manifold, ks, std::move(c));
      const auto q = strichartz_quotient(op, u0, spec, s, grid);
      r.quotients[b][t] = q.quotient;
      converged[b * static_cast<std::size_t>(trials) + t] = q.mixed.converged ? 1 : 0;
    });
  }
  r.all_converged = std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
  r.block_max.family = "random";
  r.block_max.observable = "block_max_quotient";
  r.block_max.claim = "Strichartz bound at H^{(2n/m-1)/p}";
  const int m = degeneracy_check(op, 1).m;
  const double loss = (2.0 * op.manifold.dimension() / m - 1.0) / spec.p;
  // Bounded quotients (slope 0) are expected once s reaches the loss.
  if (s >= loss - 1e-12) r.block_max.predicted = 0.0;
  for (std::size_t b = 0; b < js.size(); ++b) {
    r.block_max.results.push_back(
        {std::ldexp(1.0, js[b]), *std::max_element(r.quotients[b].begin(), r.quotients[b].end())});
  }
  if (r.block_max.results.size() >= 3) r.fit = fit_loglog(r.block_max.results);
  return r;
}

}  // namespace slab
