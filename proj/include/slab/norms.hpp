#pragma once

// Spatial L^q norms, L^p_t L^q_x mixed norms, Strichartz quotients and the
// exact reductions for data of the form u(x, y) = f(x.y) on S^3 x S^3.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "slab/errors.hpp"
#include "slab/geometry.hpp"
#include "slab/operators.hpp"
#include "slab/parallel.hpp"
#include "slab/spectral.hpp"

namespace slab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// (sum_i w_i |v_i|^q)^{1/q}; q = infinity gives max |v_i|.
template <class Grid>
double lq_norm(const GridField<Grid>& field, double q) {
  if (!(q >= 1.0)) throw InvalidArgument("lq_norm: q must be >= 1");
  if (std::isinf(q)) {
    double m = 0.0;
    for (const auto& v : field.values) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  const auto& g = *field.grid;
  if (q == 2.0) {
    for (std::size_t i = 0; i < field.values.size(); ++i) s += g.weight(i) * std::norm(field.values[i]);
    return std::sqrt(s);
  }
  if (q == std::floor(q) && q <= 16.0) {
    // Integer exponents by repeated multiplication; even ones skip the sqrt.
    const int k = static_cast<int>(q);
    for (std::size_t i = 0; i < field.values.size(); ++i) {
      const double n2 = std::norm(field.values[i]);
      double a = 1.0;
      if (k % 2 == 0) {
        for (int e = 0; e < k / 2; ++e) a *= n2;
      } else {
        const double r = std::sqrt(n2);
        for (int e = 0; e < k; ++e) a *= r;
      }
      s += g.weight(i) * a;
    }
    return std::pow(s, 1.0 / q);
  }
  for (std::size_t i = 0; i < field.values.size(); ++i) s += g.weight(i) * std::pow(std::abs(field.values[i]), q);
  return std::pow(s, 1.0 / q);
}

// ---------------------------------------------------------------------------
// Mixed norms

/// Exponents and time window of an L^p([0, T]; L^q) norm.
struct MixedNormSpec {
  double p = 2.0;
  double q = 2.0;
  double T = 1.0;
  int time_samples = 16;        ///< initial midpoint count; doubled until converged
  int max_time_samples = 8192;
  double rel_tol = 1e-3;

  /// 2/p + n/q = n/2 with p >= 2 and (n, p, q) != (2, 2, inf).
  bool admissible(int n) const {
    if (!(p >= 2.0)) return false;
    if (n == 2 && p == 2.0 && std::isinf(q)) return false;
    const double lhs = 2.0 / p + (std::isinf(q) ? 0.0 : n / q);
    return std::abs(lhs - 0.5 * n) <= 1e-12;
  }

  /// 1/p + sigma/q = sigma/2 with p >= 2 and (sigma, p, q) != (1, 2, inf).
  bool sigma_admissible(double sigma) const {
    if (!(p >= 2.0) || !(sigma > 0.0)) return false;
    if (sigma == 1.0 && p == 2.0 && std::isinf(q)) return false;
    const double lhs = 1.0 / p + (std::isinf(q) ? 0.0 : sigma / q);
    return std::abs(lhs - 0.5 * sigma) <= 1e-12;
  }

  void validate() const {
    if (!(p >= 1.0)) throw InvalidArgument("MixedNormSpec: p must be >= 1");
    if (!(q >= 1.0)) throw InvalidArgument("MixedNormSpec: q must be >= 1");
    if (!(T > 0.0)) throw InvalidArgument("MixedNormSpec: T must be > 0");
    if (time_samples < 1 || max_time_samples < time_samples) {
      throw InvalidArgument("MixedNormSpec: bad time sample counts");
    }
  }
};

struct MixedNormResult {
  double value = 0.0;
  double previous = 0.0;   ///< value at half the final sample count
  int time_samples = 0;
  bool converged = false;
  double relative_change() const {
    return value == 0.0 ? std::abs(value - previous) : std::abs(value - previous) / std::abs(value);
  }
};

/// Composite-midpoint evaluation of (int_0^T g(t)^p dt)^{1/p} for the
/// spatial norm g(t) = ||u(t)||_{L^q}, doubling the sample count until the
/// relative change is below spec.rel_tol. p = infinity takes the max over
/// samples. Time samples may be evaluated in parallel.
inline MixedNormResult mixed_norm(const std::function<double(double)>& spatial_norm, const MixedNormSpec& spec) {
  spec.validate();
  auto evaluate = [&](int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    const double dt = spec.T / n;
    parallel_for(g.size(), [&](std::size_t i) { g[i] = spatial_norm((static_cast<double>(i) + 0.5) * dt); });
    if (std::isinf(spec.p)) {
      double m = 0.0;
      for (double v : g) m = std::max(m, v);
      return m;
    }
    double s = 0.0;
    for (double v : g) s += std::pow(v, spec.p);
    return std::pow(s * dt, 1.0 / spec.p);
  };
  MixedNormResult r;
  int n = spec.time_samples;
  double prev = evaluate(n);
  while (true) {
    const int next = 2 * n;
    if (next > spec.max_time_samples) {
      r.value = prev;
      r.previous = prev;
      r.time_samples = n;
      r.converged = false;
      return r;
    }
    const double cur = evaluate(next);
    r.value = cur;
    r.previous = prev;
    r.time_samples = next;
    if (r.relative_change() <= spec.rel_tol) {
      r.converged = true;
      return r;
    }
    prev = cur;
    n = next;
  }
}

/// Mixed norm of e^{-itP} u0 synthesized on a uniform torus grid.
/// Grid positions and symbol eigenvalues are computed once.
inline MixedNormResult mixed_norm(const SignatureOperator& op, const SpectralField& u0, const MixedNormSpec& spec,
                                  const std::shared_ptr<const TorusGrid>& grid) {
  const auto mu = symbol_eigenvalues(op, u0);
  const auto idx = torus_grid_indices(u0, *grid);
  return mixed_norm(
      [&](double t) {
        std::vector<Complex> data(grid->size(), Complex(0.0, 0.0));
        for (std::size_t i = 0; i < idx.size(); ++i) data[idx[i]] += u0.coeffs()[i] * std::polar(1.0, -t * mu[i]);
        return lq_norm(synthesize_torus_scattered(std::move(data), grid), spec.q);
      },
      spec);
}

// ---------------------------------------------------------------------------
// S^3 x S^3 reductions for u(x, y) = f(x.y)

/// Lift of a zonal field f on S^3 to S^3 x S^3, u(x, y) = f(x.y). The mode
/// (kappa, kappa) of the result labels the normalized paired character
/// e_kappa(x.y) / sqrt(Vol(S^3)); its -Delta eigenvalue is 2 kappa (kappa + 2).
inline SpectralField lift_product_zonal(const SpectralField& f) {
  if (!is_zonal_s3(f)) throw InvalidArgument("lift_product_zonal: field is not zonal on S^3");
  std::vector<ModeId> modes;
  std::vector<Complex> c;
  modes.reserve(f.size());
  c.reserve(f.size());
  const double root_vol = std::sqrt(kVolS3);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& part = f.modes()[i].parts[0];
    modes.push_back(ModeId{{part, part}});
    c.push_back(root_vol * f.coeffs()[i]);
  }
  return SpectralField(ManifoldSpec::sphere3_squared(), std::move(modes), std::move(c));
}

inline bool is_paired_zonal(const SpectralField& u) {
  if (!(u.manifold() == ManifoldSpec::sphere3_squared())) return false;
  for (const auto& m : u.modes()) {
    const auto& a = std::get<SphereMode>(m.parts[0]);
    const auto& b = std::get<SphereMode>(m.parts[1]);
    if (!a.zonal || !b.zonal || a.degree != b.degree) return false;
  }
  return true;
}

/// Inverse of lift_product_zonal.
inline SpectralField restrict_product_zonal(const SpectralField& u) {
  if (!is_paired_zonal(u)) throw InvalidArgument("restrict_product_zonal: field is not a paired-character lift");
  std::vector<Complex> c(u.size());
  std::vector<ModeId> modes;
  modes.reserve(u.size());
  const double root_vol = std::sqrt(kVolS3);
  for (std::size_t i = 0; i < u.size(); ++i) {
    modes.push_back(ModeId{{u.modes()[i].parts[0]}});
    c[i] = u.coeffs()[i] / root_vol;
  }
  return SpectralField(ManifoldSpec::sphere3(), std::move(modes), std::move(c));
}

/// ||f(x.y)||_{L^q(S^3 x S^3)} = Vol(S^3)^{1/q} ||f||_{L^q(S^3)} from zonal
/// samples of f.
inline double product_zonal_lq(const GridField<ZonalGrid>& f, double q) {
  const double base = lq_norm(f, q);
  return std::isinf(q) ? base : std::pow(kVolS3, 1.0 / q) * base;
}

inline int max_zonal_degree(const SpectralField& f) {
  int k = 0;
  for (const auto& m : f.modes()) k = std::max(k, std::get<SphereMode>(m.parts[0]).degree);
  return k;
}

/// Same, from zonal coefficients. The synthesis grid defaults to
/// N = max(8 (K + 1), 256); for even integer q this integrates |f|^q exactly.
inline double product_zonal_lq(const SpectralField& f, double q, std::shared_ptr<const ZonalGrid> grid = nullptr) {
  if (!is_zonal_s3(f)) throw InvalidArgument("product_zonal_lq: field is not zonal on S^3");
  if (!grid) grid = std::make_shared<const ZonalGrid>(std::max(8 * (max_zonal_degree(f) + 1), 256));
  return product_zonal_lq(synthesize_zonal(f, std::move(grid)), q);
}

/// Exact ||f(x.y)||_{H^s(S^3 x S^3)} =
/// (sum_kappa (1 + 2 kappa (kappa + 2))^s Vol |c_kappa|^2)^{1/2}.
inline double product_zonal_hs(const SpectralField& f, double s) {
  if (!is_zonal_s3(f)) throw InvalidArgument("product_zonal_hs: field is not zonal on S^3");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    acc += std::pow(1.0 + 2.0 * f.eigenvalues()[i], s) * kVolS3 * std::norm(f.coeffs()[i]);
  }
  return std::sqrt(acc);
}

/// Mixed norm of e^{-itP} u0 for a paired-character lift u0 on S^3 x S^3.
/// The flow keeps the form g_t(x.y), so each time slice is evaluated by the
/// zonal reduction on `grid`.
inline MixedNormResult mixed_norm(const SignatureOperator& op, const SpectralField& u0, const MixedNormSpec& spec,
                                  const std::shared_ptr<const ZonalGrid>& grid) {
  if (!is_paired_zonal(u0)) throw InvalidArgument("mixed_norm: S^3 x S^3 data must be a paired-character lift");
  return mixed_norm(
      [&](double t) {
        return product_zonal_lq(synthesize_zonal(restrict_product_zonal(propagate_exact(op, u0, t)), grid), spec.q);
      },
      spec);
}

// ---------------------------------------------------------------------------
// Strichartz quotients

struct QuotientResult {
  double quotient = 0.0;
  double sobolev = 0.0;
  MixedNormResult mixed;
};

template <class GridPtr>
QuotientResult strichartz_quotient(const SignatureOperator& op, const SpectralField& u0, const MixedNormSpec& spec,
                                   double s, const GridPtr& grid) {
  QuotientResult r;
  r.sobolev = sobolev_norm(u0, s);
  if (!(r.sobolev > 0.0)) throw InvalidArgument("strichartz_quotient: zero initial data");
  r.mixed = mixed_norm(op, u0, spec, grid);
  r.quotient = r.mixed.value / r.sobolev;
  return r;
}

}  // namespace slab
