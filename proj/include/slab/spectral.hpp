#pragma once

// Spectral representation over orthonormal eigenbases of the model
// Laplacian: flat-torus exponentials e^{ik.x} / (2 pi)^{d/2} and zonal
// S^3 characters U_k(cos theta) / sqrt(2 pi^2). Sobolev norms and
// Littlewood-Paley multipliers act diagonally on these coefficients.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "slab/errors.hpp"
#include "slab/fft.hpp"
#include "slab/geometry.hpp"

namespace slab {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Mode identifiers

/// Eigenfunction label on one S^3 factor: degree kappa and an index inside
/// the (kappa + 1)^2-dimensional eigenspace. Zonal modes are the characters.
struct SphereMode {
  int degree = 0;
  int index = 0;
  bool zonal = true;

  bool operator==(const SphereMode&) const = default;
};

/// Lattice vector for a torus factor, or an S^3 label.
using FactorMode = std::variant<std::vector<int>, SphereMode>;

struct ModeId {
  std::vector<FactorMode> parts;

  static ModeId torus(std::vector<int> k) { return ModeId{{FactorMode(std::move(k))}}; }
  static ModeId zonal(int degree) { return ModeId{{FactorMode(SphereMode{degree, 0, true})}}; }
  /// Product of single-factor modes.
  static ModeId product(const std::vector<ModeId>& ms) {
    ModeId out;
    for (const auto& m : ms) out.parts.insert(out.parts.end(), m.parts.begin(), m.parts.end());
    return out;
  }

  bool operator==(const ModeId&) const = default;

  /// Flat integer key, used for ordering and uniqueness checks.
  std::vector<int> key() const {
    std::vector<int> k;
    for (const auto& p : parts) {
      if (const auto* v = std::get_if<std::vector<int>>(&p)) {
        k.push_back(0);
        k.insert(k.end(), v->begin(), v->end());
      } else {
        const auto& s = std::get<SphereMode>(p);
        k.push_back(1);
        k.push_back(s.degree);
        k.push_back(s.zonal ? -1 : s.index);
      }
    }
    return k;
  }
};

/// Throws InvalidArgument when `mode` is not a label for `manifold`.
inline void validate_mode(const ManifoldSpec& manifold, const ModeId& mode) {
  if (mode.parts.size() != manifold.num_factors()) {
    throw InvalidArgument("mode has " + std::to_string(mode.parts.size()) + " parts, manifold has " +
                          std::to_string(manifold.num_factors()) + " factors");
  }
  for (std::size_t i = 0; i < mode.parts.size(); ++i) {
    const auto& f = manifold.factors()[i];
    const auto& p = mode.parts[i];
    if (const auto* t = std::get_if<Torus>(&f)) {
      const auto* k = std::get_if<std::vector<int>>(&p);
      if (k == nullptr || static_cast<int>(k->size()) != t->dim) {
        throw InvalidArgument("mode part " + std::to_string(i) + " is not a T^" +
                              std::to_string(t->dim) + " lattice vector");
      }
    } else {
      const auto* s = std::get_if<SphereMode>(&p);
      if (s == nullptr || s->degree < 0) {
        throw InvalidArgument("mode part " + std::to_string(i) + " is not an S^3 label");
      }
      if (!s->zonal && (s->index < 0 || s->index >= (s->degree + 1) * (s->degree + 1))) {
        throw InvalidArgument("S^3 intra-degree index out of range");
      }
    }
  }
}

/// Eigenvalue of the factor Laplacian -Delta_i on its part of the mode.
inline double factor_eigenvalue(const ManifoldFactor& f, const FactorMode& p) {
  if (const auto* t = std::get_if<Torus>(&f)) {
    const auto& k = std::get<std::vector<int>>(p);
    double k2 = 0.0;
    for (int ki : k) k2 += static_cast<double>(ki) * ki;
    const double scale = kTwoPi / t->period;
    return k2 * scale * scale;
  }
  const int kappa = std::get<SphereMode>(p).degree;
  return static_cast<double>(kappa) * (kappa + 2);
}

/// Eigenvalue of -Delta on the product: the sum of factor eigenvalues.
inline double eigenvalue(const ManifoldSpec& manifold, const ModeId& mode) {
  validate_mode(manifold, mode);
  double lambda = 0.0;
  for (std::size_t i = 0; i < mode.parts.size(); ++i) {
    lambda += factor_eigenvalue(manifold.factors()[i], mode.parts[i]);
  }
  return lambda;
}

/// Concatenated lattice vector of a mode on a flat torus.
inline std::vector<int> flat_wavevector(const ModeId& mode) {
  std::vector<int> k;
  for (const auto& p : mode.parts) {
    const auto* v = std::get_if<std::vector<int>>(&p);
    if (v == nullptr) throw InvalidArgument("flat_wavevector: mode has an S^3 part");
    k.insert(k.end(), v->begin(), v->end());
  }
  return k;
}

// ---------------------------------------------------------------------------
// Fields

/// Coefficients over an orthonormal eigenbasis, with eigenvalue metadata.
/// The L^2 norm is the Euclidean norm of the coefficients.
class SpectralField {
 public:
  SpectralField(ManifoldSpec manifold, std::vector<ModeId> modes, std::vector<Complex> coeffs)
      : manifold_(std::move(manifold)), modes_(std::move(modes)), coeffs_(std::move(coeffs)) {
    if (modes_.size() != coeffs_.size()) {
      throw InvalidArgument("SpectralField: mode/coefficient count mismatch");
    }
    eigenvalues_.reserve(modes_.size());
    for (const auto& m : modes_) eigenvalues_.push_back(eigenvalue(manifold_, m));
    check_unique();
  }

  /// Same modes, new coefficients (no revalidation of the mode list).
  SpectralField with_coeffs(std::vector<Complex> coeffs) const {
    if (coeffs.size() != coeffs_.size()) {
      throw InvalidArgument("SpectralField: coefficient count mismatch");
    }
    SpectralField out = *this;
    out.coeffs_ = std::move(coeffs);
    return out;
  }

  const ManifoldSpec& manifold() const { return manifold_; }
  const std::vector<ModeId>& modes() const { return modes_; }
  const std::vector<Complex>& coeffs() const { return coeffs_; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  std::size_t size() const { return modes_.size(); }

  double l2_norm() const {
    double s = 0.0;
    for (const auto& c : coeffs_) s += std::norm(c);
    return std::sqrt(s);
  }

 private:
  void check_unique() const {
    std::vector<std::vector<int>> keys;
    keys.reserve(modes_.size());
    for (const auto& m : modes_) keys.push_back(m.key());
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
      throw InvalidArgument("SpectralField: duplicate mode identifier");
    }
  }

  ManifoldSpec manifold_;
  std::vector<ModeId> modes_;
  std::vector<Complex> coeffs_;
  std::vector<double> eigenvalues_;
};

/// Complex samples aligned with the nodes of a grid.
template <class Grid>
struct GridField {
  GridField(std::shared_ptr<const Grid> g, std::vector<Complex> v) : grid(std::move(g)), values(std::move(v)) {
    if (!grid) throw InvalidArgument("GridField: null grid");
    if (values.size() != grid->size()) throw InvalidArgument("GridField: value count does not match grid");
  }

  std::shared_ptr<const Grid> grid;
  std::vector<Complex> values;
};

template <class Grid, class F>
GridField<Grid> sample(std::shared_ptr<const Grid> grid, F&& f) {
  std::vector<Complex> v(grid->size());
  if constexpr (std::is_same_v<Grid, ZonalGrid>) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid->theta(i));
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid->node(i));
  }
  return GridField<Grid>(std::move(grid), std::move(v));
}

// ---------------------------------------------------------------------------
// Torus transforms

inline int torus_frequency(std::size_t idx, int n) {
  const int i = static_cast<int>(idx);
  return i < n / 2 ? i : i - n;
}

/// Coefficients against e^{ik.x} / (2 pi)^{d/2} for every representable k
/// (-N/2 <= k_a < N/2). `manifold` must be a flat torus of total dimension d
/// with period 2 pi; defaults to a single T^d factor.
inline SpectralField analyze_torus(const GridField<TorusGrid>& field,
                                   std::optional<ManifoldSpec> manifold = std::nullopt) {
  const TorusGrid& g = *field.grid;
  const int d = g.dim();
  const int n = g.n();
  ManifoldSpec m = manifold ? *manifold : ManifoldSpec::torus(d);
  if (!m.is_flat_torus() || m.dimension() != d) {
    throw InvalidArgument("analyze_torus: manifold is not a flat torus of the grid dimension");
  }
  for (const auto& f : m.factors()) {
    if (std::get<Torus>(f).period != kTwoPi) {
      throw InvalidArgument("analyze_torus: uniform grid covers period 2 pi only");
    }
  }
  std::vector<Complex> data = field.values;
  fft::dft(data, std::vector<int>(static_cast<std::size_t>(d), n), fft::Direction::kForward);
  const double scale = std::pow(kTwoPi, 0.5 * d) / static_cast<double>(g.size());

  std::vector<ModeId> modes;
  modes.reserve(g.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    std::vector<int> k(static_cast<std::size_t>(d));
    std::size_t r = idx;
    for (int a = d - 1; a >= 0; --a) {
      k[static_cast<std::size_t>(a)] = torus_frequency(r % static_cast<std::size_t>(n), n);
      r /= static_cast<std::size_t>(n);
    }
    ModeId mode;
    std::size_t off = 0;
    for (const auto& f : m.factors()) {
      const int fd = std::get<Torus>(f).dim;
      mode.parts.emplace_back(std::vector<int>(k.begin() + static_cast<long>(off),
                                               k.begin() + static_cast<long>(off + static_cast<std::size_t>(fd))));
      off += static_cast<std::size_t>(fd);
    }
    modes.push_back(std::move(mode));
    data[idx] *= scale;
  }
  return SpectralField(std::move(m), std::move(modes), std::move(data));
}

/// Flat positions of the field's modes in an FFT array on `grid`. Throws
/// ResolutionError if some mode is not representable (|k_a| >= N/2).
inline std::vector<std::size_t> torus_grid_indices(const SpectralField& field, const TorusGrid& grid) {
  const int d = grid.dim();
  const int n = grid.n();
  if (!field.manifold().is_flat_torus() || field.manifold().dimension() != d) {
    throw InvalidArgument("synthesize_torus: field is not on a flat torus of the grid dimension");
  }
  std::vector<std::size_t> out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto k = flat_wavevector(field.modes()[i]);
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a) {
      const int ka = k[static_cast<std::size_t>(a)];
      if (ka < -n / 2 || ka >= n / 2) {
        throw ResolutionError("synthesize_torus: wavevector component " + std::to_string(ka) +
                              " not representable on N = " + std::to_string(n));
      }
      idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(ka < 0 ? ka + n : ka);
    }
    out[i] = idx;
  }
  return out;
}

/// Grid values from coefficients already scattered into FFT order.
inline GridField<TorusGrid> synthesize_torus_scattered(std::vector<Complex> data,
                                                       std::shared_ptr<const TorusGrid> grid) {
  const int d = grid->dim();
  fft::dft(data, std::vector<int>(static_cast<std::size_t>(d), grid->n()), fft::Direction::kBackward);
  const double scale = 1.0 / std::pow(kTwoPi, 0.5 * d);
  for (auto& v : data) v *= scale;
  return GridField<TorusGrid>(std::move(grid), std::move(data));
}

/// Values of a flat-torus field on a uniform grid. Throws ResolutionError if
/// some mode is not representable (|k_a| >= N/2).
inline GridField<TorusGrid> synthesize_torus(const SpectralField& field, std::shared_ptr<const TorusGrid> grid) {
  const auto idx = torus_grid_indices(field, *grid);
  std::vector<Complex> data(grid->size(), Complex(0.0, 0.0));
  for (std::size_t i = 0; i < field.size(); ++i) data[idx[i]] += field.coeffs()[i];
  return synthesize_torus_scattered(std::move(data), std::move(grid));
}

/// Band-limited field on a flat torus from a coefficient rule.
/// `modes` lists lattice vectors; each becomes a mode split across the
/// manifold's torus factors.
inline SpectralField torus_field(const ManifoldSpec& manifold, const std::vector<std::vector<int>>& ks,
                                 std::vector<Complex> coeffs) {
  if (!manifold.is_flat_torus()) throw InvalidArgument("torus_field: manifold is not a flat torus");
  std::vector<ModeId> modes;
  modes.reserve(ks.size());
  for (const auto& k : ks) {
    if (static_cast<int>(k.size()) != manifold.dimension()) {
      throw InvalidArgument("torus_field: wavevector dimension mismatch");
    }
    ModeId mode;
    std::size_t off = 0;
    for (const auto& f : manifold.factors()) {
      const auto fd = static_cast<std::size_t>(std::get<Torus>(f).dim);
      mode.parts.emplace_back(std::vector<int>(k.begin() + static_cast<long>(off),
                                               k.begin() + static_cast<long>(off + fd)));
      off += fd;
    }
    modes.push_back(std::move(mode));
  }
  return SpectralField(manifold, std::move(modes), std::move(coeffs));
}

/// All lattice vectors k in Z^d whose squared length lies in the open
/// interval (lo, hi).
inline std::vector<std::vector<int>> lattice_shell(int d, double lo, double hi) {
  std::vector<std::vector<int>> out;
  const int r = static_cast<int>(std::ceil(std::sqrt(std::max(hi, 0.0))));
  std::vector<int> k(static_cast<std::size_t>(d), -r);
  while (true) {
    double k2 = 0.0;
    for (int v : k) k2 += static_cast<double>(v) * v;
    if (k2 > lo && k2 < hi) out.push_back(k);
    int a = d - 1;
    while (a >= 0 && k[static_cast<std::size_t>(a)] == r) {
      k[static_cast<std::size_t>(a)] = -r;
      --a;
    }
    if (a < 0) break;
    ++k[static_cast<std::size_t>(a)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Zonal S^3 transforms

/// Normalized zonal eigenfunction U_kappa(cos theta) / sqrt(2 pi^2),
/// eigenvalue kappa (kappa + 2).
inline double zonal_basis(int kappa, double theta) {
  const double s = std::sin(theta);
  if (std::abs(s) < 1e-300) {
    const double sign = (std::cos(theta) < 0.0 && kappa % 2 == 1) ? -1.0 : 1.0;
    return sign * (kappa + 1) / std::sqrt(kVolS3);
  }
  return std::sin((kappa + 1) * theta) / (s * std::sqrt(kVolS3));
}

inline bool is_zonal_s3(const SpectralField& f) {
  if (!(f.manifold() == ManifoldSpec::sphere3())) return false;
  for (const auto& m : f.modes()) {
    if (!std::get<SphereMode>(m.parts[0]).zonal) return false;
  }
  return true;
}

inline SpectralField zonal_field(std::vector<Complex> coeffs) {
  std::vector<ModeId> modes;
  modes.reserve(coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) modes.push_back(ModeId::zonal(static_cast<int>(k)));
  return SpectralField(ManifoldSpec::sphere3(), std::move(modes), std::move(coeffs));
}

/// Coefficients c_kappa, kappa = 0..K, of zonal samples against the
/// normalized characters. Requires K <= N / 4.
inline SpectralField analyze_zonal_s3(const GridField<ZonalGrid>& field, int max_degree) {
  const ZonalGrid& g = *field.grid;
  const int n = g.n();
  if (max_degree < 0) throw InvalidArgument("analyze_zonal_s3: K must be >= 0");
  if (4 * max_degree > n) {
    throw ResolutionError("analyze_zonal_s3: K = " + std::to_string(max_degree) +
                          " exceeds N/4 for N = " + std::to_string(n));
  }
  std::vector<double> re(static_cast<std::size_t>(n)), im(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double s = std::sin(g.theta(i));
    re[i] = s * field.values[i].real();
    im[i] = s * field.values[i].imag();
  }
  fft::dst1(re);
  fft::dst1(im);
  const double scale = 0.5 * 4.0 * kPi * g.spacing() / std::sqrt(kVolS3);
  std::vector<Complex> c(static_cast<std::size_t>(max_degree) + 1);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = scale * Complex(re[k], im[k]);
  return zonal_field(std::move(c));
}

/// Samples of a zonal field on a zonal grid. Exact for degrees < N.
inline GridField<ZonalGrid> synthesize_zonal(const SpectralField& field, std::shared_ptr<const ZonalGrid> grid) {
  if (!is_zonal_s3(field)) throw InvalidArgument("synthesize_zonal: field is not zonal on S^3");
  const int n = grid->n();
  std::vector<double> re(static_cast<std::size_t>(n), 0.0), im(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const int kappa = std::get<SphereMode>(field.modes()[i].parts[0]).degree;
    if (kappa >= n) {
      throw ResolutionError("synthesize_zonal: degree " + std::to_string(kappa) +
                            " not representable on N = " + std::to_string(n));
    }
    re[static_cast<std::size_t>(kappa)] += field.coeffs()[i].real();
    im[static_cast<std::size_t>(kappa)] += field.coeffs()[i].imag();
  }
  fft::dst1(re);
  fft::dst1(im);
  std::vector<Complex> v(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double denom = 2.0 * std::sin(grid->theta(i)) * std::sqrt(kVolS3);
    v[i] = Complex(re[i], im[i]) / denom;
  }
  return GridField<ZonalGrid>(std::move(grid), std::move(v));
}

/// Pointwise value of a zonal field at geodesic distance theta from the
/// identity.
inline Complex evaluate_zonal(const SpectralField& field, double theta) {
  Complex s(0.0, 0.0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const int kappa = std::get<SphereMode>(field.modes()[i].parts[0]).degree;
    s += field.coeffs()[i] * zonal_basis(kappa, theta);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Sobolev norms and Littlewood-Paley multipliers

/// (sum (1 + lambda)^s |c|^2)^{1/2}.
inline double sobolev_norm(const SpectralField& field, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    acc += std::pow(1.0 + field.eigenvalues()[i], s) * std::norm(field.coeffs()[i]);
  }
  return std::sqrt(acc);
}

namespace detail {

inline double exp_transition(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

/// Smooth nonincreasing step: 1 on (-inf, 1], 0 on [4, inf).
inline double smooth_step_down(double lambda) {
  if (lambda <= 1.0) return 1.0;
  if (lambda >= 4.0) return 0.0;
  const double u = (lambda - 1.0) / 3.0;
  const double a = exp_transition(u);
  const double b = exp_transition(1.0 - u);
  return b / (a + b);
}

}  // namespace detail

/// Profile phi of a 4-adic partition of unity: supp phi in (1/4, 4),
/// 0 <= phi <= 1, sum_{j >= 0} phi(4^{-j} lambda) = 1 for lambda >= 1.
class PartitionBump {
 public:
  explicit PartitionBump(std::function<double(double)> profile) : profile_(std::move(profile)) {}
  double operator()(double lambda) const { return profile_(lambda); }

 private:
  std::function<double(double)> profile_;
};

/// phi(lambda) = chi(lambda) - chi(4 lambda) with chi the exp(-1/t) smooth
/// step from 1 (lambda <= 1) to 0 (lambda >= 4). The partition sums
/// telescope.
inline PartitionBump make_partition_bump() {
  return PartitionBump([](double lambda) {
    return detail::smooth_step_down(lambda) - detail::smooth_step_down(4.0 * lambda);
  });
}

/// Multiplier phi(4^{-j} lambda_mode) applied to every coefficient.
inline SpectralField lp_project(const SpectralField& field, int j, const PartitionBump& bump) {
  if (j < 0) throw InvalidArgument("lp_project: j must be >= 0");
  const double scale = std::ldexp(1.0, -2 * j);
  std::vector<Complex> c(field.coeffs());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= bump(scale * field.eigenvalues()[i]);
  return field.with_coeffs(std::move(c));
}

}  // namespace slab
