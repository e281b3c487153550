#pragma once

// Model manifolds (S^3, flat tori, finite products), the SU(2) group law on
// S^3 and quadrature rules for their volume measures.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "slab/errors.hpp"

namespace slab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Vol(S^3) = 2 pi^2.
inline constexpr double kVolS3 = 2.0 * std::numbers::pi * std::numbers::pi;
inline constexpr double kUnitTolerance = 1e-12;

// ---------------------------------------------------------------------------
// S^3 as the unit quaternions

/// Point of S^3 in R^4. Construction enforces |x| = 1 within 1e-12.
class UnitQuaternion {
 public:
  /// Identity element (1, 0, 0, 0).
  constexpr UnitQuaternion() = default;

  static UnitQuaternion identity() { return UnitQuaternion{}; }

  /// Throws InvalidArgument unless x1^2 + ... + x4^2 = 1 within 1e-12.
  static UnitQuaternion from_coords(double x1, double x2, double x3, double x4) {
    const double n2 = x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4;
    if (!(std::abs(n2 - 1.0) <= kUnitTolerance)) {
      throw InvalidArgument("UnitQuaternion: |x|^2 = " + std::to_string(n2) +
                            " is not 1 within 1e-12");
    }
    return UnitQuaternion(x1, x2, x3, x4);
  }

  /// Projects a nonzero vector of R^4 onto S^3.
  static UnitQuaternion normalized(double x1, double x2, double x3, double x4) {
    const double n = std::sqrt(x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InvalidArgument("UnitQuaternion: cannot normalize a zero or non-finite vector");
    }
    return UnitQuaternion(x1 / n, x2 / n, x3 / n, x4 / n);
  }

  /// Point at geodesic distance theta from the identity in direction
  /// omega (a unit vector of R^3): (cos theta, sin theta * omega).
  static UnitQuaternion from_polar(double theta, const std::array<double, 3>& omega) {
    const double s = std::sin(theta);
    return normalized(std::cos(theta), s * omega[0], s * omega[1], s * omega[2]);
  }

  double x1() const { return x_[0]; }
  double x2() const { return x_[1]; }
  double x3() const { return x_[2]; }
  double x4() const { return x_[3]; }
  const std::array<double, 4>& coords() const { return x_; }

  /// Geodesic distance to the identity, in [0, pi].
  double angle() const { return std::acos(std::clamp(x_[0], -1.0, 1.0)); }

  /// The SU(2) image [[a, b], [-conj(b), conj(a)]] with a = x1 + i x2 and
  /// b = x3 + i x4. Returned as (a, b).
  std::array<std::complex<double>, 2> su2() const {
    return {std::complex<double>(x_[0], x_[1]), std::complex<double>(x_[2], x_[3])};
  }

 private:
  UnitQuaternion(double x1, double x2, double x3, double x4) : x_{x1, x2, x3, x4} {}

  std::array<double, 4> x_{1.0, 0.0, 0.0, 0.0};
};

/// Group product a.b, computed through the SU(2) homomorphism and
/// renormalized.
inline UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b) {
  const auto [aa, ab] = a.su2();
  const auto [ba, bb] = b.su2();
  // [[aa, ab], [-ab*, aa*]] [[ba, bb], [-bb*, ba*]]
  const std::complex<double> alpha = aa * ba - ab * std::conj(bb);
  const std::complex<double> beta = aa * bb + ab * std::conj(ba);
  return UnitQuaternion::normalized(alpha.real(), alpha.imag(), beta.real(), beta.imag());
}

inline UnitQuaternion quat_inv(const UnitQuaternion& a) {
  return UnitQuaternion::from_coords(a.x1(), -a.x2(), -a.x3(), -a.x4());
}

// ---------------------------------------------------------------------------
// Manifolds

struct Torus {
  int dim = 1;
  double period = kTwoPi;
};

struct Sphere3 {};

using ManifoldFactor = std::variant<Torus, Sphere3>;

inline int factor_dim(const ManifoldFactor& f) {
  return std::holds_alternative<Torus>(f) ? std::get<Torus>(f).dim : 3;
}

/// Ordered product of flat tori and round 3-spheres.
class ManifoldSpec {
 public:
  explicit ManifoldSpec(std::vector<ManifoldFactor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw InvalidArgument("ManifoldSpec: at least one factor required");
    for (const auto& f : factors_) {
      if (const auto* t = std::get_if<Torus>(&f)) {
        if (t->dim < 1) throw InvalidArgument("ManifoldSpec: torus dimension must be >= 1");
        if (!(t->period > 0.0)) throw InvalidArgument("ManifoldSpec: torus period must be > 0");
      }
    }
  }

  static ManifoldSpec torus(int d, double period = kTwoPi) {
    return ManifoldSpec({Torus{d, period}});
  }
  /// (T^1)^d written as d separate circle factors, so that each coordinate
  /// can carry its own sign in a signature operator.
  static ManifoldSpec circles(int d, double period = kTwoPi) {
    return ManifoldSpec(std::vector<ManifoldFactor>(static_cast<std::size_t>(d), Torus{1, period}));
  }
  static ManifoldSpec sphere3() { return ManifoldSpec({Sphere3{}}); }
  static ManifoldSpec sphere3_squared() { return ManifoldSpec({Sphere3{}, Sphere3{}}); }

  const std::vector<ManifoldFactor>& factors() const { return factors_; }
  std::size_t num_factors() const { return factors_.size(); }

  int dimension() const {
    int n = 0;
    for (const auto& f : factors_) n += factor_dim(f);
    return n;
  }

  double volume() const {
    double v = 1.0;
    for (const auto& f : factors_) {
      if (const auto* t = std::get_if<Torus>(&f)) {
        v *= std::pow(t->period, t->dim);
      } else {
        v *= kVolS3;
      }
    }
    return v;
  }

  /// True when every factor is a torus; the whole manifold is then a flat
  /// torus whose coordinates are the concatenated factor coordinates.
  bool is_flat_torus() const {
    for (const auto& f : factors_) {
      if (!std::holds_alternative<Torus>(f)) return false;
    }
    return true;
  }

  bool operator==(const ManifoldSpec& o) const {
    if (factors_.size() != o.factors_.size()) return false;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (factors_[i].index() != o.factors_[i].index()) return false;
      if (const auto* t = std::get_if<Torus>(&factors_[i])) {
        const auto& u = std::get<Torus>(o.factors_[i]);
        if (t->dim != u.dim || t->period != u.period) return false;
      }
    }
    return true;
  }

 private:
  std::vector<ManifoldFactor> factors_;
};

// ---------------------------------------------------------------------------
// Quadrature

/// Nodes with positive weights approximating integration against a volume
/// measure. `tolerance` is the declared accuracy of the rule on the function
/// class it was built for.
template <class Point>
class QuadratureGrid {
 public:
  QuadratureGrid(std::vector<Point> nodes, std::vector<double> weights, double tolerance)
      : nodes_(std::move(nodes)), weights_(std::move(weights)), tolerance_(tolerance) {
    if (nodes_.size() != weights_.size()) {
      throw InvalidArgument("QuadratureGrid: node/weight count mismatch");
    }
    for (double w : weights_) {
      if (!(w > 0.0)) throw InvalidArgument("QuadratureGrid: weights must be positive");
    }
  }

  std::size_t size() const { return nodes_.size(); }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  double tolerance() const { return tolerance_; }

  double total_weight() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

  template <class F>
  auto integrate(F&& f) const {
    using R = decltype(f(nodes_.front()));
    R s{};
    for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(nodes_[i]);
    return s;
  }

 private:
  std::vector<Point> nodes_;
  std::vector<double> weights_;
  double tolerance_;
};

using S3Grid = QuadratureGrid<UnitQuaternion>;

/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    w[static_cast<std::size_t>(i)] = wi;
    w[static_cast<std::size_t>(n - 1 - i)] = wi;
  }
}

/// Product rule on S^3 in coordinates (theta, omega), x = (cos theta,
/// sin theta * omega), d mu = sin^2 theta d theta d omega. Gauss rule against
/// sin^2 theta in theta; Gauss-Legendre x uniform azimuth on S^2. Integrates
/// every polynomial of coordinate degree <= 2 * level exactly.
inline S3Grid haar_grid_s3(int level) {
  if (level < 1) throw InvalidArgument("haar_grid_s3: level must be >= 1");
  const int degree = 2 * level;
  const int n_theta = level + 1;
  const int n_z = level + 1;
  const int n_phi = degree + 1;

  std::vector<double> z, wz;
  gauss_legendre(n_z, z, wz);

  std::vector<UnitQuaternion> nodes;
  std::vector<double> weights;
  nodes.reserve(static_cast<std::size_t>(n_theta * n_z * n_phi));
  weights.reserve(nodes.capacity());
  for (int i = 1; i <= n_theta; ++i) {
    // Gauss-Chebyshev of the second kind in t = cos theta.
    const double theta = kPi * i / (n_theta + 1);
    const double w_theta = kPi / (n_theta + 1) * std::sin(theta) * std::sin(theta);
    for (int a = 0; a < n_z; ++a) {
      const double rho = std::sqrt(std::max(0.0, 1.0 - z[a] * z[a]));
      for (int b = 0; b < n_phi; ++b) {
        const double phi = kTwoPi * b / n_phi;
        const std::array<double, 3> omega{rho * std::cos(phi), rho * std::sin(phi), z[a]};
        nodes.push_back(UnitQuaternion::from_polar(theta, omega));
        weights.push_back(w_theta * wz[a] * (kTwoPi / n_phi));
      }
    }
  }
  return S3Grid(std::move(nodes), std::move(weights), 1e-10);
}

/// Pullback of a grid under the isometry L_a: nodes y -> a.y, weights kept.
inline S3Grid left_translate(const UnitQuaternion& a, const S3Grid& grid) {
  std::vector<UnitQuaternion> nodes;
  nodes.reserve(grid.size());
  for (const auto& y : grid.nodes()) nodes.push_back(quat_mul(a, y));
  return S3Grid(std::move(nodes), grid.weights(), grid.tolerance());
}

/// One-dimensional rule for zonal functions on S^3:
/// sum_i w_i f(theta_i) ~ 4 pi int_0^pi f(theta) sin^2 theta d theta.
/// Nodes theta_i = i pi / (N + 1), i = 1..N (Gauss-Chebyshev of the second
/// kind in cos theta): exact for polynomials in cos theta of degree <= 2N - 1.
class ZonalGrid {
 public:
  explicit ZonalGrid(int n) : n_(n) {
    if (n < 2) throw InvalidArgument("zonal_grid_s3: N must be >= 2");
    thetas_.resize(static_cast<std::size_t>(n));
    weights_.resize(static_cast<std::size_t>(n));
    const double h = kPi / (n + 1);
    for (int i = 0; i < n; ++i) {
      const double th = h * (i + 1);
      const double s = std::sin(th);
      thetas_[static_cast<std::size_t>(i)] = th;
      weights_[static_cast<std::size_t>(i)] = 4.0 * kPi * h * s * s;
    }
  }

  int n() const { return n_; }
  std::size_t size() const { return thetas_.size(); }
  double theta(std::size_t i) const { return thetas_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& thetas() const { return thetas_; }
  const std::vector<double>& weights() const { return weights_; }
  double spacing() const { return kPi / (n_ + 1); }

  template <class F>
  auto integrate(F&& f) const {
    using R = decltype(f(0.0));
    R s{};
    for (std::size_t i = 0; i < thetas_.size(); ++i) s += weights_[i] * f(thetas_[i]);
    return s;
  }

 private:
  int n_;
  std::vector<double> thetas_;
  std::vector<double> weights_;
};

inline ZonalGrid zonal_grid_s3(int n) { return ZonalGrid(n); }

/// Uniform product grid on (R / 2 pi Z)^d with N points per axis. Node
/// index is row-major with the last axis fastest.
class TorusGrid {
 public:
  TorusGrid(int d, int n) : d_(d), n_(n) {
    if (d < 1) throw InvalidArgument("torus_grid: d must be >= 1");
    if (n < 1 || (n & (n - 1)) != 0) throw InvalidArgument("torus_grid: N must be a power of two");
    total_ = 1;
    for (int i = 0; i < d; ++i) total_ *= static_cast<std::size_t>(n);
  }

  int dim() const { return d_; }
  int n() const { return n_; }
  std::size_t size() const { return total_; }
  double spacing() const { return kTwoPi / n_; }
  double weight(std::size_t = 0) const { return std::pow(spacing(), d_); }
  double total_weight() const { return std::pow(kTwoPi, d_); }

  std::vector<double> node(std::size_t idx) const {
    std::vector<double> x(static_cast<std::size_t>(d_));
    for (int a = d_ - 1; a >= 0; --a) {
      x[static_cast<std::size_t>(a)] = spacing() * static_cast<double>(idx % static_cast<std::size_t>(n_));
      idx /= static_cast<std::size_t>(n_);
    }
    return x;
  }

  template <class F>
  auto integrate(F&& f) const {
    using R = decltype(f(std::vector<double>{}));
    R s{};
    for (std::size_t i = 0; i < total_; ++i) s += f(node(i));
    return s * weight();
  }

  bool operator==(const TorusGrid& o) const { return d_ == o.d_ && n_ == o.n_; }

 private:
  int d_;
  int n_;
  std::size_t total_;
};

inline TorusGrid torus_grid(int d, int n) { return TorusGrid(d, n); }

}  // namespace slab
