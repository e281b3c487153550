#pragma once

// Generators P and their propagators e^{-itP}.
//
// Signature operators P = -sum_i sign_i Delta_i on products are diagonal in
// the product eigenbasis and propagate exactly. Variable-coefficient
// operators P = -rho^{-1} d_j a^{jk} rho d_k on T^d are truncated to the
// exponentials with |k|_inf <= K and propagated through the generalized
// Hermitian eigenproblem H v = mu G v.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "slab/errors.hpp"
#include "slab/fft.hpp"
#include "slab/geometry.hpp"
#include "slab/spectral.hpp"

namespace slab {

// ---------------------------------------------------------------------------
// Operator descriptions

/// P = -sum_i sign_i Delta_i, one sign per manifold factor.
struct SignatureOperator {
  SignatureOperator(ManifoldSpec m, std::vector<int> s) : manifold(std::move(m)), signs(std::move(s)) {
    if (signs.size() != manifold.num_factors()) {
      throw InvalidArgument("SignatureOperator: need one sign per factor (" +
                            std::to_string(manifold.num_factors()) + "), got " + std::to_string(signs.size()));
    }
    for (int s : signs) {
      if (s != 1 && s != -1) throw InvalidArgument("SignatureOperator: signs must be +1 or -1");
    }
  }

  bool elliptic() const {
    return std::all_of(signs.begin(), signs.end(), [&](int s) { return s == signs.front(); });
  }

  ManifoldSpec manifold;
  std::vector<int> signs;
};

/// Real trigonometric polynomial on T^d, f(x) = sum_m c_m e^{i m.x}.
class TrigPoly {
 public:
  explicit TrigPoly(int d) : d_(d) {
    if (d < 1) throw InvalidArgument("TrigPoly: d must be >= 1");
  }

  static TrigPoly constant(int d, double value) {
    TrigPoly p(d);
    p.add(std::vector<int>(static_cast<std::size_t>(d), 0), value);
    return p;
  }

  /// amplitude * cos(freq * x_axis).
  static TrigPoly cosine(int d, int axis, int freq, double amplitude) {
    TrigPoly p(d);
    std::vector<int> m(static_cast<std::size_t>(d), 0);
    m[static_cast<std::size_t>(axis)] = freq;
    p.add(m, 0.5 * amplitude);
    m[static_cast<std::size_t>(axis)] = -freq;
    p.add(m, 0.5 * amplitude);
    return p;
  }

  /// amplitude * sin(freq * x_axis).
  static TrigPoly sine(int d, int axis, int freq, double amplitude) {
    TrigPoly p(d);
    std::vector<int> m(static_cast<std::size_t>(d), 0);
    m[static_cast<std::size_t>(axis)] = freq;
    p.add(m, Complex(0.0, -0.5 * amplitude));
    m[static_cast<std::size_t>(axis)] = -freq;
    p.add(m, Complex(0.0, 0.5 * amplitude));
    return p;
  }

  TrigPoly& add(const std::vector<int>& m, Complex c) {
    if (static_cast<int>(m.size()) != d_) throw InvalidArgument("TrigPoly: frequency dimension mismatch");
    coeffs_[m] += c;
    return *this;
  }

  TrigPoly operator+(const TrigPoly& o) const {
    if (o.d_ != d_) throw InvalidArgument("TrigPoly: dimension mismatch");
    TrigPoly r = *this;
    for (const auto& [m, c] : o.coeffs_) r.coeffs_[m] += c;
    return r;
  }

  int dim() const { return d_; }
  const std::map<std::vector<int>, Complex>& coeffs() const { return coeffs_; }

  /// max |m|_inf over stored frequencies.
  int bandwidth() const {
    int b = 0;
    for (const auto& [m, c] : coeffs_) {
      for (int v : m) b = std::max(b, std::abs(v));
    }
    return b;
  }

  double operator()(const std::vector<double>& x) const {
    Complex s(0.0, 0.0);
    for (const auto& [m, c] : coeffs_) {
      double phase = 0.0;
      for (int a = 0; a < d_; ++a) phase += m[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
      s += c * std::polar(1.0, phase);
    }
    return s.real();
  }

  /// True when c_{-m} = conj(c_m) within tol, i.e. the function is real.
  bool is_real(double tol = 1e-14) const {
    for (const auto& [m, c] : coeffs_) {
      std::vector<int> neg(m);
      for (auto& v : neg) v = -v;
      const auto it = coeffs_.find(neg);
      const Complex partner = it == coeffs_.end() ? Complex(0.0, 0.0) : it->second;
      if (std::abs(partner - std::conj(c)) > tol) return false;
    }
    return true;
  }

  bool operator==(const TrigPoly& o) const { return d_ == o.d_ && coeffs_ == o.coeffs_; }

 private:
  int d_;
  std::map<std::vector<int>, Complex> coeffs_;
};

/// P = -rho^{-1} d_j a^{jk} rho d_k on (R / 2 pi Z)^d, d mu = rho dx.
struct VariableTorusOperator {
  VariableTorusOperator(int dim, TrigPoly density, std::vector<std::vector<TrigPoly>> metric)
      : d(dim), rho(std::move(density)), a(std::move(metric)) {
    if (rho.dim() != d) throw InvalidArgument("VariableTorusOperator: rho dimension mismatch");
    if (!rho.is_real()) throw InvalidArgument("VariableTorusOperator: rho must be real");
    if (static_cast<int>(a.size()) != d) throw InvalidArgument("VariableTorusOperator: a must be d x d");
    for (int j = 0; j < d; ++j) {
      if (static_cast<int>(a[static_cast<std::size_t>(j)].size()) != d) {
        throw InvalidArgument("VariableTorusOperator: a must be d x d");
      }
      for (int k = 0; k < d; ++k) {
        const auto& ajk = a[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
        if (ajk.dim() != d || !ajk.is_real()) {
          throw InvalidArgument("VariableTorusOperator: a^{jk} must be real on T^d");
        }
        if (!(ajk == a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)])) {
          throw InvalidArgument("VariableTorusOperator: coefficient tables a^{jk}, a^{kj} differ");
        }
      }
    }
  }

  /// rho = 1, a = diag(entries).
  static VariableTorusOperator diagonal(std::vector<TrigPoly> entries) {
    const int d = static_cast<int>(entries.size());
    std::vector<std::vector<TrigPoly>> a(entries.size(), std::vector<TrigPoly>(entries.size(), TrigPoly(d)));
    for (std::size_t i = 0; i < entries.size(); ++i) a[i][i] = entries[i];
    return VariableTorusOperator(d, TrigPoly::constant(d, 1.0), std::move(a));
  }

  Eigen::MatrixXd metric_at(const std::vector<double>& x) const {
    Eigen::MatrixXd m(d, d);
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) m(j, k) = a[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)](x);
    }
    return m;
  }

  int coefficient_bandwidth() const {
    int b = 0;
    for (const auto& row : a) {
      for (const auto& e : row) b = std::max(b, e.bandwidth());
    }
    return b + rho.bandwidth();
  }

  int d;
  TrigPoly rho;
  std::vector<std::vector<TrigPoly>> a;
};

using OperatorSpec = std::variant<SignatureOperator, VariableTorusOperator>;

// ---------------------------------------------------------------------------
// Signature operators: exact propagation

/// mu = sum_i sign_i lambda_i(mode); negative values signal non-ellipticity.
inline double symbol_eigenvalue(const SignatureOperator& op, const ModeId& mode) {
  validate_mode(op.manifold, mode);
  double mu = 0.0;
  for (std::size_t i = 0; i < mode.parts.size(); ++i) {
    mu += op.signs[i] * factor_eigenvalue(op.manifold.factors()[i], mode.parts[i]);
  }
  return mu;
}

inline std::vector<double> symbol_eigenvalues(const SignatureOperator& op, const SpectralField& field) {
  if (!(field.manifold() == op.manifold)) throw InvalidArgument("field and operator live on different manifolds");
  std::vector<double> mu(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) mu[i] = symbol_eigenvalue(op, field.modes()[i]);
  return mu;
}

/// e^{-itP} applied coefficient-wise as e^{-i t mu_mode}.
inline SpectralField propagate_exact(const SignatureOperator& op, const SpectralField& field, double t) {
  const auto mu = symbol_eigenvalues(op, field);
  std::vector<Complex> c(field.coeffs());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= std::polar(1.0, -t * mu[i]);
  return field.with_coeffs(std::move(c));
}

// ---------------------------------------------------------------------------
// Galerkin truncation for variable coefficients

/// Fourier coefficients ghat(m) = (2 pi)^{-d} int g e^{-im.x} dx of a
/// product of trigonometric polynomials, computed by uniform quadrature
/// (exact once the grid exceeds twice the bandwidth).
class FourierTable {
 public:
  FourierTable(int d, int bandwidth, int grid_n, const std::function<double(const std::vector<double>&)>& g)
      : d_(d), bandwidth_(bandwidth), n_(grid_n) {
    if (grid_n < 2 * bandwidth + 1) {
      throw ResolutionError("Fourier quadrature grid N = " + std::to_string(grid_n) +
                            " too coarse for coefficient bandwidth " + std::to_string(bandwidth));
    }
    const TorusGrid grid(d, grid_n);
    data_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) data_[i] = g(grid.node(i));
    fft::dft(data_, std::vector<int>(static_cast<std::size_t>(d), grid_n), fft::Direction::kForward);
    for (auto& v : data_) v /= static_cast<double>(grid.size());
  }

  Complex operator()(const std::vector<int>& m) const {
    std::size_t idx = 0;
    for (int a = 0; a < d_; ++a) {
      const int v = m[static_cast<std::size_t>(a)];
      if (std::abs(v) > bandwidth_) return Complex(0.0, 0.0);
      idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>(v < 0 ? v + n_ : v);
    }
    return data_[idx];
  }

 private:
  int d_;
  int bandwidth_;
  int n_;
  std::vector<Complex> data_;
};

/// Truncated operator: H_kl = <e_k, P e_l>_{rho dx},
/// G_kl = <e_k, e_l>_{rho dx}, with e_k = e^{ik.x} / (2 pi)^{d/2},
/// |k|_inf <= K. Immutable; the generalized eigendecomposition is computed
/// at construction.
class GalerkinSystem {
 public:
  GalerkinSystem(int d, int cutoff, std::vector<std::vector<int>> modes, Eigen::MatrixXcd h, Eigen::MatrixXcd gram)
      : d_(d), cutoff_(cutoff), modes_(std::move(modes)), h_(std::move(h)), gram_(std::move(gram)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gram_eig(gram_, Eigen::EigenvaluesOnly);
    min_gram_eigenvalue_ = gram_eig.eigenvalues().minCoeff();
    if (!(min_gram_eigenvalue_ > 0.0)) {
      throw InvalidArgument("GalerkinSystem: Gram matrix is not positive definite");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h_, gram_);
    if (solver.info() != Eigen::Success) throw InvalidArgument("GalerkinSystem: eigensolver failed");
    mu_ = solver.eigenvalues();
    v_ = solver.eigenvectors();
    // v^H G v = I, so coefficients in the eigenbasis are v^H G c.
    to_eigen_ = v_.adjoint() * gram_;
  }

  int dim() const { return d_; }
  int cutoff() const { return cutoff_; }
  std::size_t size() const { return modes_.size(); }
  const std::vector<std::vector<int>>& modes() const { return modes_; }
  const Eigen::MatrixXcd& h() const { return h_; }
  const Eigen::MatrixXcd& gram() const { return gram_; }
  const Eigen::VectorXd& eigenvalues() const { return mu_; }
  double min_gram_eigenvalue() const { return min_gram_eigenvalue_; }

  double hermitian_defect() const { return (h_ - h_.adjoint()).cwiseAbs().maxCoeff(); }

  std::size_t index_of(const std::vector<int>& k) const {
    std::size_t idx = 0;
    for (int a = 0; a < d_; ++a) {
      const int v = k[static_cast<std::size_t>(a)];
      if (std::abs(v) > cutoff_) {
        throw InvalidArgument("GalerkinSystem: wavevector outside the truncation |k|_inf <= K");
      }
      idx = idx * static_cast<std::size_t>(2 * cutoff_ + 1) + static_cast<std::size_t>(v + cutoff_);
    }
    return idx;
  }

  double gram_norm(const Eigen::VectorXcd& c) const {
    return std::sqrt(std::max(0.0, (c.adjoint() * gram_ * c)(0, 0).real()));
  }

  Eigen::VectorXcd propagate(const Eigen::VectorXcd& c, double t) const {
    if (static_cast<std::size_t>(c.size()) != size()) {
      throw InvalidArgument("GalerkinSystem::propagate: coefficient vector has wrong length");
    }
    Eigen::VectorXcd w = to_eigen_ * c;
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) *= std::polar(1.0, -t * mu_(i));
    return v_ * w;
  }

  /// Fraction of coefficient energy on modes with |k|_inf > K / 2.
  double tail_fraction(const Eigen::VectorXcd& c) const {
    double total = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      const double e = std::norm(c(static_cast<Eigen::Index>(i)));
      total += e;
      int inf = 0;
      for (int v : modes_[i]) inf = std::max(inf, std::abs(v));
      if (2 * inf > cutoff_) tail += e;
    }
    return total > 0.0 ? tail / total : 0.0;
  }

  /// (1 - Delta)^{s/2}-weighted norm in L^2(rho dx).
  double sobolev_norm(const Eigen::VectorXcd& c, double s) const {
    Eigen::VectorXcd w = c;
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      double k2 = 0.0;
      for (int v : modes_[i]) k2 += static_cast<double>(v) * v;
      w(static_cast<Eigen::Index>(i)) *= std::pow(1.0 + k2, 0.5 * s);
    }
    return gram_norm(w);
  }

 private:
  int d_;
  int cutoff_;
  std::vector<std::vector<int>> modes_;
  Eigen::MatrixXcd h_;
  Eigen::MatrixXcd gram_;
  double min_gram_eigenvalue_ = 0.0;
  Eigen::VectorXd mu_;
  Eigen::MatrixXcd v_;
  Eigen::MatrixXcd to_eigen_;
};

inline constexpr std::size_t kMaxGalerkinSize = 4096;

/// Assembles H and G by exact trigonometric quadrature. `quadrature_n` = 0
/// picks the smallest power of two above twice the coefficient bandwidth.
inline GalerkinSystem assemble_galerkin(const VariableTorusOperator& op, int cutoff, int quadrature_n = 0) {
  if (cutoff < 1) throw InvalidArgument("assemble_galerkin: K must be >= 1");
  const int d = op.d;
  const int bw = op.coefficient_bandwidth();
  int qn = quadrature_n;
  if (qn == 0) {
    qn = 1;
    while (qn < 2 * bw + 2) qn *= 2;
    qn = std::max(qn, 16);
  }

  // rho > 0 on the quadrature grid and on a finer sample grid.
  const int check_n = std::max(qn, d <= 2 ? 64 : 16);
  int pow2 = 1;
  while (pow2 < check_n) pow2 *= 2;
  const TorusGrid check(d, pow2);
  for (std::size_t i = 0; i < check.size(); ++i) {
    if (!(op.rho(check.node(i)) > 0.0)) {
      throw HypothesisViolation("assemble_galerkin: rho <= 0 at a sample point");
    }
  }

  std::size_t count = 1;
  for (int a = 0; a < d; ++a) count *= static_cast<std::size_t>(2 * cutoff + 1);
  if (count > kMaxGalerkinSize) {
    throw InvalidArgument("assemble_galerkin: truncation has " + std::to_string(count) + " modes (cap " +
                          std::to_string(kMaxGalerkinSize) + ")");
  }
  std::vector<std::vector<int>> modes;
  modes.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::vector<int> k(static_cast<std::size_t>(d));
    std::size_t r = idx;
    for (int a = d - 1; a >= 0; --a) {
      k[static_cast<std::size_t>(a)] = static_cast<int>(r % static_cast<std::size_t>(2 * cutoff + 1)) - cutoff;
      r /= static_cast<std::size_t>(2 * cutoff + 1);
    }
    modes.push_back(std::move(k));
  }

  const FourierTable rho_hat(d, op.rho.bandwidth(), qn, [&](const std::vector<double>& x) { return op.rho(x); });
  std::vector<std::vector<FourierTable>> g_hat;
  g_hat.reserve(static_cast<std::size_t>(d));
  for (int p = 0; p < d; ++p) {
    std::vector<FourierTable> row;
    for (int q = 0; q < d; ++q) {
      const auto& apq = op.a[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
      row.emplace_back(d, apq.bandwidth() + op.rho.bandwidth(), qn,
                       [&](const std::vector<double>& x) { return apq(x) * op.rho(x); });
    }
    g_hat.push_back(std::move(row));
  }

  const auto n = static_cast<Eigen::Index>(count);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(n, n);
  std::vector<int> diff(static_cast<std::size_t>(d));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& k = modes[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& l = modes[static_cast<std::size_t>(c)];
      bool in_band = true;
      for (int a = 0; a < d; ++a) {
        diff[static_cast<std::size_t>(a)] = k[static_cast<std::size_t>(a)] - l[static_cast<std::size_t>(a)];
        if (std::abs(diff[static_cast<std::size_t>(a)]) > bw) in_band = false;
      }
      if (!in_band) continue;
      gram(r, c) = rho_hat(diff);
      // int a^{pq} rho (d_p e_l) conj(d_q e_k) dx = k_q l_p ghat_pq(k - l)
      Complex acc(0.0, 0.0);
      for (int p = 0; p < d; ++p) {
        for (int q = 0; q < d; ++q) {
          acc += static_cast<double>(l[static_cast<std::size_t>(p)]) * k[static_cast<std::size_t>(q)] *
                 g_hat[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)](diff);
        }
      }
      h(r, c) = acc;
    }
  }
  return GalerkinSystem(d, cutoff, std::move(modes), std::move(h), std::move(gram));
}

/// Galerkin coefficient vector of a flat-torus spectral field (orthonormal
/// exponential coefficients). Throws if a mode lies outside the truncation.
inline Eigen::VectorXcd galerkin_coefficients(const GalerkinSystem& sys, const SpectralField& field) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sys.size()));
  for (std::size_t i = 0; i < field.size(); ++i) {
    c(static_cast<Eigen::Index>(sys.index_of(flat_wavevector(field.modes()[i])))) += field.coeffs()[i];
  }
  return c;
}

inline Eigen::VectorXcd propagate_galerkin(const GalerkinSystem& sys, const Eigen::VectorXcd& c, double t) {
  return sys.propagate(c, t);
}

// ---------------------------------------------------------------------------
// (H2) degeneracy rank

struct DegeneracyReport {
  int m = 0;                      ///< uniform principal rank; 0 if degenerate everywhere
  double min_abs_det = 0.0;       ///< min over samples of |det b| for the chosen pattern
  std::vector<int> pattern;       ///< coordinate indices of the principal submatrix b
  int samples = 0;                ///< sample resolution (per axis)
  int min_pointwise_rank = 0;
  int max_pointwise_rank = 0;
  double threshold = 1e-6;
};

namespace detail {

inline void for_each_subset(int n, int m, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    f(idx);
    int i = m - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - m + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < m; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline double principal_det(const Eigen::MatrixXd& a, const std::vector<int>& s) {
  const auto m = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd b(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) b(i, j) = a(s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]);
  }
  return std::abs(b.determinant());
}

}  // namespace detail

/// Coefficient matrix of a signature operator in an orthonormal frame:
/// diag(sign_i) repeated over each factor's dimensions.
inline Eigen::MatrixXd signature_metric(const SignatureOperator& op) {
  const int n = op.manifold.dimension();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  int off = 0;
  for (std::size_t i = 0; i < op.signs.size(); ++i) {
    const int fd = factor_dim(op.manifold.factors()[i]);
    for (int j = 0; j < fd; ++j) a(off + j, off + j) = op.signs[i];
    off += fd;
  }
  return a;
}

/// Largest m such that one fixed m x m principal submatrix of a^{jk}(x) has
/// |det| >= threshold at every sample point. Samples are a uniform grid with
/// `samples` points per axis.
inline DegeneracyReport degeneracy_check(const OperatorSpec& op, int samples, double threshold = 1e-6) {
  if (samples < 1) throw InvalidArgument("degeneracy_check: samples must be >= 1");
  std::vector<Eigen::MatrixXd> mats;
  int n = 0;
  if (const auto* sig = std::get_if<SignatureOperator>(&op)) {
    mats.push_back(signature_metric(*sig));
    n = sig->manifold.dimension();
  } else {
    const auto& var = std::get<VariableTorusOperator>(op);
    n = var.d;
    std::size_t total = 1;
    for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(samples);
    mats.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::vector<double> x(static_cast<std::size_t>(n));
      std::size_t r = idx;
      for (int a = n - 1; a >= 0; --a) {
        x[static_cast<std::size_t>(a)] = kTwoPi * static_cast<double>(r % static_cast<std::size_t>(samples)) / samples;
        r /= static_cast<std::size_t>(samples);
      }
      mats.push_back(var.metric_at(x));
    }
  }

  DegeneracyReport rep;
  rep.samples = samples;
  rep.threshold = threshold;

  for (int m = n; m >= 1 && rep.m == 0; --m) {
    double best = -1.0;
    std::vector<int> best_pattern;
    detail::for_each_subset(n, m, [&](const std::vector<int>& s) {
      double mn = std::numeric_limits<double>::infinity();
      for (const auto& a : mats) mn = std::min(mn, detail::principal_det(a, s));
      if (mn > best) {
        best = mn;
        best_pattern = s;
      }
    });
    if (best >= threshold) {
      rep.m = m;
      rep.min_abs_det = best;
      rep.pattern = best_pattern;
    }
  }

  rep.min_pointwise_rank = n;
  rep.max_pointwise_rank = 0;
  for (const auto& a : mats) {
    int r = 0;
    for (int m = n; m >= 1 && r == 0; --m) {
      detail::for_each_subset(n, m, [&](const std::vector<int>& s) {
        if (r == 0 && detail::principal_det(a, s) >= threshold) r = m;
      });
    }
    rep.min_pointwise_rank = std::min(rep.min_pointwise_rank, r);
    rep.max_pointwise_rank = std::max(rep.max_pointwise_rank, r);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Energy estimates

struct EnergyDriftReport {
  double max_ratio = 1.0;     ///< max_t ||u(t)||_{H^s} / ||u0||_{H^s}
  double min_ratio = 1.0;
  double growth_rate = 0.0;   ///< smallest C with ratio <= e^{C|t|} on the samples
  double max_tail = 0.0;      ///< truncation-tail indicator (Galerkin only)
};

inline EnergyDriftReport energy_drift(const SignatureOperator& op, const SpectralField& u0, double s,
                                      const std::vector<double>& times) {
  const double base = sobolev_norm(u0, s);
  if (!(base > 0.0)) throw InvalidArgument("energy_drift: zero initial data");
  EnergyDriftReport rep;
  rep.max_ratio = 0.0;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (double t : times) {
    const double r = sobolev_norm(propagate_exact(op, u0, t), s) / base;
    rep.max_ratio = std::max(rep.max_ratio, r);
    rep.min_ratio = std::min(rep.min_ratio, r);
    if (t != 0.0) rep.growth_rate = std::max(rep.growth_rate, std::log(r) / std::abs(t));
  }
  return rep;
}

inline EnergyDriftReport energy_drift(const GalerkinSystem& sys, const Eigen::VectorXcd& u0, double s,
                                      const std::vector<double>& times) {
  const double base = sys.sobolev_norm(u0, s);
  if (!(base > 0.0)) throw InvalidArgument("energy_drift: zero initial data");
  EnergyDriftReport rep;
  rep.max_ratio = 0.0;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (double t : times) {
    const Eigen::VectorXcd u = sys.propagate(u0, t);
    const double r = sys.sobolev_norm(u, s) / base;
    rep.max_ratio = std::max(rep.max_ratio, r);
    rep.min_ratio = std::min(rep.min_ratio, r);
    rep.max_tail = std::max(rep.max_tail, sys.tail_fraction(u));
    if (t != 0.0) rep.growth_rate = std::max(rep.growth_rate, std::log(r) / std::abs(t));
  }
  return rep;
}

}  // namespace slab
