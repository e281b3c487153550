#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "slab/operators.hpp"
#include "test_support.hpp"

using namespace slab;

namespace {

std::vector<Complex> random_coeffs(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Complex> c(n);
  for (auto& v : c) v = Complex(g(rng), g(rng));
  return c;
}

SignatureOperator torus_signature(int a, int b) { return SignatureOperator(ManifoldSpec::circles(2), {a, b}); }

SpectralField circles_field(const std::vector<std::vector<int>>& ks, std::vector<Complex> c) {
  return torus_field(ManifoldSpec::circles(2), ks, std::move(c));
}

// Smooth positive density and symmetric positive metric with low bandwidth.
VariableTorusOperator random_smooth_operator(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const int d = 2;
  TrigPoly rho = TrigPoly::constant(d, 1.0) + TrigPoly::cosine(d, 0, 1, u(rng)) + TrigPoly::sine(d, 1, 1, u(rng));
  TrigPoly a11 = TrigPoly::constant(d, 1.0) + TrigPoly::cosine(d, 1, 1, u(rng));
  TrigPoly a22 = TrigPoly::constant(d, 1.5) + TrigPoly::sine(d, 0, 2, u(rng));
  TrigPoly a12 = TrigPoly::cosine(d, 0, 1, u(rng)) + TrigPoly::sine(d, 1, 1, u(rng));
  return VariableTorusOperator(d, rho, {{a11, a12}, {a12, a22}});
}

// Oracle: <e_k, P e_l>_{rho dx} from the strong form, with the divergence
// taken by central differences and the integral by a fine midpoint rule.
Complex strong_form_entry(const VariableTorusOperator& op, const std::vector<int>& k, const std::vector<int>& l) {
  const int n = 96;
  const double h = 1e-4;
  const double dx = kTwoPi / n;
  auto flux = [&](int j, double x, double y) {
    const std::vector<double> p{x, y};
    Complex f(0.0, 0.0);
    const Complex el = std::polar(1.0, l[0] * x + l[1] * y) / kTwoPi;
    for (int m = 0; m < 2; ++m) {
      f += op.a[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)](p) * op.rho(p) * Complex(0.0, l[static_cast<std::size_t>(m)]) * el;
    }
    return f;
  };
  Complex acc(0.0, 0.0);
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      const double x = (ix + 0.5) * dx, y = (iy + 0.5) * dx;
      const Complex div = (flux(0, x + h, y) - flux(0, x - h, y)) / (2.0 * h) +
                          (flux(1, x, y + h) - flux(1, x, y - h)) / (2.0 * h);
      const Complex ek = std::polar(1.0, k[0] * x + k[1] * y) / kTwoPi;
      acc += std::conj(ek) * (-div) * dx * dx;
    }
  }
  return acc;
}

}  // namespace

TEST(SymbolEigenvalue, SignaturePatterns) {
  const auto k = ModeId::product({ModeId::torus({3}), ModeId::torus({4})});
  EXPECT_EQ(symbol_eigenvalue(torus_signature(1, 1), k), 25.0);
  EXPECT_EQ(symbol_eigenvalue(torus_signature(1, -1), k), -7.0);
  const SignatureOperator s3(ManifoldSpec::sphere3_squared(), {1, -1});
  for (int kappa = 0; kappa < 20; ++kappa) {
    const auto z = ModeId::zonal(kappa);
    EXPECT_EQ(symbol_eigenvalue(s3, ModeId::product({z, z})), 0.0);
  }
  EXPECT_THROW(SignatureOperator(ManifoldSpec::circles(2), {1}), InvalidArgument);
  EXPECT_THROW(SignatureOperator(ManifoldSpec::circles(2), {1, 2}), InvalidArgument);
  EXPECT_FALSE(torus_signature(1, -1).elliptic());
  EXPECT_TRUE(torus_signature(-1, -1).elliptic());
}

TEST(PropagateExact, IdentityUnitarityAndKernel) {
  std::mt19937_64 rng(3);
  const auto ks = lattice_shell(2, -1.0, 50.0);
  const auto f = circles_field(ks, random_coeffs(ks.size(), rng));
  const auto op = torus_signature(1, -1);
  const auto same = propagate_exact(op, f, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(same.coeffs()[i], f.coeffs()[i]);
  for (double t : {0.1, 0.77, 5.0, -3.0}) {
    EXPECT_NEAR(propagate_exact(op, f, t).l2_norm(), f.l2_norm(), 1e-13 * f.l2_norm());
  }
  // Diagonal lattice |k1| = |k2| is the kernel of Delta_1 - Delta_2.
  const auto kernel = circles_field({{2, 2}, {-3, 3}, {0, 0}}, random_coeffs(3, rng));
  const auto moved = propagate_exact(op, kernel, 12.5);
  for (std::size_t i = 0; i < kernel.size(); ++i) EXPECT_EQ(moved.coeffs()[i], kernel.coeffs()[i]);
}

TEST(PropagateExactProperty, GroupLawAndInverse) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ut(-2.0, 2.0);
  const auto op = torus_signature(1, -1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ks = lattice_shell(2, -1.0, 40.0);
    const auto f = circles_field(ks, random_coeffs(ks.size(), rng));
    const double t1 = ut(rng), t2 = ut(rng);
    const auto a = propagate_exact(op, f, t1 + t2);
    const auto b = propagate_exact(op, propagate_exact(op, f, t2), t1);
    const auto back = propagate_exact(op, propagate_exact(op, f, t1), -t1);
    for (std::size_t i = 0; i < f.size(); ++i) {
      EXPECT_LE(std::abs(a.coeffs()[i] - b.coeffs()[i]), 1e-12 * (1.0 + std::abs(f.coeffs()[i])));
      EXPECT_LE(std::abs(back.coeffs()[i] - f.coeffs()[i]), 1e-12 * (1.0 + std::abs(f.coeffs()[i])));
    }
  }
}

TEST(AssembleGalerkin, FlatLaplacianInOneDimension) {
  const auto op = VariableTorusOperator::diagonal({TrigPoly::constant(1, 1.0)});
  const auto sys = assemble_galerkin(op, 6);
  ASSERT_EQ(sys.size(), 13u);
  for (std::size_t r = 0; r < sys.size(); ++r) {
    for (std::size_t c = 0; c < sys.size(); ++c) {
      const int k = sys.modes()[r][0];
      const Complex h = sys.h()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      const Complex g = sys.gram()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      EXPECT_NEAR(std::abs(h - (r == c ? Complex(k * k, 0.0) : Complex(0.0, 0.0))), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(g - (r == c ? Complex(1.0, 0.0) : Complex(0.0, 0.0))), 0.0, 1e-12);
    }
  }
}

TEST(AssembleGalerkin, CosineCouplingMatchesDirectIntegration) {
  // P = -d_x^2 - d_y cos(x) d_y: P e_l = (l_x^2 + cos(x) l_y^2) e_l.
  const auto op = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::cosine(2, 0, 1, 1.0)});
  const auto sys = assemble_galerkin(op, 3);
  const std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs = {
      {{1, 2}, {0, 2}}, {{-1, 2}, {0, 2}}, {{0, 3}, {0, 3}}, {{2, -1}, {1, -1}}, {{1, 1}, {0, 2}}, {{2, 2}, {0, 2}}};
  const int n = 64;
  const double dx = kTwoPi / n;
  for (const auto& [k, l] : pairs) {
    Complex oracle(0.0, 0.0);
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        const double x = ix * dx, y = iy * dx;
        const Complex ek = std::polar(1.0, k[0] * x + k[1] * y) / kTwoPi;
        const Complex el = std::polar(1.0, l[0] * x + l[1] * y) / kTwoPi;
        oracle += std::conj(ek) * (l[0] * l[0] + std::cos(x) * l[1] * l[1]) * el * dx * dx;
      }
    }
    const Complex got = sys.h()(static_cast<Eigen::Index>(sys.index_of(k)), static_cast<Eigen::Index>(sys.index_of(l)));
    EXPECT_LE(std::abs(got - oracle), 1e-12) << k[0] << "," << k[1] << " <- " << l[0] << "," << l[1];
  }
  // The y-quadratic part couples (k_x, k_y) to (k_x +- 1, k_y) with weight l_y^2 / 2.
  const Complex c = sys.h()(static_cast<Eigen::Index>(sys.index_of({1, 2})), static_cast<Eigen::Index>(sys.index_of({0, 2})));
  EXPECT_NEAR(c.real(), 2.0, 1e-12);
}

TEST(AssembleGalerkin, VariableDensityMatchesStrongForm) {
  std::mt19937_64 rng(12);
  const auto op = random_smooth_operator(rng);
  const auto sys = assemble_galerkin(op, 2);
  for (const auto& [k, l] : std::vector<std::pair<std::vector<int>, std::vector<int>>>{
           {{1, 0}, {1, 0}}, {{0, 1}, {1, 0}}, {{2, -1}, {1, 0}}, {{-1, 2}, {0, 1}}}) {
    const Complex got = sys.h()(static_cast<Eigen::Index>(sys.index_of(k)), static_cast<Eigen::Index>(sys.index_of(l)));
    EXPECT_LE(std::abs(got - strong_form_entry(op, k, l)), 1e-6);
  }
}

TEST(AssembleGalerkin, Errors) {
  TrigPoly rho = TrigPoly::constant(1, 0.5) + TrigPoly::cosine(1, 0, 1, 1.0);
  const VariableTorusOperator bad(1, rho, {{TrigPoly::constant(1, 1.0)}});
  EXPECT_THROW(assemble_galerkin(bad, 4), HypothesisViolation);
  const auto op = VariableTorusOperator::diagonal({TrigPoly::cosine(1, 0, 5, 0.1) + TrigPoly::constant(1, 1.0)});
  EXPECT_THROW(assemble_galerkin(op, 4, 8), ResolutionError);
  EXPECT_THROW(assemble_galerkin(op, 0), InvalidArgument);
  const auto big = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::constant(2, 1.0)});
  EXPECT_THROW(assemble_galerkin(big, 40), InvalidArgument);
  EXPECT_THROW(VariableTorusOperator(2, TrigPoly::constant(2, 1.0),
                                     {{TrigPoly::constant(2, 1.0), TrigPoly::cosine(2, 0, 1, 0.1)},
                                      {TrigPoly::sine(2, 0, 1, 0.1), TrigPoly::constant(2, 1.0)}}),
               InvalidArgument);
}

TEST(GalerkinProperty, HermitianForRandomSmoothCoefficients) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = assemble_galerkin(random_smooth_operator(rng), 5);
    EXPECT_LE(sys.hermitian_defect(), 1e-10);
    EXPECT_GT(sys.min_gram_eigenvalue(), 0.0);
  }
}

TEST(PropagateGalerkin, ConstantCoefficientsMatchExactPropagation) {
  const auto sig = torus_signature(1, -1);
  const auto var = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::constant(2, -1.0)});
  const auto sys = assemble_galerkin(var, 8);

  std::vector<double> mu(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& k = sys.modes()[i];
    mu[i] = symbol_eigenvalue(sig, ModeId::product({ModeId::torus({k[0]}), ModeId::torus({k[1]})}));
  }
  std::sort(mu.begin(), mu.end());
  for (std::size_t i = 0; i < mu.size(); ++i) EXPECT_NEAR(sys.eigenvalues()(static_cast<Eigen::Index>(i)), mu[i], 1e-10);

  std::mt19937_64 rng(19);
  std::vector<std::vector<int>> ks;
  for (int a = -4; a <= 4; ++a) {
    for (int b = -4; b <= 4; ++b) ks.push_back({a, b});
  }
  const auto f = circles_field(ks, random_coeffs(ks.size(), rng));
  const auto c0 = galerkin_coefficients(sys, f);
  const auto same = propagate_galerkin(sys, c0, 0.0);
  EXPECT_LE((same - c0).cwiseAbs().maxCoeff(), 1e-12);
  for (double t : {0.1, 0.5, 1.0}) {
    const auto exact = galerkin_coefficients(sys, propagate_exact(sig, f, t));
    const auto approx = propagate_galerkin(sys, c0, t);
    EXPECT_LE((exact - approx).cwiseAbs().maxCoeff(), 1e-10) << t;
    EXPECT_NEAR(sys.gram_norm(approx), sys.gram_norm(c0), 1e-10 * sys.gram_norm(c0));
  }
}

TEST(PropagateGalerkin, GramNormConservedForVariableDensity) {
  std::mt19937_64 rng(4);
  const auto sys = assemble_galerkin(random_smooth_operator(rng), 6);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sys.size()));
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& k = sys.modes()[i];
    if (std::abs(k[0]) <= 2 && std::abs(k[1]) <= 2) c(static_cast<Eigen::Index>(i)) = Complex(g(rng), g(rng));
  }
  const double n0 = sys.gram_norm(c);
  for (double t : {0.25, 1.0, 3.0}) EXPECT_NEAR(sys.gram_norm(propagate_galerkin(sys, c, t)), n0, 1e-10 * n0);
}

TEST(DegeneracyCheck, IdentityCosineAndMixedSignature) {
  const auto id = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::constant(2, 1.0)});
  const auto r1 = degeneracy_check(id, 16);
  EXPECT_EQ(r1.m, 2);
  EXPECT_NEAR(r1.min_abs_det, 1.0, 1e-15);

  // Oracle: sweep a = diag(1, cos x) directly on 256 points per axis.
  const auto cosine = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::cosine(2, 0, 1, 1.0)});
  double min_full = 1e300, min_first = 1e300;
  for (int i = 0; i < 256; ++i) {
    const double x = kTwoPi * i / 256;
    const auto a = cosine.metric_at({x, 0.0});
    min_full = std::min(min_full, std::abs(a.determinant()));
    min_first = std::min(min_first, std::abs(a(0, 0)));
  }
  const auto r2 = degeneracy_check(cosine, 256);
  EXPECT_LT(min_full, 1e-6);
  EXPECT_EQ(r2.m, 1);
  EXPECT_EQ(r2.pattern, std::vector<int>{0});
  EXPECT_NEAR(r2.min_abs_det, min_first, 1e-15);
  EXPECT_EQ(r2.min_pointwise_rank, 1);
  EXPECT_EQ(r2.max_pointwise_rank, 2);

  const SignatureOperator mixed(ManifoldSpec({Torus{3}, Torus{3}}), {1, -1});
  const auto r3 = degeneracy_check(mixed, 1);
  EXPECT_EQ(r3.m, 6);
  EXPECT_NEAR(r3.min_abs_det, 1.0, 1e-15);
  const auto r4 = degeneracy_check(SignatureOperator(ManifoldSpec::sphere3_squared(), {1, -1}), 1);
  EXPECT_EQ(r4.m, 6);

  std::vector<TrigPoly> diag;
  for (int i = 0; i < 6; ++i) diag.push_back(TrigPoly::constant(6, i < 3 ? 1.0 : -1.0));
  EXPECT_EQ(degeneracy_check(VariableTorusOperator::diagonal(diag), 3).m, 6);
}

TEST(DegeneracyCheck, DegenerateEverywhereIsAReport) {
  const auto zero = VariableTorusOperator::diagonal({TrigPoly(1)});
  const auto r = degeneracy_check(zero, 8);
  EXPECT_EQ(r.m, 0);
  EXPECT_EQ(r.max_pointwise_rank, 0);
}

TEST(DegeneracyCheckProperty, RankStableUnderRefinement) {
  const auto cosine = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::cosine(2, 0, 1, 1.0)});
  for (int samples : {4, 8, 16, 32, 64}) EXPECT_EQ(degeneracy_check(cosine, samples).m, 1) << samples;
  std::mt19937_64 rng(6);
  const auto smooth = random_smooth_operator(rng);
  for (int samples : {4, 8, 16, 32}) EXPECT_EQ(degeneracy_check(smooth, samples).m, 2) << samples;
}

TEST(EnergyDrift, SignatureIsExactlyConserved) {
  std::mt19937_64 rng(2);
  const auto ks = lattice_shell(2, -1.0, 200.0);
  const auto f = circles_field(ks, random_coeffs(ks.size(), rng));
  for (double s : {0.0, 0.5, 1.0, 2.0}) {
    const auto rep = energy_drift(torus_signature(1, -1), f, s, {0.0, 0.1, 0.25, 0.5, 0.75, 1.0});
    EXPECT_NEAR(rep.max_ratio, 1.0, 1e-12);
    EXPECT_NEAR(rep.min_ratio, 1.0, 1e-12);
  }
}

TEST(EnergyDrift, VariableCoefficientsGrowAtMostExponentially) {
  const auto op = VariableTorusOperator::diagonal(
      {TrigPoly::constant(2, 1.0), TrigPoly::constant(2, 1.0) + TrigPoly::cosine(2, 0, 1, 0.5)});
  const auto sys = assemble_galerkin(op, 12);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sys.size()));
  c(static_cast<Eigen::Index>(sys.index_of({1, 1}))) = 1.0;
  c(static_cast<Eigen::Index>(sys.index_of({-1, 2}))) = Complex(0.0, 0.5);
  std::vector<double> times;
  for (int i = 0; i <= 10; ++i) times.push_back(0.1 * i);
  const auto l2 = energy_drift(sys, c, 0.0, times);
  EXPECT_NEAR(l2.max_ratio, 1.0, 1e-10);
  EXPECT_NEAR(l2.min_ratio, 1.0, 1e-10);
  const auto h1 = energy_drift(sys, c, 1.0, times);
  EXPECT_TRUE(std::isfinite(h1.growth_rate));
  EXPECT_GT(h1.max_ratio, 1.0 + 1e-6);
  EXPECT_LE(h1.max_ratio, std::exp(h1.growth_rate) + 1e-12);
  EXPECT_LT(h1.max_tail, 1e-6);
}
