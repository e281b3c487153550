#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "slab/experiments.hpp"
#include "test_support.hpp"

using namespace slab;

namespace {

const BumpProfile kBump = make_bump_profile(0.5);

}  // namespace

TEST(BumpProfile, ValuesAndSupport) {
  EXPECT_DOUBLE_EQ(kBump(0.0), 1.0);
  EXPECT_EQ(kBump(0.5), 0.0);
  EXPECT_EQ(kBump(0.7), 0.0);
  EXPECT_NEAR(kBump(0.25), std::exp(1.0 - 1.0 / 0.75), 1e-15);
  // Monotone decreasing on [0, r0).
  double prev = 2.0;
  for (int i = 0; i < 100; ++i) {
    const double v = kBump(0.005 * i);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_THROW(make_bump_profile(1.5), InvalidArgument);
}

TEST(BumpProfile, FlatContactAtSupportEdge) {
  EXPECT_LT(flat_contact_defect(kBump, 4, 1e-3), 1e-6);
  // A profile with a corner at r0 does not pass.
  BumpProfile cone{0.5, [](double r) { return r < 0.5 ? 1.0 - 2.0 * r : 0.0; }};
  EXPECT_GT(flat_contact_defect(cone, 4, 1e-3), 1.0);
}

TEST(BumpFamily, SamplesAndResolution) {
  const double lambda = 4.0;
  auto grid = bump_grid(lambda);
  EXPECT_EQ(grid->n(), 4096);
  const auto f = bump_family(lambda, kBump, grid);
  for (std::size_t i = 0; i < grid->size(); i += 97) {
    const double th = grid->theta(i);
    const double expect = th < 0.5 * kPi ? kBump(lambda * std::sin(th)) : 0.0;
    EXPECT_EQ(f.values[i].real(), expect);
  }
  // The antipodal cap sin(theta) < r0 / lambda is excluded.
  EXPECT_EQ(f.values.back(), Complex(0.0, 0.0));
  EXPECT_THROW(bump_family(64.0, kBump, std::make_shared<const ZonalGrid>(256)), ResolutionError);
  EXPECT_THROW(bump_grid(0.5), InvalidArgument);
}

TEST(BumpFamily, SpectralH2MatchesAnalyticLaplacian) {
  // ||(1 - Delta) phi||_{L^2(S^3)} from the closed-form radial Laplacian
  // against the zonal-spectral H^2 norm.
  for (double lambda : {2.0, 8.0}) {
    const auto datum = stationary_family(lambda, kBump);
    auto grid = datum.samples.grid;
    const auto oracle = sample(grid, [&](double th) { return bump_resolvent_profile(lambda, kBump.r0, th); });
    const double exact = lq_norm(oracle, 2.0);
    EXPECT_NEAR(sobolev_norm(datum.coeffs, 2.0) / exact, 1.0, 1e-4) << "lambda " << lambda;
    // L^2 through Parseval.
    EXPECT_NEAR(sobolev_norm(datum.coeffs, 0.0) / lq_norm(datum.samples, 2.0), 1.0, 1e-10);
  }
}

TEST(BumpFamily, ResolventProfileMatchesFiniteDifferences) {
  const double lambda = 3.0, r0 = kBump.r0, h = 1e-4;
  auto f = [&](double th) { return th < 0.5 * kPi ? kBump(lambda * std::sin(th)) : 0.0; };
  auto fd_lap = [&](double th, double step) {
    const double d1 = (f(th + step) - f(th - step)) / (2 * step);
    const double d2 = (f(th + step) - 2 * f(th) + f(th - step)) / (step * step);
    return d2 + 2.0 / std::tan(th) * d1;
  };
  for (double th : {0.02, 0.05, 0.1, 0.15}) {
    // Richardson extrapolation removes the O(h^2) term.
    const double lap = (4.0 * fd_lap(th, 0.5 * h) - fd_lap(th, h)) / 3.0;
    EXPECT_NEAR(bump_resolvent_profile(lambda, r0, th), f(th) - lap, 1e-5 * (1.0 + std::abs(lap)));
  }
}

TEST(StationaryFamily, LiftIsPairedAndConsistent) {
  const auto datum = stationary_family(4.0, kBump);
  const auto u = datum.lifted();
  EXPECT_TRUE(is_paired_zonal(u));
  EXPECT_NEAR(sobolev_norm(u, 1.0), datum.hs(1.0), 1e-12 * datum.hs(1.0));
  EXPECT_NEAR(datum.lq(2.0), datum.hs(0.0), 1e-6 * datum.hs(0.0));
}

TEST(FitLogLog, RecoversExactPowerLaws) {
  for (double slope : {-1.5, -0.5, 0.0, 0.75, 2.0}) {
    std::vector<ScalingPoint> pts;
    for (double x : {1.0, 2.0, 4.0, 8.0, 16.0}) pts.push_back({x, 3.0 * std::pow(x, slope)});
    const auto f = fit_loglog(pts);
    EXPECT_NEAR(f.slope, slope, 1e-12);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(f.stderr_slope, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
    EXPECT_EQ(f.points, 5u);
  }
}

TEST(FitLogLog, MatchesClosedFormRegression) {
  // Hand-computed regression of y = (0, 1, 1, 3) on x = (0, 1, 2, 3) in log space.
  std::vector<ScalingPoint> pts;
  const double ys[] = {0.0, 1.0, 1.0, 3.0};
  for (int i = 0; i < 4; ++i) pts.push_back({std::exp(double(i)), std::exp(ys[i])});
  const auto f = fit_loglog(pts);
  // Sxx = 5, Sxy = 4.5, Syy = 4.75, SSR = 4.75 - 0.9 * 4.5 = 0.7.
  EXPECT_NEAR(f.slope, 0.9, 1e-12);
  EXPECT_NEAR(f.intercept, 1.25 - 0.9 * 1.5, 1e-12);
  EXPECT_NEAR(f.stderr_slope, std::sqrt(0.7 / 2.0 / 5.0), 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0 - 0.7 / 4.75, 1e-12);
}

TEST(FitLogLog, NoisyDataStaysWithinStandardErrors) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.05);
  int inside = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScalingPoint> pts;
    for (int i = 0; i < 8; ++i) {
      const double x = std::ldexp(1.0, i);
      pts.push_back({x, std::pow(x, -0.5) * std::exp(noise(rng))});
    }
    const auto f = fit_loglog(pts);
    if (std::abs(f.slope + 0.5) <= 2.0 * f.stderr_slope) ++inside;
    EXPECT_GE(f.r_squared, 0.0);
    EXPECT_LE(f.r_squared, 1.0);
  }
  // About 93% for t with 6 degrees of freedom at 2 standard errors.
  EXPECT_GT(inside, 170);
}

TEST(FitLogLog, RejectsBadInput) {
  EXPECT_THROW(fit_loglog({{1, 1}, {2, 2}}), InvalidArgument);
  EXPECT_THROW(fit_loglog({{1, 1}, {2, 0}, {4, 1}}), InvalidArgument);
  EXPECT_THROW(fit_loglog({{1, 1}, {-2, 1}, {4, 1}}), InvalidArgument);
  EXPECT_THROW(fit_loglog({{2, 1}, {2, 2}, {2, 3}}), InvalidArgument);
}

TEST(FitResult, Tolerance) {
  FitResult f;
  f.slope = -0.97;
  EXPECT_FALSE(f.within_tolerance());
  EXPECT_TRUE(f.with_prediction(-1.0, 0.05).within_tolerance());
  EXPECT_FALSE(f.with_prediction(-1.0, 0.01).within_tolerance());
}

TEST(ScalingExperiment, ValidatesRange) {
  ScalingExperiment e;
  e.results = {{1, 1}, {1.5, 1}, {2, 1}, {3, 1}};
  EXPECT_THROW(e.validate(), InvalidArgument);  // under two octaves
  e.results = {{1, 1}, {2, 1}, {4, 1}};
  EXPECT_THROW(e.validate(), InvalidArgument);  // too few points
  e.results = {{1, 1}, {2, 2}, {3, 3}, {4, 4}};
  EXPECT_NO_THROW(e.validate());
  e.predicted = 1.0;
  EXPECT_TRUE(e.fit(1e-9).within_tolerance());
}

TEST(BumpScaling, SlopesMatchSupportCounting) {
  const std::vector<double> lambdas{4, 8, 16, 32};
  for (double q : {2.0, 4.0, 6.0}) {
    const auto r = bump_scaling_experiment(q, lambdas, kBump);
    EXPECT_NEAR(r.lq_fit.slope, -3.0 / q, 0.05) << "q " << q;
    EXPECT_TRUE(r.lq_fit.within_tolerance());
    EXPECT_NEAR(r.h2_fit.slope, 0.5, 0.05);
    EXPECT_GT(r.lq_fit.r_squared, 0.999);
  }
}

TEST(Sharpness, StationaryFamilySlopes) {
  const std::vector<double> lambdas{4, 8, 16, 32};
  for (double s : {0.0, 0.5, 1.0, 2.0}) {
    const auto r = sharpness_experiment(s, 2.0, 3.0, lambdas, kBump);
    EXPECT_TRUE(r.admissible);
    EXPECT_NEAR(r.lq_fit.slope, -1.0, 0.05);
    EXPECT_NEAR(r.hs_fit.slope, s - 1.5, 0.05) << "s " << s;
    EXPECT_NEAR(r.fit.slope, 0.5 - s, 0.05) << "s " << s;
    EXPECT_TRUE(r.pass());
  }
  // Inadmissible pairs run in exploratory mode and never pass.
  const auto x = sharpness_experiment(0.5, 4.0, 4.0, lambdas, kBump);
  EXPECT_FALSE(x.admissible);
  EXPECT_FALSE(x.pass());
  EXPECT_THROW(sharpness_experiment(2.5, 2.0, 3.0, lambdas, kBump), InvalidArgument);
  EXPECT_THROW(sharpness_experiment(0.5, 2.0, 3.0, {4, 8, 16}, kBump), InvalidArgument);
}

TEST(Sharpness, QuotientIsRatioOfFactors) {
  const std::vector<double> lambdas{4, 8, 16, 32};
  const auto r = sharpness_experiment(1.0, 2.0, 3.0, lambdas, kBump);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto datum = stationary_family(lambdas[i], kBump);
    EXPECT_NEAR(r.quotient.results[i].value, datum.lq(3.0) / datum.hs(1.0), 1e-12 * r.quotient.results[i].value);
  }
}

TEST(TorusSup, RefinementBeatsGridAndMatchesFineGrid) {
  const auto m = ManifoldSpec::torus(2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const auto ks = lattice_shell(2, 0.5, 100.0);
  std::vector<Complex> c(ks.size());
  for (auto& v : c) v = Complex(g(rng), g(rng));
  const auto f = torus_field(m, ks, c);
  auto coarse = std::make_shared<const TorusGrid>(2, 32);
  auto fine = std::make_shared<const TorusGrid>(2, 1024);
  const double refined = torus_sup_norm(f, coarse);
  const double coarse_max = lq_norm(synthesize_torus(f, coarse), kInfinity);
  const double fine_max = lq_norm(synthesize_torus(f, fine), kInfinity);
  EXPECT_GE(refined, coarse_max);
  EXPECT_GE(refined, fine_max * (1.0 - 1e-12));
  EXPECT_NEAR(refined, fine_max, 1e-4 * fine_max);
}

TEST(Dispersion, PointMassPeaksAtOrigin) {
  const SignatureOperator op(ManifoldSpec::torus(2), {1});
  const auto bump = make_partition_bump();
  const auto u0 = localized_point_mass(op, 4, bump);
  double sum = 0.0;
  for (const auto& c : u0.coeffs()) {
    EXPECT_GE(c.real(), 0.0);
    EXPECT_EQ(c.imag(), 0.0);
    sum += c.real();
  }
  auto grid = std::make_shared<const TorusGrid>(2, 128);
  EXPECT_NEAR(torus_sup_norm(u0, grid), sum / kTwoPi, 1e-10 * sum);
  EXPECT_THROW(localized_point_mass(SignatureOperator(ManifoldSpec::torus(3), {1}), 4, bump), InvalidArgument);
}

TEST(Dispersion, DecayRateOnTwoTorus) {
  const auto bump = make_partition_bump();
  const SignatureOperator elliptic(ManifoldSpec::torus(2), {1});
  const SignatureOperator hyperbolic(ManifoldSpec::circles(2), {1, -1});
  for (const auto* op : {&elliptic, &hyperbolic}) {
    const auto r = dispersion_experiment(*op, 5, bump);
    EXPECT_EQ(r.m, 2);
    EXPECT_NEAR(r.fit.slope, -1.0, 0.15);
    EXPECT_LE(r.stability(), 0.05);
    EXPECT_TRUE(r.pass());
    EXPECT_NEAR(r.sup_at_zero, r.mode_sum, 1e-9 * r.mode_sum);
    // Early times stay below the t = 0 peak.
    for (const auto& p : r.sup.results) EXPECT_LE(p.value, r.sup_at_zero * (1.0 + 1e-9));
  }
}

TEST(Dispersion, RejectsBadParameters) {
  const auto bump = make_partition_bump();
  const SignatureOperator op(ManifoldSpec::torus(2), {1});
  EXPECT_THROW(dispersion_experiment(op, 3, bump), InvalidArgument);
  EXPECT_THROW(dispersion_experiment(op, 5, bump, 0.0), InvalidArgument);
  EXPECT_THROW(dispersion_experiment(op, 5, bump, 0.5, 16, 64), ResolutionError);
}

TEST(RandomSweep, SeedsAreDistinctAndStable) {
  EXPECT_EQ(stream_seed(1, 2, 3), stream_seed(1, 2, 3));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(1, 3, 2));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(2, 2, 3));
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(RandomSweep, UnitaryQuotientAtL2) {
  // p = q = 2, s = 0: the quotient is sqrt(T) for every datum.
  const SignatureOperator op(ManifoldSpec::torus(2), {1});
  MixedNormSpec spec{2.0, 2.0};
  const auto r = random_data_sweep(op, spec, 0.0, {2, 3, 4}, 8, 11);
  EXPECT_TRUE(r.all_converged);
  for (const auto& block : r.quotients) {
    for (double q : block) EXPECT_NEAR(q, 1.0, 1e-12);
  }
  EXPECT_NEAR(r.variation(), 1.0, 1e-12);
  EXPECT_NEAR(r.fit.slope, 0.0, 1e-10);
}

TEST(RandomSweep, DeterministicAndBounded) {
  const SignatureOperator op(ManifoldSpec::circles(2), {1, -1});
  MixedNormSpec spec{6.0, 3.0};
  const auto a = random_data_sweep(op, spec, 1.0 / 6.0, {2, 3, 4}, 8, 42);
  const auto b = random_data_sweep(op, spec, 1.0 / 6.0, {2, 3, 4}, 8, 42);
  ASSERT_EQ(a.quotients.size(), 3u);
  for (std::size_t i = 0; i < a.quotients.size(); ++i) {
    for (std::size_t t = 0; t < a.quotients[i].size(); ++t) EXPECT_EQ(a.quotients[i][t], b.quotients[i][t]);
  }
  const auto c = random_data_sweep(op, spec, 1.0 / 6.0, {2, 3, 4}, 8, 43);
  EXPECT_NE(a.quotients[0][0], c.quotients[0][0]);
  EXPECT_TRUE(a.all_converged);
  ASSERT_TRUE(a.block_max.predicted.has_value());
  EXPECT_LE(a.variation(), 2.0);
  EXPECT_GE(a.growth(), 0.0);
  EXPECT_THROW(random_data_sweep(op, spec, 0.0, {2, 3}, 4, 1), InvalidArgument);
  EXPECT_THROW(random_data_sweep(op, spec, 0.0, {}, 8, 1), InvalidArgument);
}
