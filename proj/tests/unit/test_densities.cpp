#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "blockfwer/densities.hpp"

using namespace bfwer;

namespace {

// Adaptive Gauss-Kronrod over log-spaced pieces so spikes at 0 are resolved.
// Pieces start at 1e-12; the t alternative keeps visible mass below any
// representable u, so below that point only the CDF is available.
constexpr double kLow = 1e-12;

double integral(const std::function<double(double)>& f, double a, double b) {
  double total = 0.0;
  double lo = std::max(a, kLow);
  for (int k = 11; k >= 0; --k) {
    const double hi = std::min(b, std::pow(10.0, -k));
    if (hi > lo) {
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 8, 1e-12);
      lo = hi;
    }
  }
  return total;
}

double mass_between(const AltDensity& g, double a, double b) {
  return integral([&](double u) { return g.pdf(u); }, a, b);
}

std::vector<AltDensity> all_families() {
  return {AltDensity::truncnorm(-2.0),     AltDensity::truncnorm(-1.5), AltDensity::truncnorm(-0.5, 3.0),
          AltDensity::tdist(3.0),          AltDensity::tdist(10.0),     AltDensity::beta(0.3),
          AltDensity::beta(0.8),           AltDensity::mixnorm(-3.0, -1.0), AltDensity::uniform()};
}

}  // namespace

TEST(Densities, TruncnormNearZeroThetaIsUniform) {
  const auto g = AltDensity::truncnorm(-1e-9);
  for (double u : {0.0, 0.1, 0.5, 0.9, 1.0}) EXPECT_NEAR(g.pdf(u), 1.0, 1e-6);
  EXPECT_NEAR(g.sup_bound(), 1.0, 1e-6);
}

TEST(Densities, TruncnormRejectsNonNegativeTheta) {
  EXPECT_THROW(AltDensity::truncnorm(0.0), std::invalid_argument);
  EXPECT_THROW(AltDensity::truncnorm(1.0), std::invalid_argument);
  EXPECT_THROW(AltDensity::truncnorm(-1.0, 0.0), std::invalid_argument);
}

TEST(Densities, TruncnormEndpointRatioAndMass) {
  const double theta = -2.0, bound = 6.0;
  const auto g = AltDensity::truncnorm(theta, bound);
  // x(0) = -bound, x(1) = bound
  EXPECT_NEAR(std::log(g.pdf(0.0) / g.pdf(1.0)), -theta * 2.0 * bound, 1e-8);
  EXPECT_NEAR(mass_between(g, 0.0, 1.0), 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(g.sup_bound(), g.pdf(0.0));
  EXPECT_GT(g.pdf(0.0), g.pdf(1.0));
}

TEST(Densities, TruncnormMonotoneOnGrid) {
  const auto g = AltDensity::truncnorm(-1.5);
  EXPECT_TRUE(g.monotone_nonincreasing());
  double prev = g.pdf(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double v = g.pdf(i / 1000.0);
    EXPECT_LE(v, prev * (1 + 1e-12));
    prev = v;
  }
}

TEST(Densities, FamilyInvariants) {
  for (const auto& g : all_families()) {
    SCOPED_TRACE(g.id());
    EXPECT_NEAR(mass_between(g, 0.0, 1.0) + cdf_G(g, kLow), 1.0, 1e-6);
    if (std::isfinite(g.sup_bound())) EXPECT_LE(cdf_G(g, kLow), g.sup_bound() * kLow * (1 + 1e-9));
    EXPECT_GE(g.sup_bound(), 1.0);
    double prev = g.pdf(0.0);
    bool monotone = true;
    for (int i = 0; i <= 1000; ++i) {
      const double u = i / 1000.0;
      const double v = g.pdf(u);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, g.sup_bound() * (1 + 1e-12));
      if (v > prev * (1 + 1e-9)) monotone = false;
      prev = v;
    }
    if (g.monotone_nonincreasing()) EXPECT_TRUE(monotone);
  }
}

TEST(Densities, CdfMatchesQuadratureOracle) {
  for (const auto& g : all_families()) {
    SCOPED_TRACE(g.id());
    for (double a : {1e-6, 1e-3, 0.005, 0.05, 0.3, 0.7, 0.999}) {
      EXPECT_NEAR(cdf_G(g, a) - cdf_G(g, kLow), mass_between(g, kLow, a), 1e-8);
    }
    EXPECT_DOUBLE_EQ(cdf_G(g, 0.0), 0.0);
    EXPECT_NEAR(cdf_G(g, 1.0), 1.0, 1e-12);
  }
}

TEST(Densities, CdfExamples) {
  EXPECT_DOUBLE_EQ(cdf_G(AltDensity::truncnorm(-2.0), 0.0), 0.0);
  EXPECT_NEAR(cdf_G(AltDensity::uniform(), 0.3), 0.3, 1e-15);
  const auto g = AltDensity::truncnorm(-2.0);
  EXPECT_GE(cdf_G(g, 0.5), 0.5);
  // concavity on a grid
  for (int i = 1; i < 99; ++i) {
    const double a = i / 100.0, h = 0.01;
    EXPECT_GE(2 * cdf_G(g, a) - cdf_G(g, a - h) - cdf_G(g, a + h), -1e-12);
  }
  EXPECT_THROW(cdf_G(g, 1.5), std::domain_error);
}

TEST(Densities, QuantileInvertsCdf) {
  for (const auto& g : all_families()) {
    SCOPED_TRACE(g.id());
    // t alternatives put mass 1e-8 below the smallest positive double
    const double v_min = g.kind() == DensityKind::tdist ? 1e-3 : 1e-8;
    for (double v : {v_min, 0.01, 0.2, 0.5, 0.8, 0.99}) EXPECT_NEAR(cdf_G(g, g.quantile(v)), v, 1e-9);
  }
}

TEST(Densities, FlagsByFamily) {
  EXPECT_FALSE(AltDensity::tdist(3.0).monotone_nonincreasing());
  EXPECT_TRUE(AltDensity::beta(0.5).monotone_nonincreasing());
  EXPECT_TRUE(std::isinf(AltDensity::beta(0.5).sup_bound()));
}

TEST(Densities, JsonRoundTrip) {
  for (const auto& g : all_families()) {
    const auto h = AltDensity::from_json(g.to_json());
    EXPECT_EQ(g.id(), h.id());
    for (double u : {0.001, 0.3, 0.9}) EXPECT_DOUBLE_EQ(g.pdf(u), h.pdf(u));
  }
  EXPECT_THROW(AltDensity::from_json({{"kind", "cauchy"}}), std::invalid_argument);
}

TEST(Grenander, SingleSample) {
  const double x[] = {0.5};
  const auto f = fit_grenander(x);
  ASSERT_EQ(f.heights.size(), 2u);
  EXPECT_DOUBLE_EQ(f.breakpoints[1], 0.5);
  EXPECT_DOUBLE_EQ(f.heights[0], 2.0);
  EXPECT_DOUBLE_EQ(f.heights[1], 0.0);
}

TEST(Grenander, TwoSamples) {
  const double x[] = {0.75, 0.25};
  const auto f = fit_grenander(x);
  const std::vector<double> bp{0.0, 0.25, 0.75, 1.0};
  const std::vector<double> h{2.0, 1.0, 0.0};
  ASSERT_EQ(f.breakpoints.size(), bp.size());
  for (std::size_t i = 0; i < bp.size(); ++i) EXPECT_NEAR(f.breakpoints[i], bp[i], 1e-15);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(f.heights[i], h[i], 1e-12);
  EXPECT_NEAR(f.integral(), 1.0, 1e-12);
}

TEST(Grenander, UniformSampleIsClose) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> x(10000);
  for (auto& v : x) v = U(rng);
  const auto gh = AltDensity::grenander(fit_grenander(x));
  EXPECT_LT(sup_norm_distance(AltDensity::uniform(), gh, 0.05, 0.95, 200), 0.15);
}

TEST(Grenander, Errors) {
  EXPECT_THROW(fit_grenander(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(fit_grenander(std::vector<double>{0.2, 1.2}), std::invalid_argument);
  EXPECT_THROW(fit_grenander(std::vector<double>{-0.1}), std::invalid_argument);
}

TEST(Grenander, TiesMergeIntoOneJump) {
  const auto f = fit_grenander(std::vector<double>{0.2, 0.2, 0.2, 0.6});
  EXPECT_NEAR(f.heights.front(), 0.75 / 0.2, 1e-12);
  EXPECT_NEAR(f.integral(), 1.0, 1e-12);
}

TEST(SupNorm, Examples) {
  const auto g = AltDensity::truncnorm(-1.5);
  EXPECT_EQ(sup_norm_distance(g, g, 0.05, 0.95, 200), 0.0);
  GrenanderFit f;
  f.breakpoints = {0.0, 0.5, 1.0};
  f.heights = {1.2, 0.8};
  f.sample_size = 1;
  EXPECT_NEAR(sup_norm_distance(AltDensity::uniform(), AltDensity::grenander(f), 0.05, 0.45, 50), 0.2, 1e-12);
  EXPECT_THROW(sup_norm_distance(g, g, 0.5, 0.4, 10), std::invalid_argument);
}

TEST(Grenander, RateHelper) { EXPECT_NEAR(grenander_rate(1000), std::cbrt(std::log(1000.0) / 1000.0), 1e-15); }
