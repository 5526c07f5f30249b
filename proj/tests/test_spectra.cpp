#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "spectro/spectra.hpp"

using namespace spectro;

namespace {
const double kSigma = kTwoPi * 30e3;
}

TEST(FrequencyGrid, SizeAndSpacing) {
  FrequencyGrid g(2e7, 6e3);
  EXPECT_EQ(g.size(), 3335u);  // ceil(3333.33) + 1
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[10], 6e4);
  EXPECT_GE(g.back(), 2e7);

  FrequencyGrid exact(1.0, 0.25);
  EXPECT_EQ(exact.size(), 5u);
  EXPECT_DOUBLE_EQ(exact.back(), 1.0);
}

TEST(FrequencyGrid, RoundingDoesNotAddASample) {
  // 0.3 / 0.1 is 2.9999999999999996 in binary; still 4 samples.
  FrequencyGrid g(0.3, 0.1);
  EXPECT_EQ(g.size(), 4u);
}

TEST(FrequencyGrid, RejectsBadInput) {
  EXPECT_THROW(FrequencyGrid(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(FrequencyGrid(1.0, 0.0), InvalidArgument);
  EXPECT_THROW(FrequencyGrid(1.0, -1.0), InvalidArgument);
  EXPECT_THROW(FrequencyGrid(std::nan(""), 1.0), InvalidArgument);
}

TEST(FrequencyGrid, TrapezoidWeights) {
  FrequencyGrid g(1.0, 0.25);
  const Vector w = g.weights(false);
  EXPECT_DOUBLE_EQ(w[0], 0.125);
  EXPECT_DOUBLE_EQ(w[2], 0.25);
  EXPECT_DOUBLE_EQ(w.sum(), 1.0);
  EXPECT_DOUBLE_EQ(g.weights(true).sum(), 2.0);
}

TEST(SpectralDensity, GaussianPeakValue) {
  const auto s = SpectralDensity::gaussian_mixture({{1e8, kTwoPi * 140e3, kSigma}});
  EXPECT_NEAR(s(kTwoPi * 140e3), 105.8227, 1e-4);
  EXPECT_DOUBLE_EQ(s(-kTwoPi * 140e3), s(kTwoPi * 140e3));
  EXPECT_DOUBLE_EQ(evaluate_psd(s, 123.0), s(123.0));
}

TEST(SpectralDensity, GaussianIntegratesToPower) {
  const auto s = SpectralDensity::gaussian_mixture({{1e8, kTwoPi * 140e3, kSigma}, {5e7, kTwoPi * 260e3, kSigma}});
  FrequencyGrid g(4e6, 500.0);
  const double total = integrate_on_grid(sample_on_grid(s, g), g, true);
  // Folding at w = 0 loses Phi(-nu/sigma) ~ 1.5e-6 of the first component.
  EXPECT_NEAR(total / 1.5e8, 1.0, 1e-5);
  EXPECT_DOUBLE_EQ(s.total_power(), 1.5e8);
}

TEST(SpectralDensity, RejectsNonPositiveComponents) {
  EXPECT_THROW(SpectralDensity::gaussian_mixture({{0.0, 1.0, 1.0}}), InvalidArgument);
  EXPECT_THROW(SpectralDensity::gaussian_mixture({{1.0, -1.0, 1.0}}), InvalidArgument);
  EXPECT_THROW(SpectralDensity::gaussian_mixture({{1.0, 1.0, 0.0}}), InvalidArgument);
}

TEST(SpectralDensity, SupportAndResolution) {
  const auto s = SpectralDensity::gaussian_mixture({{1.0, 100.0, 5.0}, {1.0, 300.0, 2.0}});
  EXPECT_DOUBLE_EQ(s.support_upper_bound(), 312.0);
  EXPECT_DOUBLE_EQ(s.resolution(), 2.0);
}

TEST(SpectralDensity, ZeroSpectrum) {
  const auto z = SpectralDensity::zero();
  EXPECT_DOUBLE_EQ(z(10.0), 0.0);
  EXPECT_DOUBLE_EQ(z.total_power(), 0.0);
}

TEST(SpectralDensity, TabulatedInterpolatesLinearly) {
  FrequencyGrid g(3.0, 1.0);
  Vector v(4);
  v << 0.0, 2.0, 4.0, 0.0;
  const auto s = SpectralDensity::tabulated(g, v);
  EXPECT_DOUBLE_EQ(s(0.5), 1.0);
  EXPECT_DOUBLE_EQ(s(-1.5), 3.0);
  EXPECT_DOUBLE_EQ(s(3.0), 0.0);
  EXPECT_THROW(s(3.5), OutOfRange);
  EXPECT_DOUBLE_EQ(s.total_power(), 12.0);
  EXPECT_THROW(autocorrelation(s, 0.0), Unsupported);
}

TEST(SpectralDensity, TabulatedValidation) {
  FrequencyGrid g(3.0, 1.0);
  Vector bad(4);
  bad << 0.0, -1.0, 0.0, 0.0;
  EXPECT_THROW(SpectralDensity::tabulated(g, bad), InvalidArgument);
  EXPECT_THROW(SpectralDensity::tabulated(g, Vector::Zero(3)), InvalidArgument);
}

TEST(Autocorrelation, ZeroLagIsVarianceAndMatchesQuadrature) {
  const auto s = SpectralDensity::gaussian_mixture({{1e8, kTwoPi * 140e3, kSigma}});
  EXPECT_NEAR(autocorrelation(s, 0.0), 1e8 / kTwoPi, 1e-6 * 1e8);

  // g(t) = (1/2pi) int S cos(wt) dw, both sides.
  FrequencyGrid g(3e6, 200.0);
  for (double t : {0.0, 1e-6, 3.3e-6, 1e-5}) {
    Vector f = sample_on_grid(s, g);
    for (std::size_t k = 0; k < g.size(); ++k) f[static_cast<Eigen::Index>(k)] *= std::cos(g[k] * t);
    const double ref = integrate_on_grid(f, g, true) / kTwoPi;
    EXPECT_NEAR(autocorrelation(s, t), ref, 1e-5 * 1e8 / kTwoPi) << "t=" << t;
  }
}

TEST(TabulatedCsv, ParsesHeaderAndRows) {
  std::istringstream in("omega_rad_s,psd_hz2_s\n0,1\n10,2\r\n20,3\n\n");
  const auto s = parse_tabulated_csv(in);
  EXPECT_FALSE(s.is_parametric());
  EXPECT_EQ(s.table().grid.size(), 3u);
  EXPECT_DOUBLE_EQ(s(15.0), 2.5);
}

TEST(TabulatedCsv, RejectsMalformed) {
  std::istringstream empty("");
  EXPECT_THROW(parse_tabulated_csv(empty), InvalidArgument);
  std::istringstream one("h\n0,1\n");
  EXPECT_THROW(parse_tabulated_csv(one), InvalidArgument);
  std::istringstream uneven("h\n0,1\n1,1\n3,1\n");
  EXPECT_THROW(parse_tabulated_csv(uneven), InvalidArgument);
  std::istringstream offset("h\n1,1\n2,1\n");
  EXPECT_THROW(parse_tabulated_csv(offset), InvalidArgument);
  std::istringstream text("h\n0,a\n1,1\n");
  EXPECT_THROW(parse_tabulated_csv(text), InvalidArgument);
  EXPECT_THROW(load_tabulated_csv("/nonexistent/spectrum.csv"), InvalidArgument);
}
