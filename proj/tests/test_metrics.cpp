#include <gtest/gtest.h>

#include <cmath>

#include "spectro/metrics.hpp"

using namespace spectro;

namespace {

const FrequencyGrid kGrid(4e6, 1e3);
const double kSigma = kTwoPi * 30e3;

Vector gaussian(double nu, double power = 1e8) {
  return sample_on_grid(SpectralDensity::gaussian_mixture({{power, nu, kSigma}}), kGrid);
}

}  // namespace

TEST(Fidelity, IdenticalIsOneAndScaleFree) {
  const Vector s = gaussian(kTwoPi * 140e3);
  EXPECT_NEAR(fidelity(s, s, kGrid), 1.0, 1e-12);
  EXPECT_NEAR(fidelity(s, 3.7 * s, kGrid), 1.0, 1e-12);
}

TEST(Fidelity, ShiftedGaussians) {
  // Cosine overlap of equal-width Gaussians d apart is exp(-d^2 / 4 sigma^2).
  const Vector a = gaussian(kTwoPi * 200e3);
  EXPECT_NEAR(fidelity(a, gaussian(kTwoPi * 200e3 + 2 * kSigma), kGrid), std::exp(-1.0), 1e-6);
  EXPECT_NEAR(fidelity(a, gaussian(kTwoPi * 200e3 + std::sqrt(2.0) * kSigma), kGrid), std::exp(-0.5), 1e-6);
}

TEST(Fidelity, BoundsAndZeroEstimate) {
  const Vector a = gaussian(kTwoPi * 140e3);
  const Vector b = gaussian(kTwoPi * 400e3);
  const double f = fidelity(a, b, kGrid);
  EXPECT_GE(f, 0.0);
  EXPECT_LT(f, 1e-6);
  EXPECT_EQ(fidelity(a, Vector::Zero(a.size()), kGrid), 0.0);
  EXPECT_THROW(fidelity(Vector::Zero(a.size()), a, kGrid), InvalidArgument);
  EXPECT_THROW(fidelity(a, Vector::Zero(3), kGrid), InvalidArgument);
}

TEST(Fidelity, LiteralConvention) {
  const Vector a = gaussian(kTwoPi * 140e3, 2.0);
  // Unnormalised: int S^2 / (int S)^2, not 1 for identical inputs.
  const double lit = fidelity(a, a, kGrid, FidelityConvention::Literal);
  const Vector w = kGrid.weights(true);
  const double expected = (a.array().square() * w.array()).sum() / std::pow(a.dot(w), 2);
  EXPECT_NEAR(lit, expected, 1e-12 * expected);
  EXPECT_NE(lit, 1.0);
}

TEST(Mse, ZeroForIdenticalAndKnownForShift) {
  const Vector a = gaussian(kTwoPi * 200e3);
  EXPECT_EQ(mse(a, a, kGrid), 0.0);
  const double norm = integrate_on_grid(a.cwiseAbs2(), kGrid, true);
  const double ratio = mse(a, gaussian(kTwoPi * 200e3 + kSigma), kGrid) / norm;
  EXPECT_NEAR(ratio, 2.0 * (1.0 - std::exp(-0.25)), 1e-6);
  EXPECT_THROW(mse(a, Vector::Zero(2), kGrid), InvalidArgument);
}
