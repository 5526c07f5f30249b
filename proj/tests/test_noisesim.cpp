#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "spectro/noisesim.hpp"

using namespace spectro;

namespace {

SpectralDensity two_gaussians() {
  return SpectralDensity::gaussian_mixture(
      {{1e8, kTwoPi * 140e3, kTwoPi * 30e3}, {5e7, kTwoPi * 260e3, kTwoPi * 30e3}});
}

FilterBank bod_bank() {
  return build_filter_bank(bod_sequences(design_bod(5e-6, 0.5, 32, 3), 1.0, true), FrequencyGrid(2e7, 6e3));
}

}  // namespace

TEST(NoiseModel, VarianceFromAmplitudes) {
  const auto model = make_noise_model(two_gaussians(), 1);
  const Vector c = harmonic_amplitudes(model);
  // E[Omega^2] = sum c_k^2 / 2 = g(0).
  EXPECT_NEAR(0.5 * c.squaredNorm() / autocorrelation(model.sd, 0.0), 1.0, 1e-5);
}

TEST(NoiseModel, PhasesDeterministicPerDraw) {
  const auto model = make_noise_model(two_gaussians(), 42);
  EXPECT_EQ(draw_phases(model, 3), draw_phases(model, 3));
  EXPECT_NE(draw_phases(model, 3), draw_phases(model, 4));
  const auto other = make_noise_model(two_gaussians(), 43);
  EXPECT_NE(draw_phases(model, 3), draw_phases(other, 3));
  const Vector phi = draw_phases(model, 0);
  EXPECT_GE(phi.minCoeff(), 0.0);
  EXPECT_LT(phi.maxCoeff(), kTwoPi);
}

TEST(NoiseModel, RealizationAutocorrelation) {
  const auto model = make_noise_model(two_gaussians(), 5);
  const std::vector<double> t{0.0, 2e-6};
  double s00 = 0.0, s01 = 0.0;
  const int draws = 4000;
  for (int d = 0; d < draws; ++d) {
    const Vector x = generate_realization(model, t, static_cast<std::uint64_t>(d));
    s00 += x[0] * x[0];
    s01 += x[0] * x[1];
  }
  const double g0 = autocorrelation(model.sd, 0.0);
  EXPECT_NEAR(s00 / draws / g0, 1.0, 0.1);
  EXPECT_NEAR(s01 / draws / g0, autocorrelation(model.sd, 2e-6) / g0, 0.1);
}

TEST(ChiExact, MatchesTimeDomainOracle) {
  const auto sd = two_gaussians();
  const auto bank = bod_bank();
  const auto m = chi_exact(sd, bank);
  for (std::size_t n : {0u, 8u, 16u}) {
    const double ref = oracle::chi_time_domain(sd, bank.sequences[n]);
    EXPECT_NEAR(m.chi[static_cast<Eigen::Index>(n)] / ref, 1.0, 5e-3) << "filter " << n;
  }
}

TEST(ChiExact, RefusesCoarseGrid) {
  const auto sd = SpectralDensity::gaussian_mixture({{1.0, 2e5, 2e3}});
  const auto bank = build_filter_bank({ControlSequence(Protocol::PDD, 5e-6, 32)}, FrequencyGrid(2e7, 6e3));
  EXPECT_THROW(chi_exact(sd, bank), NumericalError);
}

TEST(ChiExact, TabulatedIsZeroBeyondTable) {
  FrequencyGrid g(3e5, 1e3);
  const auto tab = SpectralDensity::tabulated(g, Vector::Ones(static_cast<Eigen::Index>(g.size())));
  const auto bank = build_filter_bank({ControlSequence(Protocol::PDD, 5e-6, 32)}, FrequencyGrid(2e7, 6e3));
  const auto m = chi_exact(tab, bank);
  Vector s = Vector::Zero(static_cast<Eigen::Index>(bank.grid.size()));
  for (std::size_t k = 0; k < bank.grid.size() && bank.grid[k] <= 3e5; ++k) s[static_cast<Eigen::Index>(k)] = 1.0;
  EXPECT_NEAR(m.chi[0], bank.filters.row(0).dot(s.cwiseProduct(bank.grid.weights(true))), 1e-12 * m.chi[0]);
}

TEST(ChiMonteCarlo, UnbiasedWithinStandardErrors) {
  const auto sd = two_gaussians();
  const auto bank = build_filter_bank({ControlSequence(Protocol::PDD, 3.5e-6, 32)}, FrequencyGrid(2e7, 6e3));
  const auto exact = chi_exact(sd, bank);
  const auto mc = chi_montecarlo(make_noise_model(sd, 9), bank, 2000);
  const Vector row = mc.per_sample.row(0).transpose();
  const double mean = row.mean();
  const double se = std::sqrt((row.array() - mean).square().sum() / (row.size() - 1) / row.size());
  EXPECT_NEAR(mc.chi[0], mean, 1e-13 * mean);
  EXPECT_LT(std::abs(mean - exact.chi[0]), 4.0 * se);
  EXPECT_EQ(mc.samples, 2000);
  EXPECT_EQ(mc.mode, MeasurementSet::Mode::MonteCarlo);
}

TEST(ChiMonteCarlo, DeterministicAndTrapezoidAgrees) {
  const auto sd = two_gaussians();
  const auto bank = build_filter_bank(linear_sequences(Protocol::CP, 2e-6, 4e-6, 2, 32, 1.0), FrequencyGrid(2e7, 6e3));
  const auto model = make_noise_model(sd, 17);
  const auto a = chi_montecarlo(model, bank, 6);
  const auto b = chi_montecarlo(model, bank, 6);
  EXPECT_EQ(a.per_sample, b.per_sample);

  MonteCarloOptions opt;
  opt.integration = TimeIntegration::Trapezoid;
  const auto t = chi_montecarlo(model, bank, 6, opt);
  for (Eigen::Index i = 0; i < a.per_sample.size(); ++i) {
    EXPECT_NEAR(t.per_sample.data()[i] / a.per_sample.data()[i], 1.0, 2e-3);
  }
}

TEST(ChiMonteCarlo, Errors) {
  const auto sd = two_gaussians();
  const auto bank = build_filter_bank({ControlSequence(Protocol::PDD, 3e-6, 32)}, FrequencyGrid(2e7, 6e3));
  const auto model = make_noise_model(sd, 1);
  EXPECT_THROW(chi_montecarlo(model, bank, 0), InvalidArgument);
  MonteCarloOptions opt;
  opt.integration = TimeIntegration::Trapezoid;
  opt.time_step = 5e-6;  // above pi / w_top ~ 1.1e-6 s
  EXPECT_THROW(chi_montecarlo(model, bank, 1, opt), NumericalError);
}

TEST(MeasurementJson, RoundTrip) {
  const auto sd = two_gaussians();
  const auto bank = build_filter_bank(linear_sequences(Protocol::PDD, 2e-6, 4e-6, 3, 32, 1.0), FrequencyGrid(2e7, 6e3));
  const auto m = chi_montecarlo(make_noise_model(sd, 2), bank, 4);
  const auto back = measurement_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back.chi, m.chi);
  EXPECT_EQ(back.per_sample, m.per_sample);
  EXPECT_EQ(back.seed, 2u);
  EXPECT_EQ(back.samples, 4);
  EXPECT_FALSE(to_json(m, false).contains("per_sample"));
  EXPECT_THROW(measurement_from_json(nlohmann::json{{"mode", "bogus"}}), InvalidArgument);
  EXPECT_THROW(measurement_from_json(nlohmann::json::object()), InvalidArgument);
}
