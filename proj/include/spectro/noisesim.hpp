#pragma once

// Stationary noise realisations with a prescribed spectrum and the resulting
// overlap data chi_n, exact or by Monte-Carlo.
//
// Realisations are random-phase harmonic sums
//
//     Omega(t) = sum_k c_k cos(w_k t + phi_k),   w_k = k dw_syn, k >= 1,
//     c_k = sqrt(2 * 2 S(w_k) dw_syn / 2pi),
//
// where 2 S is the one-sided density of the two-sided S. Then E[Omega^2] = g(0)
// and E[(int Omega_c Omega dt)^2] = int S F dw over the whole axis.
// All randomness derives from (seed, draw_index).

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectro/controls.hpp"
#include "spectro/error.hpp"
#include "spectro/spectra.hpp"
#include "spectro/types.hpp"

namespace spectro {

/// Default harmonic spacing of the synthesis grid, 2pi x 1 kHz.
inline constexpr double kDefaultSynthesisStep = kTwoPi * 1e3;

struct NoiseModel {
  SpectralDensity sd;
  FrequencyGrid synthesis;
  std::uint64_t seed;
};

/// Synthesis grid over [0, support] with spacing `step`; the spectrum must have
/// decayed below 1e-6 of its maximum at the grid end.
inline NoiseModel make_noise_model(SpectralDensity sd, std::uint64_t seed, double step = kDefaultSynthesisStep) {
  const double top = sd.support_upper_bound();
  if (!(top > 0.0)) throw InvalidArgument("noise model: spectrum has no support");
  FrequencyGrid grid(top, step);
  if (sd.is_parametric() && !sd.components().empty()) {
    double peak = 0.0;
    for (const auto& c : sd.components()) peak = std::max(peak, sd(c.center));
    if (sd(grid.back()) > 1e-6 * peak) {
      throw InvalidArgument("noise model: synthesis grid does not cover the spectrum support");
    }
  }
  if (!sd.is_parametric() && grid.back() > sd.table().grid.back()) {
    grid = FrequencyGrid(sd.table().grid.back() - 0.5 * step, step);
  }
  return NoiseModel{std::move(sd), grid, seed};
}

namespace detail {

// splitmix64 finaliser, used only to decorrelate (seed, draw_index) pairs.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Harmonic amplitudes c_k for k = 1..K-1 of the synthesis grid.
inline Vector harmonic_amplitudes(const NoiseModel& model) {
  const auto& g = model.synthesis;
  Vector c(static_cast<Eigen::Index>(g.size() - 1));
  for (std::size_t k = 1; k < g.size(); ++k) {
    c[static_cast<Eigen::Index>(k - 1)] = std::sqrt(2.0 * model.sd(g[k]) * g.delta_omega() / kPi);
  }
  return c;
}

/// Phases phi_k, uniform on [0, 2pi), for one draw.
inline Vector draw_phases(const NoiseModel& model, std::uint64_t draw_index) {
  std::mt19937_64 rng(detail::mix64(model.seed ^ detail::mix64(draw_index)));
  Vector phi(static_cast<Eigen::Index>(model.synthesis.size() - 1));
  for (Eigen::Index k = 0; k < phi.size(); ++k) phi[k] = kTwoPi * detail::unit_interval(rng);
  return phi;
}

inline Vector generate_realization(const NoiseModel& model, const std::vector<double>& times,
                                   std::uint64_t draw_index) {
  const Vector c = harmonic_amplitudes(model);
  const Vector phi = draw_phases(model, draw_index);
  const double step = model.synthesis.delta_omega();
  Vector out(static_cast<Eigen::Index>(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) acc += c[k] * std::cos(static_cast<double>(k + 1) * step * times[i] + phi[k]);
    out[static_cast<Eigen::Index>(i)] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------

struct MeasurementSet {
  enum class Mode { Exact, MonteCarlo };

  Vector chi;
  int samples = 0;
  Matrix per_sample;  // N x samples, empty in exact mode
  Mode mode = Mode::Exact;
  std::uint64_t seed = 0;
};

/// chi_n = int S F_n dw, two-sided trapezoid on the bank grid.
inline MeasurementSet chi_exact(const SpectralDensity& sd, const FilterBank& bank) {
  const auto& grid = bank.grid;
  if (sd.is_parametric()) {
    if (!sd.components().empty() &&
        (grid.back() < sd.support_upper_bound() || grid.delta_omega() > sd.resolution() / 5.0)) {
      throw NumericalError("chi_exact: bank grid does not resolve or cover the spectrum");
    }
  }
  Vector s(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // Tabulated spectra are zero beyond their table.
    const bool inside = sd.is_parametric() || grid[k] <= sd.table().grid.back();
    s[static_cast<Eigen::Index>(k)] = inside ? sd(grid[k]) : 0.0;
  }
  MeasurementSet m;
  m.chi = bank.filters * s.cwiseProduct(grid.weights(true));
  m.mode = MeasurementSet::Mode::Exact;
  return m;
}

enum class TimeIntegration {
  Analytic,   // closed-form segment integral per harmonic
  Trapezoid,  // fixed-step trapezoid per constant piece
};

struct MonteCarloOptions {
  TimeIntegration integration = TimeIntegration::Analytic;
  double time_step = 0.0;  // trapezoid only; 0 picks min(tau_min/50, pi/(5 w_syn_max))
};

/// Per-sample y^2 with y = int_0^T Omega_c(t) Omega_r(t) dt, fresh draw per (n, r).
inline MeasurementSet chi_montecarlo(const NoiseModel& model, const FilterBank& bank, int samples,
                                     const MonteCarloOptions& options = {}) {
  if (samples < 1) throw InvalidArgument("chi_montecarlo: samples must be >= 1");
  const auto n_filters = static_cast<Eigen::Index>(bank.size());
  const Vector c = harmonic_amplitudes(model);
  const double step = model.synthesis.delta_omega();
  const double w_top = model.synthesis.back();

  double dt = options.time_step;
  if (options.integration == TimeIntegration::Trapezoid) {
    double tau_min = std::numeric_limits<double>::infinity();
    for (const auto& s : bank.sequences) tau_min = std::min(tau_min, s.tau());
    if (dt == 0.0) dt = std::min(tau_min / 50.0, kPi / (5.0 * w_top));
    if (!(dt > 0.0) || dt > kPi / w_top) {
      throw NumericalError("chi_montecarlo: time step " + std::to_string(dt) +
                           " s violates Nyquist for synthesis frequency " + std::to_string(w_top) + " rad/s");
    }
  }

  MeasurementSet m;
  m.mode = MeasurementSet::Mode::MonteCarlo;
  m.samples = samples;
  m.seed = model.seed;
  m.per_sample.resize(n_filters, samples);

  for (Eigen::Index n = 0; n < n_filters; ++n) {
    const auto& seq = bank.sequences[static_cast<std::size_t>(n)];
    Vector re, im;
    if (options.integration == TimeIntegration::Analytic) {
      // y = Re sum_k c_k e^{i phi_k} conj(FT(w_k)) = sum_k c_k (cos phi Re FT + sin phi Im FT)
      re.resize(c.size());
      im.resize(c.size());
      for (Eigen::Index k = 0; k < c.size(); ++k) {
        const std::complex<double> ft = seq.fourier(static_cast<double>(k + 1) * step);
        re[k] = c[k] * ft.real();
        im[k] = c[k] * ft.imag();
      }
    }
    const auto segs = seq.segments();
    for (int r = 0; r < samples; ++r) {
      const auto draw = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(samples) + static_cast<std::uint64_t>(r);
      const Vector phi = draw_phases(model, draw);
      double y = 0.0;
      if (options.integration == TimeIntegration::Analytic) {
        for (Eigen::Index k = 0; k < phi.size(); ++k) y += re[k] * std::cos(phi[k]) + im[k] * std::sin(phi[k]);
      } else {
        auto omega = [&](double t) {
          double acc = 0.0;
          for (Eigen::Index k = 0; k < c.size(); ++k) acc += c[k] * std::cos(static_cast<double>(k + 1) * step * t + phi[k]);
          return acc;
        };
        for (const auto& s : segs) {
          const auto pieces = static_cast<int>(std::ceil((s.end - s.begin) / dt));
          const double h = (s.end - s.begin) / pieces;
          double acc = 0.5 * (omega(s.begin) + omega(s.end));
          for (int i = 1; i < pieces; ++i) acc += omega(s.begin + i * h);
          y += s.value * h * acc;
        }
      }
      m.per_sample(n, r) = y * y;
    }
  }
  m.chi = m.per_sample.rowwise().mean();
  return m;
}

// ---------------------------------------------------------------------------
// JSON cache format: {mode, seed, samples, chi[], per_sample[][] (optional)}

inline nlohmann::json to_json(const MeasurementSet& m, bool include_samples = true) {
  nlohmann::json j;
  j["mode"] = m.mode == MeasurementSet::Mode::Exact ? "exact" : "montecarlo";
  j["seed"] = m.seed;
  j["samples"] = m.samples;
  j["chi"] = std::vector<double>(m.chi.data(), m.chi.data() + m.chi.size());
  if (include_samples && m.per_sample.size() > 0) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index n = 0; n < m.per_sample.rows(); ++n) {
      std::vector<double> row(static_cast<std::size_t>(m.per_sample.cols()));
      for (Eigen::Index r = 0; r < m.per_sample.cols(); ++r) row[static_cast<std::size_t>(r)] = m.per_sample(n, r);
      rows.push_back(std::move(row));
    }
    j["per_sample"] = std::move(rows);
  }
  return j;
}

inline MeasurementSet measurement_from_json(const nlohmann::json& j) {
  try {
    MeasurementSet m;
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "exact") {
      m.mode = MeasurementSet::Mode::Exact;
    } else if (mode == "montecarlo") {
      m.mode = MeasurementSet::Mode::MonteCarlo;
    } else {
      throw InvalidArgument("measurement JSON: unknown mode '" + mode + "'");
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.samples = j.at("samples").get<int>();
    const auto chi = j.at("chi").get<std::vector<double>>();
    m.chi = Eigen::Map<const Vector>(chi.data(), static_cast<Eigen::Index>(chi.size()));
    if (j.contains("per_sample")) {
      const auto rows = j.at("per_sample").get<std::vector<std::vector<double>>>();
      m.per_sample.resize(static_cast<Eigen::Index>(rows.size()), m.samples);
      for (std::size_t n = 0; n < rows.size(); ++n) {
        if (static_cast<int>(rows[n].size()) != m.samples) throw InvalidArgument("measurement JSON: ragged per_sample");
        for (int r = 0; r < m.samples; ++r) m.per_sample(static_cast<Eigen::Index>(n), r) = rows[n][static_cast<std::size_t>(r)];
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("measurement JSON: ") + e.what());
  }
}

}  // namespace spectro
