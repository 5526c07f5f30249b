#pragma once

// Piecewise-constant control sequences, their filter functions and the
// bandwidth-overlap design (BOD) of interpulse durations.
//
// A sequence with M sign flips and interpulse duration tau lives on [0, M tau],
// starts at +A and flips sign at each t_j:
//   PDD: t_j = j tau,            j = 1..M
//   CP:  t_j = (2j - 1) tau / 2, j = 1..M
// Its filter function is F(w) = |FT[Omega_c](w)|^2 / 2pi.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "spectro/error.hpp"
#include "spectro/spectra.hpp"
#include "spectro/types.hpp"

namespace spectro {

enum class Protocol { PDD, CP };

inline std::string_view to_string(Protocol p) { return p == Protocol::PDD ? "PDD" : "CP"; }

inline bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

/// Constant piece [begin, end) of a control signal.
struct Segment {
  double begin;
  double end;
  double value;
};

class ControlSequence {
 public:
  ControlSequence(Protocol protocol, double tau, int flips, double amplitude = 1.0)
      : protocol_(protocol), tau_(tau), flips_(flips), amplitude_(amplitude) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("ControlSequence: tau must be > 0");
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
      throw InvalidArgument("ControlSequence: amplitude must be > 0");
    }
    if (flips < 2) throw InvalidArgument("ControlSequence: needs at least 2 flips");
  }

  Protocol protocol() const { return protocol_; }
  double tau() const { return tau_; }
  int flips() const { return flips_; }
  double amplitude() const { return amplitude_; }
  double duration() const { return flips_ * tau_; }

  std::vector<double> flip_times() const {
    std::vector<double> t(static_cast<std::size_t>(flips_));
    for (int j = 1; j <= flips_; ++j) {
      t[static_cast<std::size_t>(j - 1)] = protocol_ == Protocol::PDD ? j * tau_ : (2.0 * j - 1.0) * tau_ / 2.0;
    }
    return t;
  }

  /// Constant pieces covering [0, T]; a flip landing on T adds no piece.
  std::vector<Segment> segments() const {
    std::vector<Segment> out;
    out.reserve(static_cast<std::size_t>(flips_) + 1);
    const double end = duration();
    double start = 0.0;
    double value = amplitude_;
    for (double t : flip_times()) {
      if (t >= end) break;
      out.push_back({start, t, value});
      start = t;
      value = -value;
    }
    out.push_back({start, end, value});
    return out;
  }

  /// Omega_c(t) = +-A with sign (-1)^{#{j : t_j <= t}}.
  double signal(double t) const {
    if (t < 0.0 || t > duration()) throw InvalidArgument("control_signal: t outside [0, T]");
    int count = 0;
    for (double tj : flip_times()) count += tj <= t ? 1 : 0;
    return count % 2 == 0 ? amplitude_ : -amplitude_;
  }

  /// int Omega_c(t) e^{-iwt} dt, exact per constant piece.
  std::complex<double> fourier(double omega) const {
    std::complex<double> acc{0.0, 0.0};
    for (const auto& s : segments()) {
      const double len = s.end - s.begin;
      const double half = 0.5 * omega * len;
      const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
      acc += s.value * len * sinc * std::polar(1.0, -0.5 * omega * (s.begin + s.end));
    }
    return acc;
  }

  /// int Omega_c(t)^2 dt.
  double energy() const { return amplitude_ * amplitude_ * duration(); }

  double main_peak() const { return kPi / tau_; }
  double lower_edge() const { return (1.0 - 2.0 / flips_) * kPi / tau_; }
  double upper_edge() const { return (1.0 + 2.0 / flips_) * kPi / tau_; }

 private:
  Protocol protocol_;
  double tau_;
  int flips_;
  double amplitude_;
};

inline double control_signal(const ControlSequence& seq, double t) { return seq.signal(t); }

inline Vector filter_function_numeric(const ControlSequence& seq, const FrequencyGrid& grid) {
  Vector f(static_cast<Eigen::Index>(grid.size()));
  const auto segs = seq.segments();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double w = grid[k];
    std::complex<double> acc{0.0, 0.0};
    for (const auto& s : segs) {
      const double len = s.end - s.begin;
      const double half = 0.5 * w * len;
      const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
      acc += s.value * len * sinc * std::polar(1.0, -0.5 * w * (s.begin + s.end));
    }
    f[static_cast<Eigen::Index>(k)] = std::norm(acc) / kTwoPi;
  }
  return f;
}

/// Closed form for PDD with M a power of two:
/// |FT| = A tau M |Sinc(w tau/2) sin(w tau/2) prod_{k=0}^{log2 M - 2} cos(2^k w tau)|.
inline Vector filter_function_analytic_pdd(const ControlSequence& seq, const FrequencyGrid& grid) {
  if (seq.protocol() != Protocol::PDD) throw InvalidArgument("analytic filter: PDD sequences only");
  const int m = seq.flips();
  if (!is_power_of_two(m) || m < 4) throw InvalidArgument("analytic filter: M must be a power of 2, M >= 4");
  const int levels = static_cast<int>(std::lround(std::log2(m))) - 1;
  const double tau = seq.tau();
  const double scale = seq.amplitude() * tau * m;
  Vector f(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double w = grid[k];
    const double x = 0.5 * w * tau;
    const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
    double prod = 1.0;
    for (int level = 0; level < levels; ++level) prod *= std::cos(std::ldexp(w * tau, level));
    const double amp = scale * sinc * std::sin(x) * prod;
    f[static_cast<Eigen::Index>(k)] = amp * amp / kTwoPi;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Bandwidth-overlap design

struct BodDesign {
  double tau_1;
  double epsilon;
  int flips;
  int harmonic_cap;
  double ratio;             // tau_{n+1} / tau_n = (M - 2) / (M + 2 - 4 eps)
  std::vector<double> taus; // descending
};

/// Builds tau_1 > tau_2 > ... with a fixed overlap eps between consecutive main-peak bands.
///
/// Consecutive bands satisfy (1 - 2/M) pi/tau_{n+1} = (1 + 2/M - 4 eps/M) pi/tau_n.
/// tau_n is kept while that next lower edge stays at or below the lower null
/// (h - 2/M) pi/tau_1 of the h-th harmonic of F_1.
inline BodDesign design_bod(double tau_1, double epsilon, int flips, int harmonic_cap) {
  if (!(tau_1 > 0.0)) throw InvalidArgument("design_bod: tau_1 must be > 0");
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) {
    throw InvalidArgument("design_bod: epsilon must lie in [0, 1)");
  }
  if (!is_power_of_two(flips) || flips < 4) throw InvalidArgument("design_bod: M must be a power of 2, M >= 4");
  if (harmonic_cap != 3 && harmonic_cap != 5) throw InvalidArgument("design_bod: harmonic cap must be 3 or 5");

  const double m = flips;
  BodDesign d{tau_1, epsilon, flips, harmonic_cap, (m - 2.0) / (m + 2.0 - 4.0 * epsilon), {}};
  const double next_lower = 1.0 + 2.0 / m - 4.0 * epsilon / m;
  const double limit = (harmonic_cap - 2.0 / m) / tau_1;
  double tau = tau_1;
  // 1e-12 slack keeps exact-touching cases in.
  while (next_lower / tau <= limit * (1.0 + 1e-12)) {
    d.taus.push_back(tau);
    tau *= d.ratio;
  }
  return d;
}

inline double scaled_amplitude(double tau_n, double tau_1, double amplitude_1) {
  if (!(tau_n > 0.0) || !(tau_1 > 0.0) || !(amplitude_1 > 0.0)) {
    throw InvalidArgument("scaled_amplitude: arguments must be positive");
  }
  return amplitude_1 * tau_1 / tau_n;
}

/// PDD sequences for a BOD design, optionally with A_n = A_1 tau_1 / tau_n.
inline std::vector<ControlSequence> bod_sequences(const BodDesign& d, double amplitude_1, bool scale_amplitude) {
  std::vector<ControlSequence> out;
  out.reserve(d.taus.size());
  for (double tau : d.taus) {
    const double a = scale_amplitude ? scaled_amplitude(tau, d.tau_1, amplitude_1) : amplitude_1;
    out.emplace_back(Protocol::PDD, tau, d.flips, a);
  }
  return out;
}

/// `count` sequences with tau linearly spaced over [tau_min, tau_max] inclusive.
inline std::vector<ControlSequence> linear_sequences(Protocol p, double tau_min, double tau_max, int count,
                                                     int flips, double amplitude) {
  if (count < 1) throw InvalidArgument("linear_sequences: count must be >= 1");
  if (!(tau_min > 0.0) || !(tau_max >= tau_min)) throw InvalidArgument("linear_sequences: bad tau range");
  std::vector<ControlSequence> out;
  for (int i = 0; i < count; ++i) {
    const double tau = count == 1 ? tau_min : tau_min + (tau_max - tau_min) * i / (count - 1);
    out.emplace_back(p, tau, flips, amplitude);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filter bank

struct FilterBank {
  FrequencyGrid grid;
  std::vector<ControlSequence> sequences;
  Matrix filters;  // N x K, row n is F_n sampled on grid
  Matrix gramian;  // N x N, G_nm = int F_n F_m dw over the two-sided axis

  std::size_t size() const { return sequences.size(); }
};

/// Samples every filter on `grid` and assembles the Gramian by two-sided quadrature.
inline FilterBank build_filter_bank(std::vector<ControlSequence> sequences, const FrequencyGrid& grid) {
  if (sequences.empty()) throw InvalidArgument("build_filter_bank: empty sequence list");
  for (const auto& s : sequences) {
    const double width = 4.0 * kPi / (s.flips() * s.tau());
    if (width / grid.delta_omega() < 8.0) {
      throw NumericalError("build_filter_bank: grid too coarse, " + std::to_string(width / grid.delta_omega()) +
                           " samples across main peak of tau = " + std::to_string(s.tau()) + " s (need >= 8)");
    }
    if (grid.back() < s.upper_edge()) {
      throw NumericalError("build_filter_bank: grid ends at " + std::to_string(grid.back()) +
                           " rad/s, below the upper null " + std::to_string(s.upper_edge()) + " rad/s");
    }
  }
  const auto n = static_cast<Eigen::Index>(sequences.size());
  Matrix filters(n, static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    filters.row(i) = filter_function_numeric(sequences[static_cast<std::size_t>(i)], grid).transpose();
  }
  const Vector w = grid.weights(true);
  Matrix gramian(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double g = (filters.row(i).array() * filters.row(j).array() * w.transpose().array()).sum();
      gramian(i, j) = g;
      gramian(j, i) = g;
    }
  }
  return FilterBank{grid, std::move(sequences), std::move(filters), std::move(gramian)};
}

}  // namespace spectro
