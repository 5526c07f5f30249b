#pragma once

// Power spectral densities on the angular-frequency axis (rad/s).
//
// Spectra are two-sided and even, S(-w) = S(|w|). A Gaussian component with
// power N, center nu and width sigma contributes
//
//     N / (2 sqrt(2 pi sigma^2)) * exp(-(|w| - nu)^2 / (2 sigma^2))
//
// so that its integral over the whole real axis is N (for nu >> sigma).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "spectro/error.hpp"
#include "spectro/types.hpp"

namespace spectro {

/// Uniform grid w_k = k * dw, k = 0..K-1, with K = ceil(w_max / dw) + 1.
class FrequencyGrid {
 public:
  FrequencyGrid(double omega_max, double delta_omega)
      : omega_max_(omega_max), delta_omega_(delta_omega) {
    if (!(delta_omega > 0.0) || !(omega_max > 0.0) || !std::isfinite(omega_max) ||
        !std::isfinite(delta_omega)) {
      throw InvalidArgument("FrequencyGrid: omega_max and delta_omega must be positive");
    }
    // Guard against w_max/dw landing a hair above an integer through rounding.
    const double steps = omega_max / delta_omega;
    size_ = static_cast<std::size_t>(std::ceil(steps * (1.0 - 1e-12))) + 1;
    if (size_ < 2) {
      throw InvalidArgument("FrequencyGrid: needs at least two samples");
    }
  }

  double omega_max() const { return omega_max_; }
  double delta_omega() const { return delta_omega_; }
  std::size_t size() const { return size_; }
  double operator[](std::size_t k) const { return static_cast<double>(k) * delta_omega_; }
  double back() const { return (*this)[size_ - 1]; }

  Vector values() const {
    Vector v(static_cast<Eigen::Index>(size_));
    for (std::size_t k = 0; k < size_; ++k) v[static_cast<Eigen::Index>(k)] = (*this)[k];
    return v;
  }

  /// Trapezoid weights on [0, back()]; doubled for two-sided (even) integrands.
  Vector weights(bool two_sided) const {
    Vector w = Vector::Constant(static_cast<Eigen::Index>(size_), delta_omega_);
    w[0] *= 0.5;
    w[w.size() - 1] *= 0.5;
    if (two_sided) w *= 2.0;
    return w;
  }

  bool operator==(const FrequencyGrid& other) const {
    return size_ == other.size_ && delta_omega_ == other.delta_omega_;
  }

 private:
  double omega_max_;
  double delta_omega_;
  std::size_t size_;
};

struct GaussianComponent {
  double power;  // N, Hz^2
  double center; // nu, rad/s
  double width;  // sigma, rad/s
};

/// True spectrum: a Gaussian mixture or linearly interpolated samples.
class SpectralDensity {
 public:
  struct Tabulated {
    FrequencyGrid grid;
    Vector samples;
  };

  static SpectralDensity gaussian_mixture(std::vector<GaussianComponent> components) {
    for (const auto& c : components) {
      if (!(c.power > 0.0) || !(c.center > 0.0) || !(c.width > 0.0)) {
        throw InvalidArgument("Gaussian component fields must be strictly positive");
      }
    }
    return SpectralDensity(std::move(components));
  }

  static SpectralDensity tabulated(FrequencyGrid grid, Vector samples) {
    if (static_cast<std::size_t>(samples.size()) != grid.size()) {
      throw InvalidArgument("tabulated spectrum: sample count does not match grid");
    }
    if ((samples.array() < 0.0).any() || !samples.allFinite()) {
      throw InvalidArgument("tabulated spectrum: samples must be finite and >= 0");
    }
    return SpectralDensity(Tabulated{std::move(grid), std::move(samples)});
  }

  /// Identically zero spectrum (an empty mixture).
  static SpectralDensity zero() { return SpectralDensity(std::vector<GaussianComponent>{}); }

  bool is_parametric() const { return std::holds_alternative<std::vector<GaussianComponent>>(repr_); }
  const std::vector<GaussianComponent>& components() const {
    return std::get<std::vector<GaussianComponent>>(repr_);
  }
  const Tabulated& table() const { return std::get<Tabulated>(repr_); }

  double operator()(double omega) const {
    const double w = std::abs(omega);
    if (is_parametric()) {
      double s = 0.0;
      for (const auto& c : components()) {
        const double d = (w - c.center) / c.width;
        s += c.power / (2.0 * std::sqrt(kTwoPi * c.width * c.width)) * std::exp(-0.5 * d * d);
      }
      return s;
    }
    const auto& t = table();
    if (w > t.grid.back()) {
      throw OutOfRange("tabulated spectrum queried outside its grid");
    }
    const double pos = w / t.grid.delta_omega();
    const auto k = std::min(static_cast<std::size_t>(pos), t.grid.size() - 2);
    const double frac = pos - static_cast<double>(k);
    const auto i = static_cast<Eigen::Index>(k);
    return (1.0 - frac) * t.samples[i] + frac * t.samples[i + 1];
  }

  /// Frequency beyond which the spectrum is negligible: max(nu + 6 sigma), or the table end.
  double support_upper_bound() const {
    if (!is_parametric()) return table().grid.back();
    double hi = 0.0;
    for (const auto& c : components()) hi = std::max(hi, c.center + 6.0 * c.width);
    return hi;
  }

  /// Smallest component width (rad/s); the table step for tabulated spectra.
  double resolution() const {
    if (!is_parametric()) return table().grid.delta_omega();
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& c : components()) lo = std::min(lo, c.width);
    return lo;
  }

  /// Integral over the whole axis: sum of N_i, or two-sided trapezoid of the table.
  double total_power() const {
    if (!is_parametric()) return table().samples.dot(table().grid.weights(true));
    double p = 0.0;
    for (const auto& c : components()) p += c.power;
    return p;
  }

 private:
  explicit SpectralDensity(std::vector<GaussianComponent> c) : repr_(std::move(c)) {}
  explicit SpectralDensity(Tabulated t) : repr_(std::move(t)) {}

  std::variant<std::vector<GaussianComponent>, Tabulated> repr_;
};

inline double evaluate_psd(const SpectralDensity& sd, double omega) { return sd(omega); }

inline Vector sample_on_grid(const SpectralDensity& sd, const FrequencyGrid& grid) {
  Vector s(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) s[static_cast<Eigen::Index>(k)] = sd(grid[k]);
  return s;
}

/// g(t) = (1/2pi) int S(w) e^{iwt} dw, closed form for Gaussian mixtures with nu >> sigma.
inline double autocorrelation(const SpectralDensity& sd, double t) {
  if (!sd.is_parametric()) {
    throw Unsupported("autocorrelation: closed form needs a Gaussian mixture; use integrate_on_grid");
  }
  double g = 0.0;
  for (const auto& c : sd.components()) {
    g += c.power / kTwoPi * std::exp(-0.5 * c.width * c.width * t * t) * std::cos(c.center * t);
  }
  return g;
}

/// Trapezoid quadrature on [0, w_max]; two_sided doubles the result (even integrand).
inline double integrate_on_grid(const Vector& f, const FrequencyGrid& grid, bool two_sided) {
  if (static_cast<std::size_t>(f.size()) != grid.size()) {
    throw InvalidArgument("integrate_on_grid: sample count does not match grid");
  }
  return f.dot(grid.weights(two_sided));
}

/// Reads a two-column CSV "omega_rad_s,psd_hz2_s" (header row) on a uniform grid starting at 0.
inline SpectralDensity parse_tabulated_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("spectrum CSV: empty input");
  std::vector<double> omega, psd;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b)) {
      throw InvalidArgument("spectrum CSV: malformed row " + std::to_string(lineno));
    }
    try {
      omega.push_back(std::stod(a));
      psd.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw InvalidArgument("spectrum CSV: non-numeric row " + std::to_string(lineno));
    }
  }
  if (omega.size() < 2) throw InvalidArgument("spectrum CSV: needs at least two rows");
  if (omega.front() != 0.0) throw InvalidArgument("spectrum CSV: first frequency must be 0");
  const double step = omega[1] - omega[0];
  for (std::size_t k = 1; k < omega.size(); ++k) {
    if (std::abs(omega[k] - static_cast<double>(k) * step) > 1e-9 * std::max(1.0, omega[k])) {
      throw InvalidArgument("spectrum CSV: frequencies must be uniformly spaced");
    }
  }
  FrequencyGrid grid(omega.back(), step);
  if (grid.size() != omega.size()) throw InvalidArgument("spectrum CSV: inconsistent grid");
  return SpectralDensity::tabulated(grid, Eigen::Map<Vector>(psd.data(), static_cast<Eigen::Index>(psd.size())));
}

inline SpectralDensity load_tabulated_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open spectrum CSV: " + path);
  return parse_tabulated_csv(in);
}

}  // namespace spectro
