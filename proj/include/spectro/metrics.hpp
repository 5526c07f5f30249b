#pragma once

// Reconstruction quality on a shared frequency grid (two-sided integrals).

#include <cmath>

#include "spectro/error.hpp"
#include "spectro/spectra.hpp"
#include "spectro/types.hpp"

namespace spectro {

/// cosine: <S, S_hat> / (|S| |S_hat|), dimensionless, in [0, 1] for nonnegative inputs.
/// literal: int S S_hat / (int S * int S_hat), the unnormalised ratio.
enum class FidelityConvention { Cosine, Literal };

namespace detail {
inline void check_pair(const Vector& a, const Vector& b, const FrequencyGrid& grid) {
  if (a.size() != b.size() || static_cast<std::size_t>(a.size()) != grid.size()) {
    throw InvalidArgument("metrics: sample vectors must match the grid length");
  }
}
}  // namespace detail

inline double mse(const Vector& s_true, const Vector& s_hat, const FrequencyGrid& grid) {
  detail::check_pair(s_true, s_hat, grid);
  return integrate_on_grid((s_true - s_hat).cwiseAbs2(), grid, true);
}

inline double fidelity(const Vector& s_true, const Vector& s_hat, const FrequencyGrid& grid,
                       FidelityConvention conv = FidelityConvention::Cosine) {
  detail::check_pair(s_true, s_hat, grid);
  if (s_true.cwiseAbs().maxCoeff() == 0.0) throw InvalidArgument("fidelity: true spectrum is identically zero");
  const Vector w = grid.weights(true);
  const double cross = (s_true.array() * s_hat.array() * w.array()).sum();
  if (conv == FidelityConvention::Literal) {
    return cross / (s_true.dot(w) * s_hat.dot(w));
  }
  const double norm_hat = (s_hat.array().square() * w.array()).sum();
  if (norm_hat == 0.0) return 0.0;
  const double norm_true = (s_true.array().square() * w.array()).sum();
  return cross / std::sqrt(norm_true * norm_hat);
}

}  // namespace spectro
