#pragma once

// Independent reference computations used only by the tests. None of these
// touch the frequency grid or the library's solvers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "spectro/controls.hpp"
#include "spectro/spectra.hpp"
#include "spectro/types.hpp"

namespace oracle {

using spectro::Matrix;
using spectro::Vector;

/// n-point Gauss-Legendre nodes/weights on [-1, 1] by Newton on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(spectro::kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// int_lo^hi f(u) du, Gauss-Legendre on pieces no longer than `piece`.
template <class F>
double integrate(F&& f, double lo, double hi, double piece) {
  static const auto rule = gauss_legendre(24);
  if (!(hi > lo)) return 0.0;
  const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / piece)));
  const double h = (hi - lo) / pieces;
  double acc = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double a = lo + p * h;
    for (std::size_t i = 0; i < rule.first.size(); ++i) {
      acc += 0.5 * h * rule.second[i] * f(a + 0.5 * h * (rule.first[i] + 1.0));
    }
  }
  return acc;
}

/// chi = int int Omega_c(t) Omega_c(s) g(t - s) dt ds in the time domain.
///
/// Each pair of constant pieces [a,b] x [c,d] contributes v_i v_j int g(u) w(u) du,
/// w the (trapezoidal) length of {t in [a,b] : t - u in [c,d]}. Integrated piecewise
/// between the breakpoints of w with Gauss-Legendre.
inline double chi_time_domain(const spectro::SpectralDensity& sd, const spectro::ControlSequence& seq) {
  const auto segs = seq.segments();
  double period = std::numeric_limits<double>::infinity();
  for (const auto& c : sd.components()) period = std::min(period, spectro::kTwoPi / c.center);
  const double piece = period / 4.0;
  auto g = [&](double u) { return spectro::autocorrelation(sd, u); };
  double chi = 0.0;
  for (const auto& si : segs) {
    for (const auto& sj : segs) {
      const double a = si.begin, b = si.end, c = sj.begin, d = sj.end;
      auto overlap = [&](double u) { return std::max(0.0, std::min(b, d + u) - std::max(a, c + u)); };
      double br[4] = {a - d, a - c, b - d, b - c};
      std::sort(br, br + 4);
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        acc += integrate([&](double u) { return g(u) * overlap(u); }, br[k], br[k + 1], piece);
      }
      chi += si.value * sj.value * acc;
    }
  }
  return chi;
}

/// int Omega_c(t) e^{-iwt} dt by quadrature of each constant piece.
inline std::complex<double> fourier_quadrature(const spectro::ControlSequence& seq, double omega) {
  const double piece = std::min(seq.tau(), omega > 0.0 ? spectro::kTwoPi / omega : seq.tau()) / 2.0;
  std::complex<double> acc{0.0, 0.0};
  for (const auto& s : seq.segments()) {
    const double re = integrate([&](double t) { return std::cos(omega * t); }, s.begin, s.end, piece);
    const double im = integrate([&](double t) { return -std::sin(omega * t); }, s.begin, s.end, piece);
    acc += s.value * std::complex<double>(re, im);
  }
  return acc;
}

struct BruteForceNnls {
  Vector a;
  double objective;
};

/// min a^T G a - 2 chi^T a over a >= 0 by trying every passive set (n <= ~12).
inline BruteForceNnls nnls_bruteforce(const Matrix& g, const Vector& chi) {
  const auto n = static_cast<int>(g.rows());
  BruteForceNnls best{Vector::Zero(n), 0.0};
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix gp(k, k);
    Vector cp(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      cp[r] = chi[idx[static_cast<std::size_t>(r)]];
      for (Eigen::Index c = 0; c < k; ++c) gp(r, c) = g(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
    }
    const Vector sol = gp.ldlt().solve(cp);
    if ((sol.array() < 0.0).any()) continue;
    Vector a = Vector::Zero(n);
    for (Eigen::Index r = 0; r < k; ++r) a[idx[static_cast<std::size_t>(r)]] = sol[r];
    const double obj = a.dot(g * a) - 2.0 * chi.dot(a);
    if (obj < best.objective) best = {a, obj};
  }
  return best;
}

}  // namespace oracle
