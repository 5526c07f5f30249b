#pragma once

// Spectrum reconstruction from overlaps chi_n = int S F_n dw.
//
// The estimate is S_hat = sum_n a_n F_n. Minimising int (S - S_hat)^2 over a
// reduces to min_a a^T G a - 2 chi^T a with G the filter Gramian, solved through
// G = U Lambda U^T as a = U Lambda^{-1} U^T chi (optionally truncated), or under
// a_n >= 0 by an active-set NNLS on the factor G = M^T M.

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spectro/controls.hpp"
#include "spectro/error.hpp"
#include "spectro/types.hpp"

namespace spectro {

/// Eigenvalues below this fraction of the largest one are numerically zero.
inline constexpr double kSingularThreshold = 1e-12;

class TruncationPolicy {
 public:
  enum class Kind { None, DropSmallest, KeepFraction, Threshold };

  static TruncationPolicy none() { return {Kind::None, 0.0}; }
  static TruncationPolicy drop_smallest(int r) {
    if (r < 0) throw InvalidArgument("drop_smallest: r must be >= 0");
    return {Kind::DropSmallest, static_cast<double>(r)};
  }
  static TruncationPolicy keep_fraction(double f) {
    if (!(f > 0.0) || f > 1.0) throw InvalidArgument("keep_fraction: f must lie in (0, 1]");
    return {Kind::KeepFraction, f};
  }
  static TruncationPolicy threshold(double rel) {
    if (!(rel > 0.0) || !(rel < 1.0)) throw InvalidArgument("threshold: rel must lie in (0, 1)");
    return {Kind::Threshold, rel};
  }

  /// Accepts "none", "drop_smallest:R", "keep_fraction:F", "threshold:REL".
  static TruncationPolicy parse(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    if (name == "none" && colon == std::string_view::npos) return none();
    if (colon == std::string_view::npos) throw InvalidArgument("truncation policy: missing argument in '" + std::string(text) + "'");
    const std::string arg(text.substr(colon + 1));
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidArgument("truncation policy: bad number '" + arg + "'");
    }
    if (name == "drop_smallest") {
      if (v != std::floor(v)) throw InvalidArgument("drop_smallest: r must be an integer");
      return drop_smallest(static_cast<int>(v));
    }
    if (name == "keep_fraction") return keep_fraction(v);
    if (name == "threshold") return threshold(v);
    throw InvalidArgument("unknown truncation policy '" + std::string(name) + "'");
  }

  Kind kind() const { return kind_; }
  double value() const { return value_; }

  std::string to_string() const {
    switch (kind_) {
      case Kind::None: return "none";
      case Kind::DropSmallest: return "drop_smallest:" + std::to_string(static_cast<int>(value_));
      case Kind::KeepFraction: return "keep_fraction:" + format_number(value_);
      case Kind::Threshold: return "threshold:" + format_number(value_);
    }
    return "none";
  }

  /// Number of leading (descending) eigenvalues kept out of `values`.
  int retained(const Vector& values) const {
    const auto n = static_cast<int>(values.size());
    const int rank = numerical_rank(values);
    int r = rank;
    switch (kind_) {
      case Kind::None: break;
      case Kind::DropSmallest: {
        const int drop = static_cast<int>(value_);
        if (drop >= rank) {
          throw NumericalError("drop_smallest(" + std::to_string(drop) + ") leaves nothing of numerical rank " +
                               std::to_string(rank));
        }
        r = rank - drop;
        break;
      }
      case Kind::KeepFraction:
        r = std::min(rank, std::max(1, static_cast<int>(std::floor(value_ * n + 1e-9))));
        break;
      case Kind::Threshold: {
        int c = 0;
        for (int k = 0; k < rank; ++k) c += values[k] > value_ * values[0] ? 1 : 0;
        r = c;
        break;
      }
    }
    if (r < 1) throw NumericalError("truncation policy retains no component");
    return r;
  }

  static int numerical_rank(const Vector& values) {
    if (values.size() == 0 || !std::isfinite(values[0]) || !(values[0] > 0.0)) return 0;
    int c = 0;
    for (Eigen::Index k = 0; k < values.size(); ++k) c += values[k] > kSingularThreshold * values[0] ? 1 : 0;
    return c;
  }

 private:
  TruncationPolicy(Kind k, double v) : kind_(k), value_(v) {}

  static std::string format_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

  Kind kind_;
  double value_;
};

enum class Method { LS, NNLS, PINV };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::LS: return "LS";
    case Method::NNLS: return "NNLS";
    case Method::PINV: return "PINV";
  }
  return "LS";
}

struct NnlsCertificate {
  int iterations = 0;
  double tolerance = 0.0;      // kappa = 1e-8 * ||chi||_inf
  double max_violation = 0.0;  // worst KKT residual
  bool holds = false;
};

struct EstimationResult {
  Vector coefficients;
  Vector spectrum_hat;
  Vector eigenvalues;  // descending
  int effective_rank = 0;
  Method method = Method::LS;
  bool clipped = false;
  std::optional<NnlsCertificate> certificate;
};

/// Descending symmetric eigendecomposition G = U diag(values) U^T.
struct Eigensystem {
  Vector values;
  Matrix vectors;
};

inline void require_symmetric(const Matrix& g) {
  if (g.rows() != g.cols() || g.rows() == 0) throw InvalidArgument("Gramian must be square and non-empty");
  const double scale = g.cwiseAbs().maxCoeff();
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("Gramian must be symmetric");
  }
  if (!g.allFinite()) throw NumericalError("Gramian has non-finite entries");
}

inline Eigensystem symmetric_eigen(const Matrix& g) {
  require_symmetric(g);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(g);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  return {solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
}

/// a^T G a - 2 chi^T a.
inline double quadratic_objective(const Matrix& g, const Vector& chi, const Vector& a) {
  return a.dot(g * a) - 2.0 * chi.dot(a);
}

struct CoefficientSolution {
  Vector coefficients;
  Vector eigenvalues;
  int effective_rank = 0;
  std::optional<NnlsCertificate> certificate;
};

namespace detail {

inline void check_system(const Matrix& g, const Vector& chi) {
  if (chi.size() != g.rows()) throw InvalidArgument("chi length does not match the number of filters");
  if (!chi.allFinite()) throw InvalidArgument("chi has non-finite entries");
}

inline int checked_retained(const Eigensystem& es, const TruncationPolicy& policy) {
  if (TruncationPolicy::numerical_rank(es.values) == 0) {
    throw NumericalError("singular Gramian: no eigenvalue above the numerical threshold");
  }
  return policy.retained(es.values);
}

}  // namespace detail

/// a = U_R Lambda_R^{-1} U_R^T chi on the retained eigenpairs.
inline CoefficientSolution solve_ls_coefficients(const Matrix& gramian, const Vector& chi,
                                                 const TruncationPolicy& policy) {
  detail::check_system(gramian, chi);
  const Eigensystem es = symmetric_eigen(gramian);
  const int r = detail::checked_retained(es, policy);
  const auto u = es.vectors.leftCols(r);
  const Vector x = u.transpose() * chi;
  Vector a = u * (x.array() / es.values.head(r).array()).matrix();
  return {std::move(a), es.values, r, std::nullopt};
}

/// Raised when the active-set loop exceeds its iteration budget.
class NnlsNotConverged : public NumericalError {
 public:
  NnlsNotConverged(const std::string& what, Vector best) : NumericalError(what), best_(std::move(best)) {}
  const Vector& best_iterate() const { return best_; }

 private:
  Vector best_;
};

/// Lawson-Hanson active set for min ||M a - d||^2 subject to a >= 0.
///
/// M = Lambda_R^{1/2} U_R^T and d = Lambda_R^{-1/2} U_R^T chi, so M^T M is the
/// truncated Gramian and M^T d the projection of chi on the retained subspace.
inline CoefficientSolution solve_nnls_coefficients(const Matrix& gramian, const Vector& chi,
                                                   const TruncationPolicy& policy) {
  detail::check_system(gramian, chi);
  const Eigensystem es = symmetric_eigen(gramian);
  const int r = detail::checked_retained(es, policy);
  const Eigen::Index n = gramian.rows();
  const Vector sqrt_lambda = es.values.head(r).cwiseSqrt();
  const Matrix m = sqrt_lambda.asDiagonal() * es.vectors.leftCols(r).transpose();
  const Vector d = (es.vectors.leftCols(r).transpose() * chi).cwiseQuotient(sqrt_lambda);

  const double chi_scale = std::max(chi.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double kappa = 1e-8 * chi_scale;
  const double add_tol = 1e-11 * chi_scale;
  const int max_iterations = 10 * static_cast<int>(n);

  Vector x = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  std::vector<bool> blocked(static_cast<std::size_t>(n), false);
  int iterations = 0;

  auto passive_indices = [&] {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    return idx;
  };
  auto solve_passive = [&](const std::vector<Eigen::Index>& idx) {
    Matrix sub(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = m.col(idx[c]);
    const Vector s = sub.colPivHouseholderQr().solve(d);
    Vector full = Vector::Zero(n);
    for (std::size_t c = 0; c < idx.size(); ++c) full[idx[c]] = s[static_cast<Eigen::Index>(c)];
    return full;
  };
  auto fail = [&] {
    throw NnlsNotConverged("NNLS: no convergence after " + std::to_string(max_iterations) + " active-set iterations",
                           x);
  };

  while (true) {
    const Vector w = m.transpose() * (d - m * x);
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (passive[ui] || blocked[ui] || !(w[i] > add_tol)) continue;
      if (best < 0 || w[i] > w[best]) best = i;
    }
    if (best < 0) break;
    if (++iterations > max_iterations) fail();
    passive[static_cast<std::size_t>(best)] = true;

    bool first = true;
    while (true) {
      const auto idx = passive_indices();
      const Vector s = solve_passive(idx);
      if (first && !(s[best] > 0.0)) {
        // Rounding made the entering variable non-positive; skip it until x moves.
        passive[static_cast<std::size_t>(best)] = false;
        blocked[static_cast<std::size_t>(best)] = true;
        break;
      }
      first = false;
      bool feasible = true;
      for (auto i : idx) feasible = feasible && s[i] > 0.0;
      if (feasible) {
        x = s;
        std::fill(blocked.begin(), blocked.end(), false);
        break;
      }
      double alpha = 1.0;
      for (auto i : idx) {
        if (s[i] <= 0.0) alpha = std::min(alpha, x[i] / (x[i] - s[i]));
      }
      x += alpha * (s - x);
      for (auto i : idx) {
        if (x[i] <= 1e-14 * x.cwiseAbs().maxCoeff()) {
          x[i] = 0.0;
          passive[static_cast<std::size_t>(i)] = false;
        }
      }
      std::fill(blocked.begin(), blocked.end(), false);
      if (++iterations > max_iterations) fail();
    }
  }

  // KKT on the gradient of a^T G_R a - 2 (P chi)^T a.
  const Vector grad = m.transpose() * (m * x - d);
  double violation = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    violation = std::max(violation, x[i] > 0.0 ? std::abs(grad[i]) : std::max(0.0, -grad[i]));
  }
  NnlsCertificate cert{iterations, kappa, violation, violation <= kappa};
  return {std::move(x), es.values, r, cert};
}

inline EstimationResult make_result(const FilterBank& bank, CoefficientSolution sol, Method method) {
  EstimationResult res;
  res.spectrum_hat = bank.filters.transpose() * sol.coefficients;
  res.coefficients = std::move(sol.coefficients);
  res.eigenvalues = std::move(sol.eigenvalues);
  res.effective_rank = sol.effective_rank;
  res.method = method;
  res.certificate = sol.certificate;
  return res;
}

inline EstimationResult solve_ls(const FilterBank& bank, const Vector& chi, const TruncationPolicy& policy) {
  return make_result(bank, solve_ls_coefficients(bank.gramian, chi, policy), Method::LS);
}

inline EstimationResult solve_nnls(const FilterBank& bank, const Vector& chi, const TruncationPolicy& policy) {
  return make_result(bank, solve_nnls_coefficients(bank.gramian, chi, policy), Method::NNLS);
}

/// Minimum-norm solution of the discretised system F S = chi.
///
/// With quadrature weights W the system reads (F W) S = chi; the solution of
/// least int S^2 dw is S = W^{-1/2} (F W^{1/2})^+ chi, computed here from a thin
/// SVD of F W^{1/2}. Its squared singular values are the Gramian eigenvalues.
inline EstimationResult solve_pinv(const FilterBank& bank, const Vector& chi,
                                   const TruncationPolicy& policy = TruncationPolicy::none()) {
  detail::check_system(bank.gramian, chi);
  const Vector w = bank.grid.weights(true);
  if (bank.filters.cols() != w.size()) throw InvalidArgument("solve_pinv: filters are not sampled on the bank grid");
  const Vector sqrt_w = w.cwiseSqrt();
  const Matrix b = bank.filters * sqrt_w.asDiagonal();
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sigma = svd.singularValues();
  const Vector lambda = sigma.cwiseAbs2();
  if (TruncationPolicy::numerical_rank(lambda) == 0) {
    throw NumericalError("singular Gramian: no singular value above the numerical threshold");
  }
  const int r = policy.retained(lambda);
  const Vector x = svd.matrixU().leftCols(r).transpose() * chi;
  const Vector t = svd.matrixV().leftCols(r) * x.cwiseQuotient(sigma.head(r));

  EstimationResult res;
  res.spectrum_hat = t.cwiseQuotient(sqrt_w);
  res.coefficients = svd.matrixU().leftCols(r) * x.cwiseQuotient(lambda.head(r));
  res.eigenvalues = lambda;
  res.effective_rank = r;
  res.method = Method::PINV;
  return res;
}

/// Zeroes negative samples of the reconstructed spectrum; coefficients untouched.
inline EstimationResult clip_negative(EstimationResult result) {
  result.spectrum_hat = result.spectrum_hat.cwiseMax(0.0);
  result.clipped = true;
  return result;
}

}  // namespace spectro
