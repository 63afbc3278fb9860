#ifndef GPCAL_LINALG_HPP
#define GPCAL_LINALG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "gpcal/errors.hpp"

namespace gpcal {

// Lower-triangular Cholesky factor of a symmetric matrix, with
// L * L^T = A + jitter * I.  jitter is zero unless the plain
// factorization failed.
struct CholeskyFactor {
  Eigen::MatrixXd L;
  double jitter = 0.0;

  double log_det() const {
    // |A| = prod(L_ii)^2
    return 2.0 * L.diagonal().array().log().sum();
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = L.triangularView<Eigen::Lower>().solve(b);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd x = L.triangularView<Eigen::Lower>().solve(b);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  // L^{-1} b, the "half solve" used for quadratic forms b^T A^{-1} b.
  Eigen::VectorXd half_solve(const Eigen::VectorXd& b) const {
    return L.triangularView<Eigen::Lower>().solve(b);
  }

  Eigen::MatrixXd half_solve(const Eigen::MatrixXd& b) const {
    return L.triangularView<Eigen::Lower>().solve(b);
  }

  // A^{-1} as a dense matrix (use only for small m-by-m blocks).
  Eigen::MatrixXd inverse() const {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(L.rows(), L.cols());
    return solve(eye);
  }
};

namespace detail {

inline bool try_llt(const Eigen::MatrixXd& a, Eigen::MatrixXd& l_out) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return false;
  l_out = llt.matrixL();
  // LLT can "succeed" with non-finite entries when the input is extreme.
  if (!l_out.allFinite()) return false;
  return true;
}

}  // namespace detail

// Cholesky factorization with jitter escalation: on failure, add
// 1e-10 * mean(diag) to the diagonal and retry up to 3 times with a
// 10x larger jitter each time.  Throws numeric_error when all retries
// fail.
inline CholeskyFactor cholesky_with_jitter(const Eigen::MatrixXd& a,
                                           const std::string& what = "covariance") {
  if (a.rows() != a.cols())
    throw contract_error("cholesky_with_jitter: matrix must be square");
  CholeskyFactor f;
  if (detail::try_llt(a, f.L)) return f;

  const double mean_diag = a.diagonal().mean();
  double jitter = 1e-10 * (mean_diag > 0.0 ? mean_diag : 1.0);
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd aj = a;
    aj.diagonal().array() += jitter;
    if (detail::try_llt(aj, f.L)) {
      f.jitter = jitter;
      return f;
    }
  }
  throw numeric_error("degenerate " + what +
                      ": Cholesky failed after jitter escalation");
}

// Numerical rank against the usual relative singular-value cutoff.
inline Eigen::Index rank_from_singular_values(const Eigen::VectorXd& sv,
                                              double rel_tol = 1e-10) {
  if (sv.size() == 0) return 0;
  const double cutoff = rel_tol * sv(0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++r;
  return r;
}

}  // namespace gpcal

#endif
