#ifndef GPCAL_MODEL_HPP
#define GPCAL_MODEL_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "gpcal/design.hpp"
#include "gpcal/errors.hpp"
#include "gpcal/kernels.hpp"
#include "gpcal/linalg.hpp"

namespace gpcal {

using Observations = Eigen::VectorXd;

// Linearized computer model around a nominal parameter vector.  The
// library works in shifted coordinates: beta_nom is subtracted from the
// parameters and the nominal outputs f_nom from the observations, so the
// internal model is f_mod(x, beta) = h(x)^T beta with f_mod(x, 0) = 0.
struct LinearModel {
  Eigen::MatrixXd H;        // n x m, H(i,j) = h_j(x_i)
  Eigen::VectorXd beta_nom; // m, zero unless a shift was recorded
  Eigen::VectorXd f_nom;    // n, nominal outputs at the design points

  // Derivative row h(x) at an arbitrary raw point; may be empty for
  // models built from a precomputed matrix.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> basis;
  // Nominal model output f_mod(x, beta_nom) at an arbitrary raw point.
  std::function<double(const Eigen::VectorXd&)> nominal;

  Eigen::Index m() const { return H.cols(); }
  Eigen::Index n() const { return H.rows(); }

  Eigen::VectorXd basis_at(const Eigen::VectorXd& x) const {
    if (!basis)
      throw contract_error(
          "LinearModel: no basis evaluator (model built from a matrix); "
          "pass the derivative row explicitly");
    return basis(x);
  }

  double nominal_at(const Eigen::VectorXd& x) const {
    return nominal ? nominal(x) : 0.0;
  }

  static LinearModel from_matrix(Eigen::MatrixXd h) {
    LinearModel lm;
    lm.H = std::move(h);
    lm.beta_nom = Eigen::VectorXd::Zero(lm.H.cols());
    lm.f_nom = Eigen::VectorXd::Zero(lm.H.rows());
    return lm;
  }

  static LinearModel from_basis(
      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> basis,
      const Design& design) {
    LinearModel lm;
    Eigen::VectorXd h0 = basis(design.points().row(0).transpose());
    lm.H.resize(design.n(), h0.size());
    lm.H.row(0) = h0.transpose();
    for (Eigen::Index i = 1; i < design.n(); ++i) {
      Eigen::VectorXd hi = basis(design.points().row(i).transpose());
      if (hi.size() != h0.size())
        throw contract_error("LinearModel: basis size varies across points");
      lm.H.row(i) = hi.transpose();
    }
    lm.beta_nom = Eigen::VectorXd::Zero(lm.H.cols());
    lm.f_nom = Eigen::VectorXd::Zero(design.n());
    lm.basis = std::move(basis);
    return lm;
  }
};

// Gaussian expert judgment on the model parameters, in unshifted units.
struct Prior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Prior(Eigen::VectorXd m, Eigen::MatrixXd cov)
      : mean(std::move(m)), covariance(std::move(cov)) {
    if (covariance.rows() != covariance.cols() ||
        covariance.rows() != mean.size())
      throw contract_error("Prior: dimension mismatch");
    if (!mean.allFinite() || !covariance.allFinite())
      throw contract_error("Prior: non-finite entry");
    const double scale = covariance.cwiseAbs().maxCoeff();
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * (1.0 + scale))
      throw contract_error("Prior: covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success)
      throw contract_error("Prior: covariance must be positive definite");
  }
};

// Assembled universal-Kriging model: y_obs = H beta + z + eps with
// R = R_mod + R_mes cached together with its Cholesky factor and the
// singular value decomposition of H.  Immutable after assembly.
struct GpModel {
  Design design;
  Eigen::VectorXd y;          // raw observations
  LinearModel lin;
  CovarianceSpec cov;
  NoiseSpec noise;
  std::optional<Prior> prior;

  Eigen::VectorXd y_shifted;  // y - f_nom
  Eigen::MatrixXd R;          // R_mod + R_mes
  CholeskyFactor R_chol;
  Eigen::MatrixXd U;          // n x rank(H), orthonormal columns spanning col(H)
  Eigen::Index rank = 0;

  Eigen::Index n() const { return design.n(); }
  Eigen::Index m() const { return lin.m(); }

  // Prior mean in shifted coordinates.
  Eigen::VectorXd prior_mean_shifted() const {
    return prior->mean - lin.beta_nom;
  }
};

inline GpModel assemble(Design design, Observations y, LinearModel lin,
                        CovarianceSpec cov, NoiseSpec noise,
                        std::optional<Prior> prior = std::nullopt) {
  const Eigen::Index n = design.n();
  if (y.size() != n)
    throw contract_error("assemble: observation count " +
                         std::to_string(y.size()) + " does not match n = " +
                         std::to_string(n));
  if (!y.allFinite()) throw contract_error("assemble: non-finite observation");
  if (lin.n() != n)
    throw contract_error("assemble: H row count does not match design");
  if (!lin.H.allFinite()) throw contract_error("assemble: non-finite entry in H");
  if (lin.f_nom.size() != n || lin.beta_nom.size() != lin.m())
    throw contract_error("assemble: inconsistent shift metadata");
  if (cov.dim() != design.dim())
    throw contract_error("assemble: covariance length vector has dimension " +
                         std::to_string(cov.dim()) + ", design has " +
                         std::to_string(design.dim()));
  if (prior && prior->mean.size() != lin.m())
    throw contract_error("assemble: prior dimension does not match m");

  // Spot-check that the cached H agrees with the basis evaluator.
  if (lin.basis) {
    for (Eigen::Index i : {Eigen::Index(0), n - 1}) {
      Eigen::VectorXd h = lin.basis(design.points().row(i).transpose());
      const double scale = lin.H.row(i).cwiseAbs().maxCoeff();
      if (h.size() != lin.m() ||
          (h.transpose() - lin.H.row(i)).cwiseAbs().maxCoeff() >
              1e-12 * (1.0 + scale))
        throw contract_error(
            "assemble: cached H row " + std::to_string(i) +
            " disagrees with the basis evaluator");
    }
  }

  GpModel model{std::move(design), std::move(y),   std::move(lin),
                std::move(cov),    std::move(noise), std::move(prior),
                {},                {},              {},
                {},                0};
  model.y_shifted = model.y - model.lin.f_nom;
  model.R = covariance_matrix(model.cov, model.design) +
            noise_matrix(model.noise, n);
  model.R_chol = cholesky_with_jitter(model.R, "covariance R");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.lin.H, Eigen::ComputeThinU);
  model.rank = rank_from_singular_values(svd.singularValues());
  model.U = svd.matrixU().leftCols(model.rank);
  return model;
}

// Re-assemble the same data with a different covariance spec.
inline GpModel with_covariance(const GpModel& model, CovarianceSpec cov) {
  return assemble(model.design, model.y, model.lin, std::move(cov),
                  model.noise, model.prior);
}

// Default forward-difference steps: 1e-2 of the prior standard deviation
// when a prior exists, else 1e-2 of |beta_nom| floored at 1e-4.
inline Eigen::VectorXd default_fd_steps(const Eigen::VectorXd& beta_nom,
                                        const std::optional<Prior>& prior) {
  Eigen::VectorXd steps(beta_nom.size());
  for (Eigen::Index j = 0; j < beta_nom.size(); ++j) {
    double s;
    if (prior) {
      s = 1e-2 * std::sqrt(prior->covariance(j, j));
    } else {
      s = 1e-2 * std::abs(beta_nom(j));
    }
    steps(j) = std::max(s, 1e-4);
  }
  return steps;
}

// One-sided forward-difference linearization of a simulator around
// beta_nom.  Records the nominal outputs so observations can be shifted
// to the internal convention y <- y - f_nom.
inline LinearModel finite_difference_jacobian(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>&
        model_runner,
    const Design& design, const Eigen::VectorXd& beta_nom,
    const Eigen::VectorXd& steps) {
  const Eigen::Index m = beta_nom.size();
  const Eigen::Index n = design.n();
  if (steps.size() != m)
    throw contract_error("finite_difference_jacobian: steps size mismatch");
  for (Eigen::Index j = 0; j < m; ++j)
    if (!(steps(j) > 0.0) || !std::isfinite(steps(j)))
      throw contract_error("finite_difference_jacobian: step " +
                           std::to_string(j + 1) + " must be positive");

  LinearModel lm;
  lm.H.resize(n, m);
  lm.beta_nom = beta_nom;
  lm.f_nom.resize(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = design.points().row(i).transpose();
    const double f0 = model_runner(xi, beta_nom);
    if (!std::isfinite(f0))
      throw numeric_error("finite_difference_jacobian: non-finite model output "
                          "at point " + std::to_string(i + 1) + " (nominal run)");
    lm.f_nom(i) = f0;
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::VectorXd b = beta_nom;
      b(j) += steps(j);
      const double fj = model_runner(xi, b);
      if (!std::isfinite(fj))
        throw numeric_error(
            "finite_difference_jacobian: non-finite model output at point " +
            std::to_string(i + 1) + ", parameter " + std::to_string(j + 1));
      lm.H(i, j) = (fj - f0) / steps(j);
    }
  }

  lm.basis = [model_runner, beta_nom, steps](const Eigen::VectorXd& x) {
    const double f0 = model_runner(x, beta_nom);
    Eigen::VectorXd h(beta_nom.size());
    for (Eigen::Index j = 0; j < beta_nom.size(); ++j) {
      Eigen::VectorXd b = beta_nom;
      b(j) += steps(j);
      h(j) = (model_runner(x, b) - f0) / steps(j);
    }
    if (!h.allFinite())
      throw numeric_error("finite_difference_jacobian: non-finite derivative "
                          "at a new point");
    return h;
  };
  lm.nominal = [model_runner, beta_nom](const Eigen::VectorXd& x) {
    return model_runner(x, beta_nom);
  };
  return lm;
}

}  // namespace gpcal

#endif
