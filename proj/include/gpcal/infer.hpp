#ifndef GPCAL_INFER_HPP
#define GPCAL_INFER_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "gpcal/errors.hpp"
#include "gpcal/kernels.hpp"
#include "gpcal/linalg.hpp"
#include "gpcal/model.hpp"

namespace gpcal {

enum class Regime { NoPrior, Prior };

inline const char* to_string(Regime r) {
  return r == Regime::NoPrior ? "no_prior" : "prior";
}

// Parameter estimate (GLS) or posterior (Bayes) with its covariance.
// beta is in shifted coordinates; beta_unshifted = beta + beta_nom.
struct CalibrationResult {
  Regime regime;
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd beta_unshifted;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  // mean = calibrated_model_term + inferred_model_error_term
  double calibrated_model_term = 0.0;
  double inferred_model_error_term = 0.0;
  // Set when a slightly negative variance was rounded up to zero.
  bool variance_clamped = false;

  double sd() const { return std::sqrt(variance); }
};

enum class Level { P90, P95 };

namespace detail {

// H^T R^-1 H via the cached Cholesky factor of R.
inline Eigen::MatrixXd gls_information(const GpModel& model) {
  const Eigen::MatrixXd a = model.R_chol.half_solve(model.lin.H);
  return a.transpose() * a;
}

inline void check_full_rank(const GpModel& model, const char* op) {
  if (model.rank < model.m())
    throw contract_error(std::string(op) +
                         ": non-identifiable parameters (null space dimension " +
                         std::to_string(model.m() - model.rank) + ")");
}

}  // namespace detail

// Generalized least squares calibration (no prior information):
// beta = (H^T R^-1 H)^-1 H^T R^-1 y, covariance (H^T R^-1 H)^-1.
inline CalibrationResult calibrate_gls(const GpModel& model) {
  detail::check_full_rank(model, "calibrate_gls");
  const Eigen::MatrixXd a = model.R_chol.half_solve(model.lin.H);
  const Eigen::VectorXd b = model.R_chol.half_solve(model.y_shifted);
  Eigen::LLT<Eigen::MatrixXd> llt(a.transpose() * a);
  if (llt.info() != Eigen::Success)
    throw numeric_error("calibrate_gls: normal equations not positive definite");
  CholeskyFactor g{llt.matrixL(), 0.0};
  CalibrationResult out;
  out.regime = Regime::NoPrior;
  out.beta = g.solve(Eigen::VectorXd(a.transpose() * b));
  out.covariance = g.inverse();
  out.beta_unshifted = out.beta + model.lin.beta_nom;
  return out;
}

// Gaussian posterior of the parameters given the observations:
// beta_post = beta_prior + (Q^-1 + H^T R^-1 H)^-1 H^T R^-1 (y - H beta_prior).
inline CalibrationResult calibrate_bayes(const GpModel& model) {
  if (!model.prior)
    throw contract_error("calibrate_bayes: model has no prior");
  const Eigen::MatrixXd a = model.R_chol.half_solve(model.lin.H);
  const Eigen::VectorXd prior_mean = model.prior_mean_shifted();
  const Eigen::VectorXd b =
      model.R_chol.half_solve(Eigen::VectorXd(model.y_shifted - model.lin.H * prior_mean));
  const CholeskyFactor q_chol =
      cholesky_with_jitter(model.prior->covariance, "prior covariance");
  const Eigen::MatrixXd q_inv = q_chol.inverse();
  Eigen::LLT<Eigen::MatrixXd> llt(q_inv + a.transpose() * a);
  if (llt.info() != Eigen::Success)
    throw numeric_error("calibrate_bayes: posterior precision not positive definite");
  CholeskyFactor m{llt.matrixL(), 0.0};
  CalibrationResult out;
  out.regime = Regime::Prior;
  out.beta = prior_mean + m.solve(Eigen::VectorXd(a.transpose() * b));
  out.covariance = m.inverse();
  out.beta_unshifted = out.beta + model.lin.beta_nom;
  return out;
}

// Dispatch on prior presence; used by the cross-validation loop.
inline CalibrationResult calibrate(const GpModel& model) {
  return model.prior ? calibrate_bayes(model) : calibrate_gls(model);
}

// Prediction of the physical system at a new point.  The mean is the sum
// of the calibrated computer model and the inferred model error; the
// variance uses the middle matrix already stored in calib.covariance,
// which is (H^T R^-1 H)^-1 without a prior and
// (H^T R^-1 H + Q^-1)^-1 with one.
inline Prediction predict(const GpModel& model, const CalibrationResult& calib,
                          const Eigen::VectorXd& xnew,
                          const Eigen::VectorXd& h_new, double f_nom_new = 0.0) {
  if ((calib.regime == Regime::Prior) != model.prior.has_value())
    throw contract_error("predict: calibration regime does not match the model");
  if (h_new.size() != model.m())
    throw contract_error("predict: derivative row dimension mismatch");
  if (!xnew.allFinite() || !h_new.allFinite())
    throw contract_error("predict: non-finite prediction point");

  const Eigen::VectorXd r = covariance_vector(model.cov, model.design, xnew);
  const Eigen::VectorXd u = model.R_chol.solve(r);  // R^-1 r
  const Eigen::VectorXd resid = model.y_shifted - model.lin.H * calib.beta;

  Prediction p;
  p.calibrated_model_term = h_new.dot(calib.beta) + f_nom_new;
  p.inferred_model_error_term = u.dot(resid);
  p.mean = p.calibrated_model_term + p.inferred_model_error_term;

  const Eigen::VectorXd d = h_new - model.lin.H.transpose() * u;
  double var = model.cov.sigma2 - r.dot(u) + d.dot(calib.covariance * d);
  if (var < 0.0) {
    if (var < -1e-8 * model.cov.sigma2)
      throw numeric_error("predict: negative predictive variance " +
                          std::to_string(var));
    var = 0.0;
    p.variance_clamped = true;
  }
  p.variance = var;
  return p;
}

inline Prediction predict(const GpModel& model, const CalibrationResult& calib,
                          const Eigen::VectorXd& xnew) {
  return predict(model, calib, xnew, model.lin.basis_at(xnew),
                 model.lin.nominal_at(xnew));
}

// Central confidence interval; 1.64 standard deviations for 90%,
// 1.96 for 95%.
inline std::pair<double, double> confidence_interval(const Prediction& pred,
                                                     Level level) {
  const double z = (level == Level::P95) ? 1.96 : 1.64;
  const double half = z * pred.sd();
  return {pred.mean - half, pred.mean + half};
}

}  // namespace gpcal

#endif
