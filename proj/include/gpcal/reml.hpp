#ifndef GPCAL_REML_HPP
#define GPCAL_REML_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gpcal/errors.hpp"
#include "gpcal/kernels.hpp"
#include "gpcal/linalg.hpp"
#include "gpcal/model.hpp"
#include "gpcal/nelder_mead.hpp"

namespace gpcal {

// Value of the restricted-likelihood objective (nats, defined up to an
// additive constant).  Invalid values arise from covariance candidates
// whose Cholesky fails even with jitter; the optimizer treats them as
// +infinity.
struct RemlObjectiveValue {
  double q = std::numeric_limits<double>::infinity();
  bool valid = false;
};

struct OptimizerConfig {
  int n_starts = 10;      // space-filling starts, plus one residual-based start
  int max_iters = 400;    // Nelder-Mead iterations per start
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
};

struct RemlStartTrace {
  Eigen::VectorXd start;      // (sigma2, lengths...) at the start point
  Eigen::VectorXd converged;  // same layout after local minimization
  double q = std::numeric_limits<double>::infinity();
  bool valid = false;
  int iterations = 0;
};

struct RemlEstimate {
  CovarianceSpec spec;
  double q_min;
  int n_starts;
  std::vector<RemlStartTrace> trace;
  // Per-dimension flag: the objective is flat in this correlation length
  // (constant design dimension or unidentified direction); the length is
  // reported at its start value.
  std::vector<bool> non_identified;
};

namespace detail {

inline void check_reml_preconditions(const GpModel& model) {
  if (model.n() <= model.rank)
    throw contract_error(
        "insufficient degrees of freedom for REML: n = " +
        std::to_string(model.n()) + " must exceed rank(H) = " +
        std::to_string(model.rank));
}

// R for a candidate spec, factored; returns false if even the jittered
// factorization fails.
inline bool candidate_cholesky(const GpModel& model, const CovarianceSpec& spec,
                               CholeskyFactor& out) {
  Eigen::MatrixXd r = covariance_matrix(spec, model.design) +
                      noise_matrix(model.noise, model.n());
  try {
    out = cholesky_with_jitter(r);
  } catch (const numeric_error&) {
    return false;
  }
  return true;
}

}  // namespace detail

// Restricted-likelihood objective in the SVD form: only the orthonormal
// column-space basis U of H enters, so an ill-conditioned or singular H
// is harmless.  q = ln|U^T R^-1 U| + ln|R| + y^T R^-1 y
//                 - y^T R^-1 U (U^T R^-1 U)^-1 U^T R^-1 y.
inline RemlObjectiveValue reml_objective_svd(const GpModel& model,
                                             const CovarianceSpec& candidate) {
  detail::check_reml_preconditions(model);
  if (candidate.dim() != model.design.dim())
    throw contract_error("reml_objective_svd: candidate dimension mismatch");

  CholeskyFactor chol;
  if (!detail::candidate_cholesky(model, candidate, chol)) return {};

  const Eigen::MatrixXd a = chol.half_solve(model.U);        // L^-1 U
  const Eigen::VectorXd b = chol.half_solve(model.y_shifted); // L^-1 y
  const Eigen::MatrixXd g = a.transpose() * a;               // U^T R^-1 U
  Eigen::LLT<Eigen::MatrixXd> llt_g(g);
  if (llt_g.info() != Eigen::Success) return {};
  const Eigen::MatrixXd lg = llt_g.matrixL();
  const Eigen::VectorXd c = a.transpose() * b;               // U^T R^-1 y
  const Eigen::VectorXd t = lg.triangularView<Eigen::Lower>().solve(c);

  RemlObjectiveValue v;
  v.q = 2.0 * lg.diagonal().array().log().sum() + chol.log_det() +
        b.squaredNorm() - t.squaredNorm();
  v.valid = std::isfinite(v.q);
  if (!v.valid) v.q = std::numeric_limits<double>::infinity();
  return v;
}

// Direct error-contrast form, q = ln|W R W^T| + w^T (W R W^T)^-1 w with
// w = W y.  W must have n - rank(H) independent rows annihilating H.
// Different valid W differ only by a constant; this form exists as an
// independent check of reml_objective_svd.
inline RemlObjectiveValue reml_objective_contrast(const GpModel& model,
                                                  const CovarianceSpec& candidate,
                                                  const Eigen::MatrixXd& w_mat) {
  detail::check_reml_preconditions(model);
  const Eigen::Index n = model.n();
  const Eigen::Index n_contrasts = n - model.rank;
  if (w_mat.cols() != n || w_mat.rows() != n_contrasts)
    throw contract_error("reml_objective_contrast: W must be (n - rank(H)) x n");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd_w(w_mat);
  if (rank_from_singular_values(svd_w.singularValues()) != n_contrasts)
    throw contract_error("reml_objective_contrast: W is rank deficient");

  const double h_scale = model.lin.H.cwiseAbs().maxCoeff();
  if ((w_mat * model.lin.H).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + h_scale))
    throw contract_error("reml_objective_contrast: W H != 0");

  CholeskyFactor chol;
  if (!detail::candidate_cholesky(model, candidate, chol)) return {};

  const Eigen::MatrixXd m = w_mat * chol.L * chol.L.transpose() * w_mat.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt_m(0.5 * (m + m.transpose()));
  if (llt_m.info() != Eigen::Success) return {};
  const Eigen::MatrixXd lm = llt_m.matrixL();
  const Eigen::VectorXd w = w_mat * model.y_shifted;
  const Eigen::VectorXd t = lm.triangularView<Eigen::Lower>().solve(w);

  RemlObjectiveValue v;
  v.q = 2.0 * lm.diagonal().array().log().sum() + t.squaredNorm();
  v.valid = std::isfinite(v.q);
  if (!v.valid) v.q = std::numeric_limits<double>::infinity();
  return v;
}

namespace detail {

// Variance of the ordinary least-squares residuals, used to anchor the
// sigma^2 search box and the residual-based start.
inline double ols_residual_variance(const GpModel& model) {
  const Eigen::VectorXd fitted =
      model.U * (model.U.transpose() * model.y_shifted);
  const double rss = (model.y_shifted - fitted).squaredNorm();
  const Eigen::Index dof = model.n() - model.rank;
  double v = rss / double(dof);
  const double floor =
      1e-12 * (1.0 + model.y_shifted.squaredNorm() / double(model.n()));
  return std::max(v, floor);
}

struct SearchSpace {
  // Layout of the optimization vector: [ln sigma2, ln l_k for active k].
  std::vector<Eigen::Index> active_dims;
  Eigen::VectorXd lo, hi;

  Eigen::Index size() const {
    return 1 + static_cast<Eigen::Index>(active_dims.size());
  }
};

inline SearchSpace make_search_space(const GpModel& model, double resid_var) {
  SearchSpace s;
  for (Eigen::Index i = 0; i < model.design.dim(); ++i)
    if (model.design.norm().active(i)) s.active_dims.push_back(i);
  s.lo.resize(s.size());
  s.hi.resize(s.size());
  s.lo(0) = std::log(1e-4 * resid_var);
  s.hi(0) = std::log(1e4 * resid_var);
  for (Eigen::Index k = 1; k < s.size(); ++k) {
    s.lo(k) = std::log(kMinCorrelationLength);
    s.hi(k) = std::log(kMaxCorrelationLength);
  }
  return s;
}

// Full-dimension length vector from an optimization vector, with
// inactive dimensions pinned at their per-start fallback values.
inline CovarianceSpec spec_from_log(const GpModel& model, const SearchSpace& s,
                                    const Eigen::VectorXd& p,
                                    const Eigen::VectorXd& fallback_lengths) {
  Eigen::VectorXd lengths = fallback_lengths;
  for (std::size_t k = 0; k < s.active_dims.size(); ++k)
    lengths(s.active_dims[k]) = std::exp(p(1 + k));
  return CovarianceSpec(model.cov.family, std::exp(p(0)), lengths);
}

inline Eigen::VectorXd trace_params(const CovarianceSpec& spec) {
  Eigen::VectorXd v(1 + spec.lengths.size());
  v(0) = spec.sigma2;
  v.tail(spec.lengths.size()) = spec.lengths;
  return v;
}

}  // namespace detail

// Restricted maximum likelihood estimation of (sigma^2, lengths) by
// multi-start Nelder-Mead in log parameters.  Start 0 uses the OLS
// residual variance with lengths 0.3; the remaining starts fill the
// search box with a seeded Latin hypercube.  Deterministic for a given
// config.  Ties on q (within 1e-9) resolve to the lowest start index.
inline RemlEstimate estimate_hyperparameters(const GpModel& model,
                                             const OptimizerConfig& config = {}) {
  detail::check_reml_preconditions(model);
  if (config.n_starts < 0)
    throw contract_error("estimate_hyperparameters: n_starts must be >= 0");

  const double resid_var = detail::ols_residual_variance(model);
  const detail::SearchSpace space = detail::make_search_space(model, resid_var);
  const Eigen::Index d = model.design.dim();
  const Eigen::Index p_dim = space.size();
  const int total_starts = config.n_starts + 1;

  // Start points in log space; the fallback length doubles as the
  // reported value for inactive dimensions.
  std::vector<Eigen::VectorXd> starts;
  std::vector<Eigen::VectorXd> fallback_lengths;
  {
    Eigen::VectorXd p0(p_dim);
    p0(0) = std::clamp(std::log(resid_var), space.lo(0), space.hi(0));
    for (Eigen::Index k = 1; k < p_dim; ++k) p0(k) = std::log(0.3);
    starts.push_back(p0);
    fallback_lengths.push_back(Eigen::VectorXd::Constant(d, 0.3));
  }
  if (config.n_starts > 0) {
    // Latin hypercube over the box, plus independently sampled values for
    // inactive dimensions so their "start value" is defined per start.
    std::mt19937_64 rng(config.seed);
    const int ns = config.n_starts;
    Eigen::MatrixXd strata(ns, p_dim + static_cast<Eigen::Index>(
                                           model.design.norm().dropped().size()));
    for (Eigen::Index k = 0; k < strata.cols(); ++k) {
      std::vector<int> perm(ns);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int s = 0; s < ns; ++s)
        strata(s, k) = (perm[s] + 0.5) / double(ns);
    }
    const auto dropped = model.design.norm().dropped();
    for (int s = 0; s < ns; ++s) {
      Eigen::VectorXd p(p_dim);
      for (Eigen::Index k = 0; k < p_dim; ++k)
        p(k) = space.lo(k) + strata(s, k) * (space.hi(k) - space.lo(k));
      starts.push_back(p);
      Eigen::VectorXd fb = Eigen::VectorXd::Constant(d, 0.3);
      for (std::size_t j = 0; j < dropped.size(); ++j) {
        const double u = strata(s, p_dim + static_cast<Eigen::Index>(j));
        fb(dropped[j]) = std::exp(std::log(kMinCorrelationLength) +
                                  u * (std::log(kMaxCorrelationLength) -
                                       std::log(kMinCorrelationLength)));
      }
      fallback_lengths.push_back(fb);
    }
  }

  NelderMeadOptions nm;
  nm.max_iters = config.max_iters;
  nm.f_tolerance = config.tolerance;

  std::vector<RemlStartTrace> trace(total_starts);
  std::vector<Eigen::VectorXd> converged_logs(total_starts);
  for (int s = 0; s < total_starts; ++s) {
    const Eigen::VectorXd& fb = fallback_lengths[s];
    const auto objective = [&](const Eigen::VectorXd& p) {
      const RemlObjectiveValue v =
          reml_objective_svd(model, detail::spec_from_log(model, space, p, fb));
      return v.valid ? v.q : std::numeric_limits<double>::infinity();
    };
    const NelderMeadResult r =
        nelder_mead(objective, starts[s], space.lo, space.hi, nm);
    RemlStartTrace& t = trace[s];
    t.start =
        detail::trace_params(detail::spec_from_log(model, space, starts[s], fb));
    t.converged =
        detail::trace_params(detail::spec_from_log(model, space, r.x, fb));
    t.q = r.f;
    t.valid = std::isfinite(r.f);
    t.iterations = r.iterations;
    converged_logs[s] = r.x;
  }

  double q_min = std::numeric_limits<double>::infinity();
  for (const auto& t : trace) q_min = std::min(q_min, t.q);
  if (!std::isfinite(q_min)) {
    std::string msg = "estimation failed: all " +
                      std::to_string(total_starts) +
                      " starts produced invalid objectives (starts:";
    for (const auto& t : trace)
      msg += std::string(" ") + (t.valid ? "ok" : "invalid");
    throw numeric_error(msg + ")");
  }
  int winner = 0;
  for (; winner < total_starts; ++winner)
    if (trace[winner].q <= q_min + 1e-9) break;

  const Eigen::VectorXd& fb = fallback_lengths[winner];
  Eigen::VectorXd best_log = converged_logs[winner];
  CovarianceSpec best = detail::spec_from_log(model, space, best_log, fb);
  const double q_best = trace[winner].q;

  // Flat-direction scan: a correlation length whose +-e^0.5 perturbation
  // (within the box) leaves q unchanged is not identified; report it at
  // the start value of the winning start.
  std::vector<bool> non_identified(d, false);
  for (Eigen::Index i : model.design.norm().dropped()) non_identified[i] = true;
  for (std::size_t k = 0; k < space.active_dims.size(); ++k) {
    bool flat = true;
    for (double delta : {0.5, -0.5}) {
      Eigen::VectorXd p = best_log;
      p(1 + k) = std::clamp(p(1 + k) + delta, space.lo(1 + k), space.hi(1 + k));
      const RemlObjectiveValue v =
          reml_objective_svd(model, detail::spec_from_log(model, space, p, fb));
      if (!v.valid || std::abs(v.q - q_best) > 1e-9 * (1.0 + std::abs(q_best))) {
        flat = false;
        break;
      }
    }
    if (flat) {
      const Eigen::Index dim_index = space.active_dims[k];
      non_identified[dim_index] = true;
      best.lengths(dim_index) = trace[winner].start(1 + dim_index);
    }
  }

  return RemlEstimate{std::move(best), q_best, total_starts, std::move(trace),
                      std::move(non_identified)};
}

}  // namespace gpcal

#endif
