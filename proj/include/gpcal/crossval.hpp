#ifndef GPCAL_CROSSVAL_HPP
#define GPCAL_CROSSVAL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gpcal/errors.hpp"
#include "gpcal/infer.hpp"
#include "gpcal/kernels.hpp"
#include "gpcal/model.hpp"
#include "gpcal/reml.hpp"

namespace gpcal {

struct FoldPartition {
  std::vector<int> assignments;  // per experiment, fold index in [0, K)
  int K = 0;
};

enum class CvMode { RefitPerFold, FixedHyperparameters };

inline const char* to_string(CvMode m) {
  return m == CvMode::RefitPerFold ? "refit" : "fixed";
}

inline CvMode cv_mode_from_string(std::string_view s) {
  if (s == "refit") return CvMode::RefitPerFold;
  if (s == "fixed") return CvMode::FixedHyperparameters;
  throw contract_error("unknown cv mode \"" + std::string(s) +
                       "\" (expected refit|fixed)");
}

enum class PartitionMethod { PrincipalSorted, Shuffled };

// K-fold partition of the design.  The default method sorts the points
// along the first principal direction of the normalized design and deals
// them round-robin, which spreads every fold over the experimental
// domain; the seed rotates the deal.  The alternative is a plain seeded
// shuffle.
inline FoldPartition partition(const Design& design, int k, std::uint64_t seed,
                               PartitionMethod method = PartitionMethod::PrincipalSorted) {
  const Eigen::Index n = design.n();
  if (k < 2 || k > n)
    throw contract_error("partition: need 2 <= K <= n, got K = " +
                         std::to_string(k) + ", n = " + std::to_string(n));

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index(0));

  FoldPartition part;
  part.K = k;
  part.assignments.assign(n, 0);

  if (method == PartitionMethod::Shuffled) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index i = 0; i < n; ++i)
      part.assignments[order[i]] = int(i % k);
    return part;
  }

  const Eigen::MatrixXd& z = design.normalized();
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::MatrixXd centered = z.rowwise() - mean;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered.transpose() *
                                                     centered);
  Eigen::VectorXd dir = eig.eigenvectors().col(design.dim() - 1);
  Eigen::Index imax = 0;
  dir.cwiseAbs().maxCoeff(&imax);
  if (dir(imax) < 0.0) dir = -dir;
  const Eigen::VectorXd score = centered * dir;

  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return score(a) < score(b);
  });
  const int rotation = int(seed % std::uint64_t(k));
  for (Eigen::Index i = 0; i < n; ++i)
    part.assignments[order[i]] = int((i + rotation) % k);
  return part;
}

// Everything run_cv needs except the covariance of the model error.
struct CvInputs {
  Design design;
  Eigen::VectorXd y;
  LinearModel lin;
  NoiseSpec noise;
  std::optional<Prior> prior;
};

struct CvPointRecord {
  Eigen::Index index = 0;   // row in the full design
  double y_obs = 0.0;
  double mean = 0.0;        // Gaussian process prediction
  // Posterior standard deviation of the predicted observation: the
  // prediction variance plus the measurement-error variance at this
  // point.  Held-out residuals contain measurement error, so this is the
  // scale the coverage criterion works on.
  double sd = 0.0;
  double baseline_mean = 0.0;  // calibrated computer model alone
  bool covered = false;     // |mean - y_obs| <= 1.64 sd
};

struct CvFoldResult {
  int fold = 0;
  double rmse = 0.0;
  double coverage = 0.0;
  CovarianceSpec spec;
  CalibrationResult calibration;
  std::vector<CvPointRecord> points;
};

struct CvReport {
  double rmse = 0.0;           // Gaussian process predictor
  double ic = 0.0;             // empirical 90% coverage
  double rmse_baseline = 0.0;  // calibrated computer model alone
  CvMode mode = CvMode::RefitPerFold;
  std::vector<CvFoldResult> per_fold;
};

namespace detail {

struct FoldModel {
  GpModel model;
  CovarianceSpec spec;
};

inline std::vector<Eigen::Index> fold_indices(const FoldPartition& part,
                                              int fold, bool complement) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < part.assignments.size(); ++i)
    if ((part.assignments[i] == fold) != complement) idx.push_back(i);
  return idx;
}

inline GpModel assemble_subset(const CvInputs& in,
                               const std::vector<Eigen::Index>& rows,
                               const CovarianceSpec& spec) {
  Eigen::MatrixXd pts(rows.size(), in.design.dim());
  Eigen::VectorXd y(rows.size());
  Eigen::MatrixXd h(rows.size(), in.lin.m());
  Eigen::VectorXd f_nom(rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    pts.row(a) = in.design.points().row(rows[a]);
    y(a) = in.y(rows[a]);
    h.row(a) = in.lin.H.row(rows[a]);
    f_nom(a) = in.lin.f_nom(rows[a]);
  }
  LinearModel lm;
  lm.H = std::move(h);
  lm.beta_nom = in.lin.beta_nom;
  lm.f_nom = std::move(f_nom);
  // The basis is not re-attached: held-out rows are predicted with their
  // precomputed derivative rows, so no spot-check against a possibly
  // expensive simulator is repeated per fold.
  Design d(std::move(pts), in.design.norm(), in.design.labels());
  return assemble(std::move(d), std::move(y), std::move(lm), spec, in.noise.subset(rows),
                  in.prior);
}

inline CovarianceSpec placeholder_spec(const CvInputs& in, KernelFamily family) {
  return CovarianceSpec(
      family, 1.0,
      Eigen::VectorXd::Constant(in.design.dim(), kMinCorrelationLength));
}

}  // namespace detail

inline void validate_cv_inputs(const CvInputs& in, const FoldPartition& part) {
  const Eigen::Index n = in.design.n();
  if (part.assignments.size() != static_cast<std::size_t>(n))
    throw contract_error("run_cv: partition size does not match design");
  if (part.K < 2) throw contract_error("run_cv: partition has fewer than 2 folds");
  std::vector<int> counts(part.K, 0);
  for (int a : part.assignments) {
    if (a < 0 || a >= part.K)
      throw contract_error("run_cv: fold index out of range");
    ++counts[a];
  }
  for (int f = 0; f < part.K; ++f)
    if (counts[f] == 0)
      throw contract_error("run_cv: fold " + std::to_string(f) + " is empty");
}

// K-fold cross validation of the full pipeline.  For each fold the model
// is assembled on the complement; hyper-parameters are re-estimated per
// fold (RefitPerFold) or shared (FixedHyperparameters, estimated once on
// all data unless fixed_spec is given); the held-out observations enter
// only their own residuals.  Alongside the Gaussian-process predictor the
// same loop scores the calibrated computer model alone.
inline CvReport run_cv(const CvInputs& in, KernelFamily kernel,
                       const FoldPartition& part, CvMode mode,
                       const OptimizerConfig& optimizer = {},
                       std::optional<CovarianceSpec> fixed_spec = std::nullopt) {
  validate_cv_inputs(in, part);
  const Eigen::Index n = in.design.n();

  std::optional<CovarianceSpec> shared_spec = fixed_spec;
  if (mode == CvMode::FixedHyperparameters && !shared_spec) {
    GpModel full = assemble(in.design, in.y, in.lin,
                            detail::placeholder_spec(in, kernel), in.noise,
                            in.prior);
    shared_spec = estimate_hyperparameters(full, optimizer).spec;
  }

  CvReport report;
  report.mode = mode;
  double sq_sum = 0.0, sq_sum_baseline = 0.0;
  Eigen::Index covered = 0;

  for (int fold = 0; fold < part.K; ++fold) {
    const auto train = detail::fold_indices(part, fold, true);
    const auto test = detail::fold_indices(part, fold, false);

    CovarianceSpec spec = shared_spec ? *shared_spec
                                      : detail::placeholder_spec(in, kernel);
    GpModel train_model = [&] {
      try {
        return detail::assemble_subset(in, train, spec);
      } catch (const contract_error& e) {
        throw contract_error("run_cv: fold " + std::to_string(fold) + ": " +
                             e.what());
      }
    }();
    if (train_model.n() <= train_model.rank)
      throw contract_error("run_cv: fold " + std::to_string(fold) +
                           " leaves too few training points (n = " +
                           std::to_string(train_model.n()) + ", rank(H) = " +
                           std::to_string(train_model.rank) + ")");

    if (mode == CvMode::RefitPerFold) {
      try {
        spec = estimate_hyperparameters(train_model, optimizer).spec;
      } catch (const numeric_error& e) {
        throw numeric_error("run_cv: fold " + std::to_string(fold) + ": " +
                            e.what());
      }
      train_model = with_covariance(train_model, spec);
    }

    const CalibrationResult calib = calibrate(train_model);

    CvFoldResult fr{fold, 0.0, 0.0, spec, calib, {}};
    double fold_sq = 0.0;
    Eigen::Index fold_covered = 0;
    for (Eigen::Index i : test) {
      const Prediction p =
          predict(train_model, calib, in.design.points().row(i).transpose(),
                  in.lin.H.row(i).transpose(), in.lin.f_nom(i));
      const double noise_var =
          in.noise.kind() == NoiseSpec::Kind::Homoscedastic
              ? in.noise.sigma_mes() * in.noise.sigma_mes()
              : in.noise.matrix()(i, i);
      CvPointRecord rec;
      rec.index = i;
      rec.y_obs = in.y(i);
      rec.mean = p.mean;
      rec.sd = std::sqrt(p.variance + noise_var);
      rec.baseline_mean = p.calibrated_model_term;
      rec.covered = std::abs(p.mean - in.y(i)) <= 1.64 * rec.sd;
      fr.points.push_back(rec);

      const double r = p.mean - in.y(i);
      const double rb = p.calibrated_model_term - in.y(i);
      fold_sq += r * r;
      sq_sum += r * r;
      sq_sum_baseline += rb * rb;
      if (rec.covered) {
        ++fold_covered;
        ++covered;
      }
    }
    fr.rmse = std::sqrt(fold_sq / double(test.size()));
    fr.coverage = double(fold_covered) / double(test.size());
    report.per_fold.push_back(std::move(fr));
  }

  report.rmse = std::sqrt(sq_sum / double(n));
  report.rmse_baseline = std::sqrt(sq_sum_baseline / double(n));
  report.ic = double(covered) / double(n);
  return report;
}

// RMSE of the calibrated computer model alone under the identical
// cross-validation loop (model-error inference switched off in the
// prediction, variance omitted).
inline double rmse_baseline_calibrated_model(
    const CvInputs& in, KernelFamily kernel, const FoldPartition& part,
    CvMode mode, const OptimizerConfig& optimizer = {},
    std::optional<CovarianceSpec> fixed_spec = std::nullopt) {
  return run_cv(in, kernel, part, mode, optimizer, std::move(fixed_spec))
      .rmse_baseline;
}

}  // namespace gpcal

#endif
