#ifndef GPCAL_DEMO_PARABOLA_HPP
#define GPCAL_DEMO_PARABOLA_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <utility>
#include <vector>

#include "gpcal/dataset.hpp"
#include "gpcal/infer.hpp"
#include "gpcal/model.hpp"
#include "gpcal/report.hpp"

namespace gpcal {

// Analytic demonstration problem: the physical system is x -> x^2 on
// [0, 1], the computer model the line beta0 + beta1 x, observed without
// noise at 0.2, 0.5 and 0.8.  The model-error covariance is fixed
// (Gaussian, sigma = 0.3, correlation length 0.5) rather than estimated.
struct ParabolaResult {
  GpModel model;
  CalibrationResult calib;
  Eigen::VectorXd grid;             // grid over [0, 1]
  std::vector<Prediction> preds;    // one per grid point
};

inline GpModel parabola_model(Regime regime) {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.2, 0.5, 0.8;
  Design design(pts, Normalization::unit(1), {"x"});
  Eigen::VectorXd y = pts.col(0).array().square();
  LinearModel lin = LinearModel::from_basis(
      [](const Eigen::VectorXd& x) {
        Eigen::VectorXd h(2);
        h << 1.0, x(0);
        return h;
      },
      design);
  CovarianceSpec cov(KernelFamily::Gaussian, 0.09,
                     Eigen::VectorXd::Constant(1, 0.5));
  std::optional<Prior> prior;
  if (regime == Regime::Prior) {
    Eigen::VectorXd mean(2);
    mean << 0.2, 1.0;
    prior = Prior(mean, 0.09 * Eigen::MatrixXd::Identity(2, 2));
  }
  return assemble(std::move(design), std::move(y), std::move(lin),
                  std::move(cov), NoiseSpec::homoscedastic(0.0),
                  std::move(prior));
}

inline ParabolaResult run_parabola(Regime regime, int grid_size = 201) {
  if (grid_size < 2)
    throw contract_error("run_parabola: grid_size must be at least 2");
  GpModel model = parabola_model(regime);
  CalibrationResult calib = calibrate(model);

  ParabolaResult result{std::move(model), std::move(calib),
                        Eigen::VectorXd::LinSpaced(grid_size, 0.0, 1.0),
                        {}};
  result.preds.reserve(grid_size);
  for (Eigen::Index i = 0; i < result.grid.size(); ++i) {
    Eigen::VectorXd x(1);
    x << result.grid(i);
    result.preds.push_back(predict(result.model, result.calib, x));
  }
  return result;
}

inline void write_parabola_report(const ParabolaResult& r,
                                  const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  write_json(outdir / "parabola_calibration.json",
             json{{"regime", to_string(r.calib.regime)},
                  {"calibration", to_json(r.calib)},
                  {"covariance", to_json(r.model.cov)}});

  Eigen::MatrixXd table(r.grid.size(), 7);
  for (Eigen::Index i = 0; i < r.grid.size(); ++i) {
    const double x = r.grid(i);
    const Prediction& p = r.preds[i];
    const auto [lo, hi] = confidence_interval(p, Level::P95);
    table(i, 0) = x;
    table(i, 1) = x * x;
    table(i, 2) = r.calib.beta(0) + r.calib.beta(1) * x;
    table(i, 3) = p.mean;
    table(i, 4) = p.sd();
    table(i, 5) = lo;
    table(i, 6) = hi;
  }
  save_table(outdir / "parabola_grid.tsv",
             {"x", "truth", "calibrated_line", "mean", "sd", "lo95", "hi95"},
             table);
}

}  // namespace gpcal

#endif
