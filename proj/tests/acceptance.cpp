// Acceptance suite: runs the project's exit criteria end to end and
// prints one pass/fail line per criterion.  Run with no arguments for
// the full suite or with a single criterion number.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gpcal/gpcal.hpp"

using namespace gpcal;
namespace fs = std::filesystem;

namespace {

struct failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw failure(msg);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---------------------------------------------------------------------
// Criterion 1: parabola fidelity.

void criterion_parabola_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const ParabolaResult r = run_parabola(Regime::NoPrior, 201);

  for (Eigen::Index i = 0; i < r.model.n(); ++i) {
    const Prediction p = predict(
        r.model, r.calib, r.model.design.points().row(i).transpose());
    require(std::abs(p.mean - r.model.y(i)) <= 1e-8,
            "prediction misses observation " + std::to_string(i) + " by " +
                fmt(std::abs(p.mean - r.model.y(i))));
    require(p.sd() <= 1e-6,
            "predictive sd at observation " + std::to_string(i) + " is " +
                fmt(p.sd()));
  }

  double sq = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < r.grid.size(); ++i) {
    const double x = r.grid(i);
    if (x < 0.2 - 1e-12 || x > 0.8 + 1e-12) continue;
    const double err = r.preds[i].mean - x * x;
    sq += err * err;
    ++count;
  }
  const double rms = std::sqrt(sq / count);
  require(rms <= 0.01, "grid RMS error " + fmt(rms) + " exceeds 0.01");

  const Eigen::VectorXd resid = r.model.y_shifted - r.model.lin.H * r.calib.beta;
  require(resid.cwiseAbs().maxCoeff() > 1e-3,
          "calibrated line unexpectedly passes through the observations");

  const double dt = seconds_since(t0);
  require(dt < 1.0, "runtime " + fmt(dt) + " s exceeds 1 s");
}

// ---------------------------------------------------------------------
// Criterion 2: prior-limit equivalence.

void criterion_prior_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  GpModel flat = parabola_model(Regime::NoPrior);
  Eigen::VectorXd mean(2);
  mean << 0.2, 1.0;
  GpModel wide = assemble(flat.design, flat.y, flat.lin, flat.cov, flat.noise,
                          Prior(mean, 1e8 * Eigen::MatrixXd::Identity(2, 2)));
  const CalibrationResult cg = calibrate_gls(flat);
  const CalibrationResult cb = calibrate_bayes(wide);

  const auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-4 * std::max(std::abs(a), std::abs(b)) + 1e-12;
  };
  for (Eigen::Index j = 0; j < 2; ++j)
    require(close(cb.beta(j), cg.beta(j)), "posterior mean component " +
                                               std::to_string(j) + " differs");
  for (Eigen::Index a = 0; a < 2; ++a)
    for (Eigen::Index b = 0; b < 2; ++b)
      require(close(cb.covariance(a, b), cg.covariance(a, b)),
              "posterior covariance differs");

  for (int i = 0; i < 201; ++i) {
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, i / 200.0);
    const Prediction pg = predict(flat, cg, x);
    const Prediction pb = predict(wide, cb, x);
    require(close(pb.mean, pg.mean),
            "prediction mean differs at x = " + fmt(x(0)));
    require(close(pb.variance, pg.variance),
            "prediction variance differs at x = " + fmt(x(0)));
  }
  const double dt = seconds_since(t0);
  require(dt < 1.0, "runtime " + fmt(dt) + " s exceeds 1 s");
}

// ---------------------------------------------------------------------
// Shared instance for criteria 3 and 5.

GpModel reml_instance() {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 8;
  Eigen::MatrixXd pts(n, 1);
  for (int i = 0; i < n; ++i) pts(i, 0) = u(rng);
  Design design(pts, Normalization::unit(1));
  Eigen::MatrixXd h(n, 2);
  h.col(0).setOnes();
  h.col(1) = pts.col(0);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = 1.0 + 0.7 * pts(i, 0) + 0.5 * (u(rng) - 0.5);
  return assemble(design, y, LinearModel::from_matrix(h),
                  CovarianceSpec(KernelFamily::Matern32, 1.0,
                                 Eigen::VectorXd::Constant(1, 0.3)),
                  NoiseSpec::homoscedastic(0.05));
}

Eigen::MatrixXd null_space_contrasts(const Eigen::MatrixXd& h) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeFullU);
  const Eigen::Index r = rank_from_singular_values(svd.singularValues());
  return svd.matrixU().rightCols(h.rows() - r).transpose();
}

// Criterion 3: the SVD and contrast objectives differ by a constant.

void criterion_form_equivalence() {
  GpModel model = reml_instance();
  const Eigen::MatrixXd w0 = null_space_contrasts(model.lin.H);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Eigen::MatrixXd mix = Eigen::MatrixXd::Identity(w0.rows(), w0.rows());
  for (Eigen::Index i = 0; i < mix.rows(); ++i)
    for (Eigen::Index j = 0; j < mix.cols(); ++j) mix(i, j) += 0.5 * u(rng);
  const Eigen::MatrixXd w1 = mix * w0;

  for (const Eigen::MatrixXd& w : {w0, w1}) {
    double lo = 1e300, hi = -1e300;
    for (double s2 : {0.2, 0.5, 1.0, 2.0, 5.0}) {
      for (double l : {0.05, 0.15, 0.35, 0.8, 1.6}) {
        const CovarianceSpec spec(KernelFamily::Matern32, s2,
                                  Eigen::VectorXd::Constant(1, l));
        const RemlObjectiveValue a = reml_objective_svd(model, spec);
        const RemlObjectiveValue b = reml_objective_contrast(model, spec, w);
        require(a.valid && b.valid, "objective invalid on the grid");
        lo = std::min(lo, a.q - b.q);
        hi = std::max(hi, a.q - b.q);
      }
    }
    require(hi - lo <= 1e-8,
            "difference is not constant: spread " + fmt(hi - lo));
  }
}

// Criterion 4: closed-form REML oracle.

void criterion_closed_form_oracle() {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 1.0;
  Design design(pts, Normalization::unit(1));
  Eigen::VectorXd y(2);
  y << 1.0, 3.0;
  GpModel model = assemble(
      design, y, LinearModel::from_matrix(Eigen::MatrixXd::Ones(2, 1)),
      CovarianceSpec(KernelFamily::Gaussian, 1.0,
                     Eigen::VectorXd::Constant(1, kMinCorrelationLength)),
      NoiseSpec::homoscedastic(0.0));
  const RemlEstimate est = estimate_hyperparameters(model);
  require(std::abs(est.spec.sigma2 - 2.0) <= 1e-3,
          "sigma2 estimate " + fmt(est.spec.sigma2) + " is not 2 +- 1e-3");
}

// Criterion 5: the objective ignores the trend component.

void criterion_beta_invariance() {
  GpModel model = reml_instance();
  const CovarianceSpec spec(KernelFamily::Matern32, 0.7,
                            Eigen::VectorXd::Constant(1, 0.25));
  const double q0 = reml_objective_svd(model, spec).q;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd b(2);
    b << u(rng), u(rng);
    GpModel shifted = assemble(model.design, model.y + model.lin.H * b,
                               model.lin, model.cov, model.noise);
    const double q = reml_objective_svd(shifted, spec).q;
    require(std::abs(q - q0) <= 1e-8,
            "objective moved by " + fmt(std::abs(q - q0)));
  }
}

// ---------------------------------------------------------------------
// Criterion 6: dense-inverse oracle on small instances.

void criterion_dense_oracle() {
  std::mt19937_64 rng(90210);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 1 + int(rng() % 2);
    const int n = m + 2 + int(rng() % int(4 - m));
    const int d = 1 + int(rng() % 2);
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) pts(i, j) = u(rng);
    Design design(pts, Normalization::unit(d));
    Eigen::MatrixXd h(n, m);
    h.col(0).setOnes();
    if (m > 1) h.col(1) = pts.col(0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = 2.0 * u(rng) - 1.0;
    const bool with_prior = rep % 2 == 1;
    std::optional<Prior> prior;
    if (with_prior) {
      Eigen::MatrixXd a(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = u(rng) - 0.5;
      prior = Prior(Eigen::VectorXd::Constant(m, 0.2),
                    Eigen::MatrixXd(a.transpose() * a +
                                    0.2 * Eigen::MatrixXd::Identity(m, m)));
    }
    GpModel model = assemble(
        design, y, LinearModel::from_matrix(h),
        CovarianceSpec(kAllKernels[rng() % 4], 0.3 + u(rng),
                       Eigen::VectorXd::Constant(d, 0.2 + 0.5 * u(rng))),
        NoiseSpec::homoscedastic(0.05 + 0.1 * u(rng)), std::move(prior));

    Eigen::VectorXd xnew(d);
    for (int j = 0; j < d; ++j) xnew(j) = u(rng);
    Eigen::VectorXd h_new(m);
    h_new(0) = 1.0;
    if (m > 1) h_new(1) = xnew(0);

    // Dense route with explicit inverses.
    const Eigen::MatrixXd r_inv = model.R.inverse();
    const Eigen::MatrixXd info = h.transpose() * r_inv * h;
    Eigen::VectorXd beta_ref;
    Eigen::MatrixXd cov_ref;
    if (with_prior) {
      const Eigen::MatrixXd q_inv = model.prior->covariance.inverse();
      cov_ref = (q_inv + info).inverse();
      const Eigen::VectorXd bp = model.prior->mean;
      beta_ref = bp + cov_ref * (h.transpose() * (r_inv * (y - h * bp)));
    } else {
      cov_ref = info.inverse();
      beta_ref = cov_ref * (h.transpose() * (r_inv * y));
    }
    const Eigen::VectorXd rv = covariance_vector(model.cov, model.design, xnew);
    const double mean_ref =
        h_new.dot(beta_ref) + rv.dot(r_inv * (y - h * beta_ref));
    const Eigen::VectorXd dvec = h_new - h.transpose() * (r_inv * rv);
    const double var_ref =
        model.cov.sigma2 - rv.dot(r_inv * rv) + dvec.dot(cov_ref * dvec);

    const CalibrationResult c = calibrate(model);
    const Prediction p = predict(model, c, xnew, h_new);
    const auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
    };
    for (int j = 0; j < m; ++j)
      require(close(c.beta(j), beta_ref(j)),
              "beta mismatch at rep " + std::to_string(rep));
    require((c.covariance - cov_ref).cwiseAbs().maxCoeff() <=
                1e-9 * (1.0 + cov_ref.cwiseAbs().maxCoeff()),
            "covariance mismatch at rep " + std::to_string(rep));
    require(close(p.mean, mean_ref), "mean mismatch at rep " + std::to_string(rep));
    require(close(p.variance, var_ref),
            "variance mismatch at rep " + std::to_string(rep));
  }
}

// ---------------------------------------------------------------------
// Criterion 7: cross-validation no-leakage.

void criterion_no_leakage() {
  const int n = 30;
  Eigen::MatrixXd pts(n, 1);
  for (int i = 0; i < n; ++i) pts(i, 0) = double(i) / double(n - 1);
  Design design(pts, Normalization::unit(1));
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double x = pts(i, 0);
    y(i) = 1.0 + 0.5 * x + 0.3 * std::sin(6.0 * x);
  }
  Eigen::MatrixXd h(n, 2);
  h.col(0).setOnes();
  h.col(1) = pts.col(0);
  CvInputs inputs{design, y, LinearModel::from_matrix(h),
                  NoiseSpec::homoscedastic(0.05), std::nullopt};
  const FoldPartition folds = partition(design, 5, 3);
  OptimizerConfig cfg;
  cfg.n_starts = 3;
  cfg.max_iters = 150;

  const CvReport before =
      run_cv(inputs, KernelFamily::Matern32, folds, CvMode::RefitPerFold, cfg);
  const Eigen::Index target = 11;
  CvInputs perturbed = inputs;
  perturbed.y(target) += 500.0;
  const CvReport after =
      run_cv(perturbed, KernelFamily::Matern32, folds, CvMode::RefitPerFold, cfg);

  const int f = folds.assignments[target];
  require(after.per_fold[f].spec.sigma2 == before.per_fold[f].spec.sigma2 &&
              after.per_fold[f].spec.lengths == before.per_fold[f].spec.lengths,
          "hyper-parameters of the held-out fold changed");
  require(after.per_fold[f].calibration.beta == before.per_fold[f].calibration.beta,
          "calibration of the held-out fold changed");
  require(after.per_fold[f].calibration.covariance ==
              before.per_fold[f].calibration.covariance,
          "calibration covariance of the held-out fold changed");
}

// ---------------------------------------------------------------------
// Criteria 8 and 10 share the synthetic friction dataset.

void criterion_friction_improvement() {
  const auto t0 = std::chrono::steady_clock::now();
  FrictionDemoConfig cfg;  // seed 0, 60 + 60 experiments
  const FrictionData data = generate_friction_data(cfg);
  const FoldPartition folds = partition(data.design, 10, cfg.seed);
  CvInputs inputs{data.design, data.y, data.lin, data.noise, data.prior};
  const CvReport report = run_cv(inputs, KernelFamily::Matern32, folds,
                                 CvMode::RefitPerFold, cfg.optimizer);
  require(report.rmse <= 0.5 * report.rmse_baseline,
          "rmse " + fmt(report.rmse) + " is not half of baseline " +
              fmt(report.rmse_baseline));
  const double dt = seconds_since(t0);
  require(dt < 120.0, "runtime " + fmt(dt) + " s exceeds 2 min");
}

// Criterion 9: interval coverage on well-specified synthetic data.

void criterion_ic_plausibility() {
  for (KernelFamily family : kAllKernels) {
    const int n = 100;
    std::mt19937_64 rng(1000 + static_cast<unsigned>(family));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd pts(n, 2);
    for (int i = 0; i < n; ++i) {
      pts(i, 0) = u(rng);
      pts(i, 1) = u(rng);
    }
    Design design(pts, Normalization::unit(2));
    const CovarianceSpec truth(family, 0.5,
                               (Eigen::VectorXd(2) << 0.3, 0.4).finished());
    const double noise_sd = 0.1;
    const CholeskyFactor chol =
        cholesky_with_jitter(covariance_matrix(truth, design));
    Eigen::VectorXd normals(n);
    for (int i = 0; i < n; ++i) normals(i) = gauss(rng);
    Eigen::VectorXd y = chol.L * normals;
    Eigen::MatrixXd h(n, 2);
    h.col(0).setOnes();
    h.col(1) = pts.col(0);
    for (int i = 0; i < n; ++i)
      y(i) += 1.0 + 2.0 * pts(i, 0) + noise_sd * gauss(rng);

    CvInputs inputs{design, y, LinearModel::from_matrix(h),
                    NoiseSpec::homoscedastic(noise_sd), std::nullopt};
    const FoldPartition folds = partition(design, 10, 1);
    const CvReport report = run_cv(inputs, family, folds,
                                   CvMode::FixedHyperparameters, {}, truth);
    require(report.ic >= 0.80 && report.ic <= 0.98,
            std::string(to_string(family)) + ": IC " + fmt(report.ic) +
                " outside [0.80, 0.98]");
  }
}

// Criterion 10: kernel choice barely moves the friction CV error.

void criterion_kernel_insensitivity() {
  FrictionDemoConfig cfg;
  const FrictionResult result = run_friction(cfg);
  double lo = 1e300, hi = 0.0;
  std::string detail;
  for (const auto& row : result.kernels) {
    lo = std::min(lo, row.report.rmse);
    hi = std::max(hi, row.report.rmse);
    detail += std::string(" ") + to_string(row.kernel) + "=" + fmt(row.report.rmse);
  }
  require(hi / lo <= 1.25,
          "rmse ratio " + fmt(hi / lo) + " exceeds 1.25:" + detail);
}

// ---------------------------------------------------------------------
// Criterion 11: byte-identical outputs for every subcommand.

#ifndef GPCAL_CLI_PATH
#define GPCAL_CLI_PATH "gpcal"
#endif

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + GPCAL_CLI_PATH + "\" " + args + " > /dev/null";
  return std::system(cmd.c_str());
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[entry.path().filename().string()] = ss.str();
  }
  return out;
}

void compare_runs(const std::string& what, const std::string& args,
                  const fs::path& base) {
  const fs::path d1 = base / (what + "_1");
  const fs::path d2 = base / (what + "_2");
  for (const fs::path& d : {d1, d2}) {
    fs::create_directories(d);
    const int rc = run_cli(args + " --out \"" + d.string() + "\"");
    require(rc == 0, what + ": CLI exited with status " + std::to_string(rc));
  }
  const auto a = read_dir(d1);
  const auto b = read_dir(d2);
  require(!a.empty(), what + ": no output files were produced");
  require(a.size() == b.size(), what + ": file sets differ");
  for (const auto& [name, content] : a) {
    const auto it = b.find(name);
    require(it != b.end(), what + ": missing file " + name);
    require(it->second == content, what + ": " + name + " differs between runs");
  }
}

void criterion_determinism() {
  const fs::path base =
      fs::temp_directory_path() /
      ("gpcal_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(base);

  compare_runs("demo_parabola", "demo-parabola --regime prior --grid 51", base);
  compare_runs("demo_friction",
               "demo-friction --seed 3 --n-iso 18 --n-heated 18 --folds 5",
               base);

  // The friction dataset feeds the generic subcommands.
  const fs::path data = base / "demo_friction_1" / "friction_data.tsv";
  require(fs::exists(data), "friction dataset missing");
  const fs::path config = base / "config.json";
  {
    std::ofstream out(config);
    out << R"({
  "kernel": "matern32",
  "noise": {"sigma_mes": 150.0},
  "prior": {"mean": [0.0, 0.0], "sd": [0.11, 0.105]},
  "optimizer": {"n_starts": 3, "max_iters": 150, "seed": 5},
  "cv": {"folds": 5, "seed": 2, "mode": "refit"},
  "io": {"data": ")" << data.string() << R"(", "points": ")" << data.string()
        << R"("},
  "schema": {"conditions": ["G_i", "phi_w", "h_il", "P_o", "H_f", "D_h"],
             "output": "dp_shift", "h_columns": ["h_at", "h_bt"]}
})";
  }
  const std::string common = "--config \"" + config.string() + "\"";
  compare_runs("fit", "fit " + common, base);
  compare_runs("calibrate", "calibrate " + common, base);
  compare_runs("predict", "predict " + common, base);
  compare_runs("cv", "cv " + common, base);

  std::error_code ec;
  fs::remove_all(base, ec);
}

struct Criterion {
  int id;
  const char* name;
  std::function<void()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "parabola fidelity", criterion_parabola_fidelity},
      {2, "prior-limit equivalence", criterion_prior_limit},
      {3, "REML form equivalence", criterion_form_equivalence},
      {4, "REML closed-form oracle", criterion_closed_form_oracle},
      {5, "beta-invariance of REML", criterion_beta_invariance},
      {6, "small-instance dense oracle", criterion_dense_oracle},
      {7, "cross-validation no-leakage", criterion_no_leakage},
      {8, "synthetic friction improvement", criterion_friction_improvement},
      {9, "interval-coverage plausibility", criterion_ic_plausibility},
      {10, "kernel insensitivity", criterion_kernel_insensitivity},
      {11, "subcommand determinism", criterion_determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const Criterion& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run();
      std::printf("[PASS] criterion %2d: %s (%.2f s)\n", c.id, c.name,
                  seconds_since(t0));
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] criterion %2d: %s: %s\n", c.id, c.name, e.what());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
