// Command-line front end: hyper-parameter estimation, calibration,
// prediction and cross validation on delimiter-separated datasets, plus
// the two built-in demonstration problems.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gpcal/gpcal.hpp"

namespace fs = std::filesystem;
using namespace gpcal;

namespace {

// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
// failure.
constexpr int kUsageError = 2;
constexpr int kDataError = 3;
constexpr int kNumericError = 4;

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string points_path;
  std::string out_dir;
  std::string kernel;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  std::string mode;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool with_cv_flags) {
  cmd->add_option("--config", args.config_path, "JSON configuration file")
      ->required();
  cmd->add_option("--data", args.data_path, "training data file (overrides io.data)");
  cmd->add_option("--out", args.out_dir, "output directory (overrides io.out)");
  cmd->add_option("--seed", args.seed, "seed override for optimizer and CV");
  cmd->add_option("--kernel", args.kernel,
                  "kernel override: exponential|matern32|matern52|gaussian");
  if (with_cv_flags) {
    cmd->add_option("--folds", args.folds, "fold count override");
    cmd->add_option("--mode", args.mode, "cv mode override: refit|fixed");
  }
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path);
  if (!args.data_path.empty()) cfg.io.data = args.data_path;
  if (!args.points_path.empty()) cfg.io.points = args.points_path;
  if (!args.out_dir.empty()) cfg.io.out = args.out_dir;
  if (!args.kernel.empty()) {
    cfg.kernel = kernel_from_string(args.kernel);
    if (cfg.covariance)
      cfg.covariance = CovarianceSpec(cfg.kernel, cfg.covariance->sigma2,
                                      cfg.covariance->lengths);
  }
  if (args.seed) {
    cfg.optimizer.seed = *args.seed;
    if (cfg.cv) cfg.cv->seed = *args.seed;
  }
  if (args.folds) {
    if (!cfg.cv) cfg.cv = CvConfigEntry{};
    cfg.cv->folds = *args.folds;
  }
  if (!args.mode.empty()) {
    if (!cfg.cv) cfg.cv = CvConfigEntry{};
    cfg.cv->mode = cv_mode_from_string(args.mode);
  }
  if (cfg.io.data.empty())
    throw contract_error("no data file: set io.data in the config or pass --data");
  if (cfg.io.out.empty())
    throw contract_error("no output directory: set io.out in the config or pass --out");
  return cfg;
}

struct LoadedProblem {
  Dataset dataset;
  Design design;
  Eigen::VectorXd y;
  LinearModel lin;
};

LoadedProblem load_problem(const RunConfig& cfg) {
  if (cfg.schema.conditions.empty() || cfg.schema.output.empty())
    throw contract_error("config: schema.conditions and schema.output are required");
  if (cfg.schema.h_columns.empty())
    throw contract_error(
        "config: schema.h_columns is required (the data file must carry the "
        "model-derivative columns)");
  Dataset ds = load_dataset(cfg.io.data, cfg.schema);
  Design design(ds.conditions, cfg.schema.conditions);
  for (const auto& w : design.warnings())
    std::cerr << "warning: " << w << "\n";
  LinearModel lin = LinearModel::from_matrix(ds.h);
  Eigen::VectorXd y = ds.y;
  return LoadedProblem{std::move(ds), std::move(design), std::move(y),
                       std::move(lin)};
}

CovarianceSpec spec_for_inference(const RunConfig& cfg, const GpModel& model) {
  if (cfg.covariance) {
    if (cfg.covariance->dim() != model.design.dim())
      throw contract_error("config: covariance.lengths dimension must match the "
                           "condition columns");
    return *cfg.covariance;
  }
  return estimate_hyperparameters(model, cfg.optimizer).spec;
}

GpModel assemble_from(const RunConfig& cfg, const LoadedProblem& p) {
  const Eigen::Index d = p.design.dim();
  CovarianceSpec start(cfg.kernel, 1.0,
                       Eigen::VectorXd::Constant(d, kMinCorrelationLength));
  GpModel model = assemble(p.design, p.y, p.lin,
                           cfg.covariance ? *cfg.covariance : start, cfg.noise,
                           cfg.prior);
  if (!cfg.covariance)
    model = with_covariance(model, spec_for_inference(cfg, model));
  return model;
}

int cmd_fit(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  LoadedProblem p = load_problem(cfg);
  CovarianceSpec start(cfg.kernel, 1.0,
                       Eigen::VectorXd::Constant(p.design.dim(),
                                                 kMinCorrelationLength));
  GpModel model = assemble(p.design, p.y, p.lin, start, cfg.noise, cfg.prior);
  RemlEstimate est = estimate_hyperparameters(model, cfg.optimizer);
  fs::create_directories(cfg.io.out);
  write_json(fs::path(cfg.io.out) / "fit.json", to_json(est));
  std::cout << "fit: kernel=" << to_string(est.spec.family)
            << " sigma2=" << est.spec.sigma2 << " q=" << est.q_min << "\n";
  return 0;
}

int cmd_calibrate(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  LoadedProblem p = load_problem(cfg);
  GpModel model = assemble_from(cfg, p);
  CalibrationResult calib = calibrate(model);
  fs::create_directories(cfg.io.out);
  write_json(fs::path(cfg.io.out) / "calibration.json",
             json{{"calibration", to_json(calib)},
                  {"covariance", to_json(model.cov)}});
  std::cout << "calibrate: regime=" << to_string(calib.regime) << " beta=[";
  for (Eigen::Index i = 0; i < calib.beta.size(); ++i)
    std::cout << (i ? ", " : "") << calib.beta(i);
  std::cout << "]\n";
  return 0;
}

int cmd_predict(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  if (cfg.io.points.empty())
    throw contract_error("predict: no new-point file (set io.points or --points)");
  LoadedProblem p = load_problem(cfg);
  GpModel model = assemble_from(cfg, p);
  CalibrationResult calib = calibrate(model);

  // New points reuse the condition/h columns of the schema; the output
  // column is not required to be present.
  DataSchema new_schema = cfg.schema;
  new_schema.output = cfg.schema.conditions.front();
  Dataset pts = load_dataset(cfg.io.points, new_schema);

  Eigen::MatrixXd table(pts.n(), pts.d() + 9);
  for (Eigen::Index i = 0; i < pts.n(); ++i) {
    const Prediction pred =
        predict(model, calib, pts.conditions.row(i).transpose(),
                pts.h.row(i).transpose());
    const auto [lo90, hi90] = confidence_interval(pred, Level::P90);
    const auto [lo95, hi95] = confidence_interval(pred, Level::P95);
    table.row(i).head(pts.d()) = pts.conditions.row(i);
    Eigen::Index c = pts.d();
    table(i, c++) = pred.mean;
    table(i, c++) = pred.variance;
    table(i, c++) = pred.sd();
    table(i, c++) = pred.calibrated_model_term;
    table(i, c++) = pred.inferred_model_error_term;
    table(i, c++) = lo90;
    table(i, c++) = hi90;
    table(i, c++) = lo95;
    table(i, c++) = hi95;
  }
  std::vector<std::string> cols = cfg.schema.conditions;
  for (const char* name : {"mean", "variance", "sd", "calibrated_model",
                           "inferred_model_error", "lo90", "hi90", "lo95",
                           "hi95"})
    cols.push_back(name);
  fs::create_directories(cfg.io.out);
  save_table(fs::path(cfg.io.out) / "predictions.tsv", cols, table);
  std::cout << "predict: " << pts.n() << " points written\n";
  return 0;
}

int cmd_cv(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  if (!cfg.cv) throw contract_error("cv: config has no cv section and no --folds");
  LoadedProblem p = load_problem(cfg);
  if (cfg.cv->folds > p.design.n())
    throw contract_error("cv: K = " + std::to_string(cfg.cv->folds) +
                         " exceeds the number of experiments " +
                         std::to_string(p.design.n()));
  CvInputs inputs{p.design, p.y, p.lin, cfg.noise, cfg.prior};
  FoldPartition folds = partition(p.design, cfg.cv->folds, cfg.cv->seed);
  CvReport report = run_cv(inputs, cfg.kernel, folds, cfg.cv->mode,
                           cfg.optimizer, cfg.covariance);

  fs::create_directories(cfg.io.out);
  write_json(fs::path(cfg.io.out) / "cv.json",
             json{{"kernel", to_string(cfg.kernel)}, {"report", to_json(report)}});

  std::vector<CvPointRecord> recs;
  for (const auto& fr : report.per_fold)
    recs.insert(recs.end(), fr.points.begin(), fr.points.end());
  std::sort(recs.begin(), recs.end(),
            [](const CvPointRecord& a, const CvPointRecord& b) {
              return a.index < b.index;
            });
  Eigen::MatrixXd table(recs.size(), 9);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    table(ii, 0) = double(rec.index);
    table(ii, 1) = double(folds.assignments[rec.index]);
    table(ii, 2) = rec.y_obs;
    table(ii, 3) = rec.mean;
    table(ii, 4) = rec.sd;
    table(ii, 5) = rec.mean - 1.64 * rec.sd;
    table(ii, 6) = rec.mean + 1.64 * rec.sd;
    table(ii, 7) = rec.baseline_mean;
    table(ii, 8) = rec.covered ? 1.0 : 0.0;
  }
  save_table(fs::path(cfg.io.out) / "cv_points.tsv",
             {"index", "fold", "y_obs", "mean", "sd", "lo90", "hi90",
              "baseline_mean", "covered"},
             table);
  std::cout << "cv: rmse=" << report.rmse << " ic=" << report.ic
            << " baseline=" << report.rmse_baseline << "\n";
  return 0;
}

int cmd_demo_parabola(const std::string& regime_name, int grid_size,
                      const std::string& out_dir) {
  const Regime regime =
      regime_name == "prior" ? Regime::Prior : Regime::NoPrior;
  if (regime_name != "prior" && regime_name != "noprior")
    throw contract_error("demo-parabola: --regime must be noprior or prior");
  ParabolaResult r = run_parabola(regime, grid_size);
  write_parabola_report(r, out_dir);
  std::cout << "demo-parabola: regime=" << regime_name
            << " beta=[" << r.calib.beta(0) << ", " << r.calib.beta(1)
            << "]\n";
  return 0;
}

int cmd_demo_friction(std::uint64_t seed, int n_iso, int n_heated, int folds,
                      const std::string& mode, const std::string& out_dir) {
  FrictionDemoConfig cfg;
  cfg.seed = seed;
  cfg.n_iso = n_iso;
  cfg.n_heated = n_heated;
  cfg.folds = folds;
  cfg.mode = cv_mode_from_string(mode);
  cfg.optimizer.seed = seed;
  FrictionResult r = run_friction(cfg);
  write_friction_report(r, out_dir);
  for (const auto& row : r.kernels)
    std::cout << "demo-friction: " << to_string(row.kernel)
              << " rmse=" << row.report.rmse << " ic=" << row.report.ic
              << " baseline=" << row.report.rmse_baseline << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal-Kriging calibration and model-error-aware prediction"};
  app.require_subcommand(1);

  CommonArgs fit_args, cal_args, pred_args, cv_args;
  auto* fit = app.add_subcommand("fit", "estimate covariance hyper-parameters");
  add_common_flags(fit, fit_args, false);
  auto* cal = app.add_subcommand("calibrate", "calibrate the model parameters");
  add_common_flags(cal, cal_args, false);
  auto* pred = app.add_subcommand("predict", "predict at new points");
  add_common_flags(pred, pred_args, false);
  pred->add_option("--points", pred_args.points_path,
                   "new-point file (overrides io.points)");
  auto* cv = app.add_subcommand("cv", "k-fold cross validation");
  add_common_flags(cv, cv_args, true);

  std::string par_regime = "noprior", par_out = "out";
  int par_grid = 201;
  auto* par = app.add_subcommand("demo-parabola",
                                 "analytic parabola-vs-line demonstration");
  par->add_option("--regime", par_regime, "noprior|prior");
  par->add_option("--grid", par_grid, "grid size over [0,1]");
  par->add_option("--out", par_out, "output directory");

  std::uint64_t fr_seed = 0;
  int fr_iso = 60, fr_heated = 60, fr_folds = 10;
  std::string fr_mode = "refit", fr_out = "out";
  auto* fr = app.add_subcommand("demo-friction",
                                "synthetic friction-model demonstration");
  fr->add_option("--seed", fr_seed, "generator and optimizer seed");
  fr->add_option("--n-iso", fr_iso, "number of isothermal experiments");
  fr->add_option("--n-heated", fr_heated, "number of heated experiments");
  fr->add_option("--folds", fr_folds, "cross-validation fold count");
  fr->add_option("--mode", fr_mode, "cv mode: refit|fixed");
  fr->add_option("--out", fr_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_args);
    if (cal->parsed()) return cmd_calibrate(cal_args);
    if (pred->parsed()) return cmd_predict(pred_args);
    if (cv->parsed()) return cmd_cv(cv_args);
    if (par->parsed()) return cmd_demo_parabola(par_regime, par_grid, par_out);
    if (fr->parsed())
      return cmd_demo_friction(fr_seed, fr_iso, fr_heated, fr_folds, fr_mode,
                               fr_out);
  } catch (const contract_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericError;
  }
  return kUsageError;
}
