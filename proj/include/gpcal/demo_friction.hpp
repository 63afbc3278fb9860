#ifndef GPCAL_DEMO_FRICTION_HPP
#define GPCAL_DEMO_FRICTION_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <utility>
#include <vector>

#include "gpcal/crossval.hpp"
#include "gpcal/dataset.hpp"
#include "gpcal/infer.hpp"
#include "gpcal/model.hpp"
#include "gpcal/reml.hpp"
#include "gpcal/report.hpp"

namespace gpcal {

// Synthetic single-phase friction pressure-drop problem.  The simulator
// follows the classical structure dP = H_f / (2 rho D_h) * G^2 * f_iso * f_h
// with a piecewise laminar/turbulent isothermal friction coefficient and a
// multiplicative heating correction.  Water-property closures are crude
// stand-ins; the point is a plausible nonlinear simulator, not physics.
//
// Experimental condition layout:
//   x = (G_i, phi_w, h_il, P_o, H_f, D_h)
// with flowrate G_i [kg/m^2/s], wall heat flux phi_w [kW/m^2], inlet
// liquid enthalpy h_il [kJ/kg], outlet pressure P_o [bar], friction
// height H_f [m] and hydraulic diameter D_h [m].  (H_f, D_h) are control
// variables, constant within a campaign.
struct FrictionConstants {
  double re_laminar = 2000.0;   // upper bound of the laminar regime
  double re_turbulent = 4000.0; // lower bound of the turbulent regime
  double a_l = 64.0;            // laminar coefficient, fixed at nominal
  double c_f = 8e-4;            // heating-correction parameters, fixed
  double n_exp = 1.5;
  double d_coef = 0.5;
  double t0 = 100.0;            // normalization temperature [C]
  double ph_over_pw = 0.85;     // heated/wetted perimeter ratio
  double r_thermal = 0.05;      // wall superheat per unit heat flux [K m^2/kW]
  double cp = 4.18;             // liquid heat capacity [kJ/kg/K]
};

inline double friction_bulk_temperature(double h_il, const FrictionConstants& c) {
  return h_il / c.cp;
}

inline double friction_viscosity(double t_bulk) {
  return 1.0e-3 * std::exp(-t_bulk / 80.0) + 8.0e-5;
}

inline double friction_density(double t_bulk, double p_o) {
  return 1000.0 * (1.0 - 1.2e-3 * (t_bulk - 20.0)) + 0.05 * (p_o - 10.0);
}

inline double friction_reynolds(double g, double d_h, double mu) {
  return g * d_h / mu;
}

// Piecewise isothermal friction coefficient: a_l/Re below the laminar
// bound, a_t/Re^b_t above the turbulent bound, linear blend between.
inline double friction_isothermal(double re, double a_t, double b_t,
                                  const FrictionConstants& c = {}) {
  const double laminar = c.a_l / re;
  const double turbulent = a_t / std::pow(re, b_t);
  if (re < c.re_laminar) return laminar;
  if (re > c.re_turbulent) return turbulent;
  const double w = (re - c.re_laminar) / (c.re_turbulent - c.re_laminar);
  return laminar * (1.0 - w) + turbulent * w;
}

// Heating correction factor; equals 1 exactly for isothermal tests
// (no wall heat flux, wall temperature equal to bulk temperature).
inline double friction_heating_correction(double phi_w, double t_bulk,
                                          const FrictionConstants& c = {}) {
  const double t_wall = t_bulk + c.r_thermal * phi_w;
  const double denom =
      1.0 + c.d_coef * std::pow((t_wall + t_bulk) / (2.0 * c.t0), c.n_exp);
  return 1.0 - c.ph_over_pw * c.c_f * (t_wall - t_bulk) / denom;
}

// Full simulator: frictional pressure drop as a function of the
// experimental condition and the model parameters beta = (a_t, b_t).
inline double friction_pressure_drop(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& beta,
                                     const FrictionConstants& c = {}) {
  if (x.size() != 6) throw contract_error("friction_pressure_drop: x must have 6 entries");
  if (beta.size() != 2) throw contract_error("friction_pressure_drop: beta must have 2 entries");
  const double g = x(0), phi_w = x(1), h_il = x(2), p_o = x(3);
  const double h_f = x(4), d_h = x(5);
  const double t_bulk = friction_bulk_temperature(h_il, c);
  const double mu = friction_viscosity(t_bulk);
  const double rho = friction_density(t_bulk, p_o);
  const double re = friction_reynolds(g, d_h, mu);
  const double f_iso = friction_isothermal(re, beta(0), beta(1), c);
  const double f_h = friction_heating_correction(phi_w, t_bulk, c);
  return h_f / (2.0 * rho * d_h) * g * g * f_iso * f_h;
}

struct FrictionDemoConfig {
  std::uint64_t seed = 0;
  int n_iso = 60;
  int n_heated = 60;
  int n_campaigns = 4;
  int folds = 10;
  CvMode mode = CvMode::RefitPerFold;
  OptimizerConfig optimizer{6, 300, 1e-9, 0};
  double noise_sd = 150.0;
  Eigen::Vector2d beta_nominal{0.22, 0.21};
  Eigen::Vector2d beta_true{0.25, 0.195};
  Eigen::Vector2d prior_sd{0.11, 0.105};
  // Amplitudes of the injected smooth model discrepancy [Pa].
  double disc_flow = 600.0;
  double disc_enthalpy = 400.0;
  double disc_cross = 300.0;
};

// Sampling ranges for the environment variables (uniform draws).
struct FrictionRanges {
  double g_lo = 500.0, g_hi = 4500.0;
  double phi_lo = 200.0, phi_hi = 2000.0;
  double h_lo = 100.0, h_hi = 900.0;
  double p_lo = 10.0, p_hi = 160.0;
};

// Smooth low-frequency model discrepancy in the scaled environment
// variables; this is the structure the Gaussian process is supposed to
// recover from held-out folds.
inline double friction_discrepancy(const Eigen::VectorXd& x,
                                   const FrictionDemoConfig& cfg,
                                   const FrictionRanges& rg = {}) {
  const double ug = (x(0) - rg.g_lo) / (rg.g_hi - rg.g_lo);
  const double uphi = x(1) / rg.phi_hi;
  const double uh = (x(2) - rg.h_lo) / (rg.h_hi - rg.h_lo);
  constexpr double pi = 3.14159265358979323846;
  return cfg.disc_flow * std::sin(pi * ug) +
         cfg.disc_enthalpy * std::cos(pi * uh) * (0.5 + 0.5 * uphi) +
         cfg.disc_cross * ug * uphi;
}

struct FrictionData {
  Design design;
  Eigen::VectorXd y;       // observed pressure drops
  LinearModel lin;         // forward-difference jacobian around beta_nominal
  Prior prior;
  NoiseSpec noise;
};

inline FrictionData generate_friction_data(const FrictionDemoConfig& cfg) {
  if (cfg.n_iso < 0 || cfg.n_heated < 0 || cfg.n_iso + cfg.n_heated < 30)
    throw contract_error("generate_friction_data: need n_iso + n_heated >= 30");
  if (cfg.n_campaigns < 1 || cfg.n_campaigns > 8)
    throw contract_error("generate_friction_data: need 1 <= n_campaigns <= 8");
  if (!(cfg.noise_sd >= 0.0))
    throw contract_error("generate_friction_data: noise_sd must be >= 0");

  const FrictionRanges rg;
  const FrictionConstants consts;
  // Control-variable table, one (H_f, D_h) pair per campaign.
  const double h_f_table[8] = {0.8, 1.2, 1.6, 2.0, 1.0, 1.4, 1.8, 0.9};
  const double d_h_table[8] = {0.008, 0.012, 0.016, 0.010, 0.009, 0.014,
                               0.011, 0.015};

  const int n = cfg.n_iso + cfg.n_heated;
  Eigen::MatrixXd pts(n, 6);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const bool heated = i >= cfg.n_iso;
    const int campaign = i % cfg.n_campaigns;
    pts(i, 0) = rg.g_lo + unif(rng) * (rg.g_hi - rg.g_lo);
    pts(i, 1) = heated ? rg.phi_lo + unif(rng) * (rg.phi_hi - rg.phi_lo) : 0.0;
    pts(i, 2) = rg.h_lo + unif(rng) * (rg.h_hi - rg.h_lo);
    pts(i, 3) = rg.p_lo + unif(rng) * (rg.p_hi - rg.p_lo);
    pts(i, 4) = h_f_table[campaign];
    pts(i, 5) = d_h_table[campaign];
  }

  Design design(pts, {"G_i", "phi_w", "h_il", "P_o", "H_f", "D_h"});

  Eigen::VectorXd beta_true = cfg.beta_true;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = pts.row(i).transpose();
    y(i) = friction_pressure_drop(xi, beta_true, consts) +
           friction_discrepancy(xi, cfg, rg) + cfg.noise_sd * gauss(rng);
  }

  Prior prior(cfg.beta_nominal,
              cfg.prior_sd.array().square().matrix().asDiagonal());
  LinearModel lin = finite_difference_jacobian(
      [consts](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
        return friction_pressure_drop(x, b, consts);
      },
      design, cfg.beta_nominal, default_fd_steps(cfg.beta_nominal, prior));

  return FrictionData{std::move(design), std::move(y), std::move(lin),
                      std::move(prior), NoiseSpec::homoscedastic(cfg.noise_sd)};
}

struct FrictionKernelRow {
  KernelFamily kernel;
  CvReport report;
};

struct FrictionResult {
  FrictionDemoConfig config;
  FrictionData data;
  FoldPartition folds;
  std::vector<FrictionKernelRow> kernels;
};

// Generate the synthetic database, then cross-validate the Gaussian
// process predictor and the calibrated model alone for all four kernel
// families.
inline FrictionResult run_friction(const FrictionDemoConfig& cfg = {}) {
  FrictionData data = generate_friction_data(cfg);
  FoldPartition folds = partition(data.design, cfg.folds, cfg.seed);
  CvInputs inputs{data.design, data.y, data.lin, data.noise, data.prior};

  FrictionResult result{cfg, std::move(data), folds, {}};
  for (KernelFamily k : kAllKernels)
    result.kernels.push_back(
        {k, run_cv(inputs, k, folds, cfg.mode, cfg.optimizer)});
  return result;
}

inline Eigen::MatrixXd friction_dataset_table(const FrictionData& data) {
  const Eigen::Index n = data.design.n();
  Eigen::MatrixXd table(n, 11);
  table.leftCols(6) = data.design.points();
  table.col(6) = data.y;
  table.col(7) = data.lin.f_nom;
  table.col(8) = data.y - data.lin.f_nom;
  table.col(9) = data.lin.H.col(0);
  table.col(10) = data.lin.H.col(1);
  return table;
}

inline const std::vector<std::string>& friction_dataset_columns() {
  static const std::vector<std::string> cols{
      "G_i", "phi_w", "h_il", "P_o",  "H_f",  "D_h",
      "dp_obs", "f_nom", "dp_shift", "h_at", "h_bt"};
  return cols;
}

inline void write_friction_report(const FrictionResult& r,
                                  const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  save_table(outdir / "friction_data.tsv", friction_dataset_columns(),
             friction_dataset_table(r.data));

  Eigen::MatrixXd summary(r.kernels.size(), 3);
  json kernels = json::object();
  for (std::size_t k = 0; k < r.kernels.size(); ++k) {
    const auto& row = r.kernels[k];
    summary(static_cast<Eigen::Index>(k), 0) = row.report.rmse;
    summary(static_cast<Eigen::Index>(k), 1) = row.report.ic;
    summary(static_cast<Eigen::Index>(k), 2) = row.report.rmse_baseline;
    kernels[to_string(row.kernel)] = to_json(row.report);
  }
  {
    // Kernel-comparison table with a leading name column.
    std::ofstream out(outdir / "friction_kernels.tsv");
    if (!out) throw data_error("cannot write friction_kernels.tsv");
    out << "kernel\trmse\tic\trmse_baseline\n";
    char buf[40];
    for (std::size_t k = 0; k < r.kernels.size(); ++k) {
      out << to_string(r.kernels[k].kernel);
      for (int c = 0; c < 3; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g",
                      summary(static_cast<Eigen::Index>(k), c));
        out << "\t" << buf;
      }
      out << "\n";
    }
  }

  write_json(outdir / "friction_report.json",
             json{{"seed", r.config.seed},
                  {"n_iso", r.config.n_iso},
                  {"n_heated", r.config.n_heated},
                  {"folds", r.config.folds},
                  {"mode", to_string(r.config.mode)},
                  {"noise_sd", r.config.noise_sd},
                  {"kernels", kernels}});

  // Per-observation plot table for the Matern 3/2 kernel, mirroring the
  // prediction-error-by-experiment-index view.
  for (const auto& row : r.kernels) {
    if (row.kernel != KernelFamily::Matern32) continue;
    std::vector<CvPointRecord> recs;
    for (const auto& fr : row.report.per_fold)
      recs.insert(recs.end(), fr.points.begin(), fr.points.end());
    std::sort(recs.begin(), recs.end(),
              [](const CvPointRecord& a, const CvPointRecord& b) {
                return a.index < b.index;
              });
    Eigen::MatrixXd table(recs.size(), 8);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& p = recs[i];
      const Eigen::Index ii = static_cast<Eigen::Index>(i);
      table(ii, 0) = double(p.index);
      table(ii, 1) = p.y_obs;
      table(ii, 2) = p.mean;
      table(ii, 3) = p.sd;
      table(ii, 4) = p.mean - 1.64 * p.sd;
      table(ii, 5) = p.mean + 1.64 * p.sd;
      table(ii, 6) = p.baseline_mean;
      table(ii, 7) = p.covered ? 1.0 : 0.0;
    }
    save_table(outdir / "friction_points_matern32.tsv",
               {"index", "y_obs", "mean", "sd", "lo90", "hi90",
                "baseline_mean", "covered"},
               table);
  }
}

}  // namespace gpcal

#endif
