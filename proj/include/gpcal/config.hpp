#ifndef GPCAL_CONFIG_HPP
#define GPCAL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpcal/crossval.hpp"
#include "gpcal/dataset.hpp"
#include "gpcal/errors.hpp"
#include "gpcal/kernels.hpp"
#include "gpcal/model.hpp"
#include "gpcal/reml.hpp"

namespace gpcal {

struct IoConfig {
  std::string data;    // training data file
  std::string points;  // new-point file (predict only)
  std::string out;     // output directory
};

struct CvConfigEntry {
  int folds = 10;
  std::uint64_t seed = 0;
  CvMode mode = CvMode::RefitPerFold;
};

// Everything the command-line front end needs for one run.  Parsed from
// a JSON file; unknown keys are rejected.
struct RunConfig {
  KernelFamily kernel = KernelFamily::Matern32;
  NoiseSpec noise = NoiseSpec::homoscedastic(0.0);
  std::optional<Prior> prior;
  OptimizerConfig optimizer;
  std::optional<CvConfigEntry> cv;
  std::optional<CovarianceSpec> covariance;  // fixed hyper-parameters
  IoConfig io;
  DataSchema schema;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw contract_error("config: unknown key \"" + key + "\" in " + where);
}

inline Eigen::VectorXd vector_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array())
    throw contract_error("config: " + where + " must be an array of numbers");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw contract_error("config: " + where + " must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

inline Eigen::MatrixXd matrix_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty())
    throw contract_error("config: " + where + " must be an array of rows");
  const std::size_t cols = arr[0].is_array() ? arr[0].size() : 0;
  Eigen::MatrixXd m(arr.size(), cols);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_array() || arr[i].size() != cols)
      throw contract_error("config: " + where + " rows must have equal length");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          arr[i][j].get<double>();
  }
  return m;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::reject_unknown_keys;
  RunConfig cfg;
  reject_unknown_keys(j, "the top level",
                      {"kernel", "noise", "prior", "optimizer", "cv",
                       "covariance", "io", "schema"});

  if (j.contains("kernel"))
    cfg.kernel = kernel_from_string(j.at("kernel").get<std::string>());

  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    reject_unknown_keys(n, "noise", {"sigma_mes", "matrix"});
    if (n.contains("sigma_mes") && n.contains("matrix"))
      throw contract_error("config: noise takes sigma_mes or matrix, not both");
    if (n.contains("matrix"))
      cfg.noise = NoiseSpec::full_matrix(
          detail::matrix_from_json(n.at("matrix"), "noise.matrix"));
    else if (n.contains("sigma_mes"))
      cfg.noise = NoiseSpec::homoscedastic(n.at("sigma_mes").get<double>());
  }

  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    reject_unknown_keys(p, "prior", {"mean", "cov", "sd"});
    if (!p.contains("mean"))
      throw contract_error("config: prior needs a mean");
    const Eigen::VectorXd mean = detail::vector_from_json(p.at("mean"), "prior.mean");
    Eigen::MatrixXd cov;
    if (p.contains("cov") && p.contains("sd"))
      throw contract_error("config: prior takes cov or sd, not both");
    if (p.contains("cov")) {
      cov = detail::matrix_from_json(p.at("cov"), "prior.cov");
    } else if (p.contains("sd")) {
      const Eigen::VectorXd sd = detail::vector_from_json(p.at("sd"), "prior.sd");
      cov = sd.array().square().matrix().asDiagonal();
    } else {
      throw contract_error("config: prior needs cov or sd");
    }
    cfg.prior = Prior(mean, cov);
  }

  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    reject_unknown_keys(o, "optimizer",
                        {"n_starts", "max_iters", "tolerance", "seed"});
    if (o.contains("n_starts")) cfg.optimizer.n_starts = o.at("n_starts").get<int>();
    if (o.contains("max_iters")) cfg.optimizer.max_iters = o.at("max_iters").get<int>();
    if (o.contains("tolerance")) cfg.optimizer.tolerance = o.at("tolerance").get<double>();
    if (o.contains("seed")) cfg.optimizer.seed = o.at("seed").get<std::uint64_t>();
  }

  if (j.contains("cv")) {
    const auto& c = j.at("cv");
    reject_unknown_keys(c, "cv", {"folds", "seed", "mode"});
    CvConfigEntry e;
    if (c.contains("folds")) e.folds = c.at("folds").get<int>();
    if (c.contains("seed")) e.seed = c.at("seed").get<std::uint64_t>();
    if (c.contains("mode")) e.mode = cv_mode_from_string(c.at("mode").get<std::string>());
    cfg.cv = e;
  }

  if (j.contains("covariance")) {
    const auto& c = j.at("covariance");
    reject_unknown_keys(c, "covariance", {"sigma2", "lengths"});
    if (!c.contains("sigma2") || !c.contains("lengths"))
      throw contract_error("config: covariance needs sigma2 and lengths");
    cfg.covariance = CovarianceSpec(
        cfg.kernel, c.at("sigma2").get<double>(),
        detail::vector_from_json(c.at("lengths"), "covariance.lengths"));
  }

  if (j.contains("io")) {
    const auto& io = j.at("io");
    reject_unknown_keys(io, "io", {"data", "points", "out"});
    if (io.contains("data")) cfg.io.data = io.at("data").get<std::string>();
    if (io.contains("points")) cfg.io.points = io.at("points").get<std::string>();
    if (io.contains("out")) cfg.io.out = io.at("out").get<std::string>();
  }

  if (j.contains("schema")) {
    const auto& s = j.at("schema");
    reject_unknown_keys(s, "schema", {"conditions", "output", "h_columns"});
    if (s.contains("conditions"))
      cfg.schema.conditions = s.at("conditions").get<std::vector<std::string>>();
    if (s.contains("output")) cfg.schema.output = s.at("output").get<std::string>();
    if (s.contains("h_columns"))
      cfg.schema.h_columns = s.at("h_columns").get<std::vector<std::string>>();
  }

  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw contract_error("cannot open config file \"" + path.string() + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw contract_error("config parse error in \"" + path.string() + "\": " +
                         e.what());
  }
  try {
    return parse_config(j);
  } catch (const nlohmann::json::exception& e) {
    throw contract_error("config error in \"" + path.string() + "\": " + e.what());
  }
}

}  // namespace gpcal

#endif
