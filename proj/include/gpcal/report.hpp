#ifndef GPCAL_REPORT_HPP
#define GPCAL_REPORT_HPP

#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "gpcal/crossval.hpp"
#include "gpcal/errors.hpp"
#include "gpcal/infer.hpp"
#include "gpcal/reml.hpp"

namespace gpcal {

using json = nlohmann::json;

inline json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const CovarianceSpec& spec) {
  return json{{"family", to_string(spec.family)},
              {"sigma2", spec.sigma2},
              {"lengths", to_json(spec.lengths)}};
}

inline json to_json(const CalibrationResult& calib) {
  return json{{"regime", to_string(calib.regime)},
              {"beta", to_json(calib.beta)},
              {"covariance", to_json(calib.covariance)},
              {"beta_unshifted", to_json(calib.beta_unshifted)}};
}

inline json to_json(const RemlEstimate& est) {
  json trace = json::array();
  for (const auto& t : est.trace)
    trace.push_back(json{{"start", to_json(t.start)},
                         {"converged", to_json(t.converged)},
                         {"q", t.q},
                         {"valid", t.valid},
                         {"iterations", t.iterations}});
  json flags = json::array();
  for (bool b : est.non_identified) flags.push_back(b);
  return json{{"estimate", to_json(est.spec)},
              {"q_min", est.q_min},
              {"n_starts", est.n_starts},
              {"non_identified", flags},
              {"trace", trace}};
}

inline json to_json(const CvReport& report, bool with_folds = true) {
  json j{{"rmse", report.rmse},
         {"ic", report.ic},
         {"rmse_baseline", report.rmse_baseline},
         {"mode", to_string(report.mode)},
         {"n_folds", report.per_fold.size()}};
  if (with_folds) {
    json folds = json::array();
    for (const auto& f : report.per_fold)
      folds.push_back(json{{"fold", f.fold},
                           {"rmse", f.rmse},
                           {"coverage", f.coverage},
                           {"covariance", to_json(f.spec)},
                           {"calibration", to_json(f.calibration)}});
    j["per_fold"] = folds;
  }
  return j;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write \"" + path.string() + "\"");
  out << j.dump(2) << "\n";
  if (!out) throw data_error("write failed for \"" + path.string() + "\"");
}

}  // namespace gpcal

#endif
