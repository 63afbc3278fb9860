#ifndef GPCAL_DESIGN_HPP
#define GPCAL_DESIGN_HPP

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "gpcal/errors.hpp"

namespace gpcal {

// Per-dimension affine map of experimental conditions onto [0, 1].
// Correlation lengths are expressed in these normalized units.  A
// constant dimension (min == max) cannot be scaled; it is mapped to 0
// for every point so it contributes nothing to kernel distances.
class Normalization {
 public:
  Normalization() = default;

  Normalization(Eigen::VectorXd lo, Eigen::VectorXd hi)
      : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size())
      throw contract_error("Normalization: lo/hi size mismatch");
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
      if (!std::isfinite(lo_(i)) || !std::isfinite(hi_(i)) || hi_(i) < lo_(i))
        throw contract_error("Normalization: invalid bounds in dimension " +
                             std::to_string(i));
    }
  }

  static Normalization from_points(const Eigen::MatrixXd& points) {
    if (points.rows() == 0)
      throw contract_error("Normalization::from_points: empty point set");
    return Normalization(points.colwise().minCoeff(),
                         points.colwise().maxCoeff());
  }

  // Identity map on [0,1]^d: normalized coordinates equal raw ones.
  static Normalization unit(Eigen::Index d) {
    return Normalization(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d));
  }

  Eigen::Index dim() const { return lo_.size(); }

  bool active(Eigen::Index i) const { return hi_(i) > lo_(i); }

  // Dimensions dropped from the kernel because they are constant.
  std::vector<Eigen::Index> dropped() const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < dim(); ++i)
      if (!active(i)) out.push_back(i);
    return out;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const {
    if (raw.size() != dim())
      throw contract_error("Normalization::apply: point dimension mismatch");
    Eigen::VectorXd z(dim());
    for (Eigen::Index i = 0; i < dim(); ++i)
      z(i) = active(i) ? (raw(i) - lo_(i)) / (hi_(i) - lo_(i)) : 0.0;
    return z;
  }

  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& raw) const {
    Eigen::MatrixXd z(raw.rows(), raw.cols());
    for (Eigen::Index r = 0; r < raw.rows(); ++r)
      z.row(r) = apply(raw.row(r).transpose()).transpose();
    return z;
  }

  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }

 private:
  Eigen::VectorXd lo_, hi_;
};

// The set of experimental conditions: raw points plus the normalization
// metadata that maps them (and any new point) to [0,1]^d.
class Design {
 public:
  Design(Eigen::MatrixXd points, std::vector<std::string> labels = {})
      : Design(std::move(points), Normalization(), std::move(labels), true) {}

  Design(Eigen::MatrixXd points, Normalization norm,
         std::vector<std::string> labels = {})
      : Design(std::move(points), std::move(norm), std::move(labels), false) {}

  Eigen::Index n() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }

  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::MatrixXd& normalized() const { return normalized_; }
  const Normalization& norm() const { return norm_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Human-readable notes accumulated while building the design
  // (currently: constant dimensions dropped from the kernel).
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::string label(Eigen::Index i) const {
    return labels_.empty() ? "x" + std::to_string(i + 1) : labels_[i];
  }

 private:
  Design(Eigen::MatrixXd points, Normalization norm,
         std::vector<std::string> labels, bool norm_from_data)
      : points_(std::move(points)),
        norm_(norm_from_data ? Normalization::from_points(points_)
                             : std::move(norm)),
        labels_(std::move(labels)) {
    if (points_.rows() < 1)
      throw contract_error("Design: at least one point required");
    if (!points_.allFinite())
      throw contract_error("Design: non-finite experimental condition");
    if (norm_.dim() != points_.cols())
      throw contract_error("Design: normalization dimension mismatch");
    if (!labels_.empty() &&
        labels_.size() != static_cast<std::size_t>(points_.cols()))
      throw contract_error("Design: label count mismatch");
    normalized_ = norm_.apply_rows(points_);
    for (Eigen::Index i : norm_.dropped())
      warnings_.push_back("dimension \"" + label(i) +
                          "\" is constant and was dropped from the kernel");
  }

  Eigen::MatrixXd points_;
  Normalization norm_;
  std::vector<std::string> labels_;
  Eigen::MatrixXd normalized_;
  std::vector<std::string> warnings_;
};

}  // namespace gpcal

#endif
