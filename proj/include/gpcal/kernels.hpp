#ifndef GPCAL_KERNELS_HPP
#define GPCAL_KERNELS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>

#include "gpcal/design.hpp"
#include "gpcal/errors.hpp"
#include "gpcal/linalg.hpp"

namespace gpcal {

// The four stationary correlation families.  Note the Matern scale
// constants sqrt(6) and sqrt(10).
enum class KernelFamily { Exponential, Matern32, Matern52, Gaussian };

inline const char* to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Exponential: return "exponential";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::Gaussian: return "gaussian";
  }
  return "?";
}

inline KernelFamily kernel_from_string(std::string_view s) {
  if (s == "exponential") return KernelFamily::Exponential;
  if (s == "matern32") return KernelFamily::Matern32;
  if (s == "matern52") return KernelFamily::Matern52;
  if (s == "gaussian") return KernelFamily::Gaussian;
  throw contract_error("unknown kernel family \"" + std::string(s) +
                       "\" (expected exponential|matern32|matern52|gaussian)");
}

constexpr KernelFamily kAllKernels[] = {
    KernelFamily::Exponential, KernelFamily::Matern32, KernelFamily::Matern52,
    KernelFamily::Gaussian};

// Correlation lengths live in normalized-input units and are kept inside
// this box; the upper bound is where saturated estimates pile up.
constexpr double kMinCorrelationLength = 1e-3;
constexpr double kMaxCorrelationLength = 1e2;

inline double clamp_length(double l) {
  return std::clamp(l, kMinCorrelationLength, kMaxCorrelationLength);
}

// Covariance of the model-error process: sigma^2 * C_family(h / lengths).
struct CovarianceSpec {
  KernelFamily family;
  double sigma2;             // process variance, output units squared
  Eigen::VectorXd lengths;   // per-dimension correlation lengths, > 0

  CovarianceSpec(KernelFamily f, double s2, Eigen::VectorXd l)
      : family(f), sigma2(s2), lengths(std::move(l)) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw contract_error("CovarianceSpec: sigma2 must be positive and finite");
    if (lengths.size() == 0)
      throw contract_error("CovarianceSpec: empty length vector");
    for (Eigen::Index i = 0; i < lengths.size(); ++i)
      if (!(lengths(i) > 0.0) || !std::isfinite(lengths(i)))
        throw contract_error(
            "CovarianceSpec: correlation length " + std::to_string(i + 1) +
            " must be positive and finite");
  }

  Eigen::Index dim() const { return lengths.size(); }
};

// Known covariance of the measurement error.
class NoiseSpec {
 public:
  enum class Kind { Homoscedastic, FullMatrix };

  static NoiseSpec homoscedastic(double sigma_mes) {
    if (!(sigma_mes >= 0.0) || !std::isfinite(sigma_mes))
      throw contract_error("NoiseSpec: sigma_mes must be >= 0 and finite");
    NoiseSpec s;
    s.kind_ = Kind::Homoscedastic;
    s.sigma_mes_ = sigma_mes;
    return s;
  }

  static NoiseSpec full_matrix(Eigen::MatrixXd m) {
    if (m.rows() != m.cols())
      throw contract_error("NoiseSpec: matrix must be square");
    if (!m.allFinite()) throw contract_error("NoiseSpec: non-finite entry");
    const double scale = m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + scale))
      throw contract_error("NoiseSpec: matrix must be symmetric");
    // PSD check: Cholesky of matrix + jitter must succeed.
    Eigen::MatrixXd probe = 0.5 * (m + m.transpose());
    probe.diagonal().array() += 1e-10 * (1.0 + scale);
    Eigen::LLT<Eigen::MatrixXd> llt(probe);
    if (llt.info() != Eigen::Success)
      throw contract_error("NoiseSpec: matrix is not positive semidefinite");
    NoiseSpec s;
    s.kind_ = Kind::FullMatrix;
    s.matrix_ = std::move(m);
    return s;
  }

  Kind kind() const { return kind_; }
  double sigma_mes() const { return sigma_mes_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  // Restriction to a subset of experiments (used by cross validation).
  NoiseSpec subset(const std::vector<Eigen::Index>& idx) const {
    if (kind_ == Kind::Homoscedastic) return *this;
    Eigen::MatrixXd sub(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b)
        sub(a, b) = matrix_(idx[a], idx[b]);
    return full_matrix(std::move(sub));
  }

 private:
  NoiseSpec() = default;
  Kind kind_ = Kind::Homoscedastic;
  double sigma_mes_ = 0.0;
  Eigen::MatrixXd matrix_;
};

namespace detail {

inline double corr_from_lag(const CovarianceSpec& spec, const Eigen::VectorXd& h) {
  switch (spec.family) {
    case KernelFamily::Exponential: {
      const double s = (h.cwiseAbs().array() / spec.lengths.array()).sum();
      return std::exp(-s);
    }
    case KernelFamily::Matern32: {
      const double t =
          std::sqrt((h.array() / spec.lengths.array()).square().sum());
      const double a = std::sqrt(6.0) * t;
      return (1.0 + a) * std::exp(-a);
    }
    case KernelFamily::Matern52: {
      const double t2 = (h.array() / spec.lengths.array()).square().sum();
      const double t = std::sqrt(t2);
      const double a = std::sqrt(10.0) * t;
      return (1.0 + a + (10.0 / 3.0) * t2) * std::exp(-a);
    }
    case KernelFamily::Gaussian: {
      const double t2 = (h.array() / spec.lengths.array()).square().sum();
      return std::exp(-t2);
    }
  }
  return 0.0;
}

}  // namespace detail

// Correlation between two points given in normalized coordinates.
// Symmetric, equals 1 at zero lag.
inline double correlation(const CovarianceSpec& spec, const Eigen::VectorXd& xa,
                          const Eigen::VectorXd& xb) {
  if (xa.size() != spec.dim() || xb.size() != spec.dim())
    throw contract_error("correlation: point dimension mismatch");
  return detail::corr_from_lag(spec, xa - xb);
}

// n-by-n model-error covariance over the design: sigma^2 * correlation.
inline Eigen::MatrixXd covariance_matrix(const CovarianceSpec& spec,
                                         const Design& design) {
  if (spec.dim() != design.dim())
    throw contract_error("covariance_matrix: length vector dimension mismatch");
  const Eigen::MatrixXd& z = design.normalized();
  const Eigen::Index n = design.n();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = spec.sigma2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c =
          spec.sigma2 *
          detail::corr_from_lag(spec, (z.row(i) - z.row(j)).transpose());
      r(i, j) = c;
      r(j, i) = c;
    }
  }
  return r;
}

// Covariance vector between the design and a new raw point; the point is
// normalized with the design's own metadata.
inline Eigen::VectorXd covariance_vector(const CovarianceSpec& spec,
                                         const Design& design,
                                         const Eigen::VectorXd& xnew) {
  if (spec.dim() != design.dim())
    throw contract_error("covariance_vector: length vector dimension mismatch");
  const Eigen::VectorXd znew = design.norm().apply(xnew);
  const Eigen::MatrixXd& z = design.normalized();
  Eigen::VectorXd r(design.n());
  for (Eigen::Index i = 0; i < design.n(); ++i)
    r(i) = spec.sigma2 *
           detail::corr_from_lag(spec, (z.row(i).transpose() - znew));
  return r;
}

// Measurement-error covariance for n experiments.
inline Eigen::MatrixXd noise_matrix(const NoiseSpec& noise, Eigen::Index n) {
  if (noise.kind() == NoiseSpec::Kind::Homoscedastic) {
    return noise.sigma_mes() * noise.sigma_mes() *
           Eigen::MatrixXd::Identity(n, n);
  }
  if (noise.matrix().rows() != n)
    throw contract_error("noise_matrix: stored matrix size " +
                         std::to_string(noise.matrix().rows()) +
                         " does not match n = " + std::to_string(n));
  return noise.matrix();
}

}  // namespace gpcal

#endif
