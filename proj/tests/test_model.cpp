#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "gpcal/infer.hpp"
#include "gpcal/model.hpp"

using namespace gpcal;
using Catch::Approx;

namespace {

Eigen::VectorXd line_basis(const Eigen::VectorXd& x) {
  Eigen::VectorXd h(2);
  h << 1.0, x(0);
  return h;
}

GpModel parabola3(std::optional<Prior> prior = std::nullopt) {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.2, 0.5, 0.8;
  Design design(pts, Normalization::unit(1));
  Eigen::VectorXd y = pts.col(0).array().square();
  return assemble(design, y, LinearModel::from_basis(line_basis, design),
                  CovarianceSpec(KernelFamily::Gaussian, 0.09,
                                 Eigen::VectorXd::Constant(1, 0.5)),
                  NoiseSpec::homoscedastic(0.0), std::move(prior));
}

}  // namespace

TEST_CASE("assemble caches H, R and the Cholesky factor") {
  GpModel model = parabola3();
  REQUIRE(model.n() == 3);
  REQUIRE(model.m() == 2);
  REQUIRE(model.R.diagonal().isApproxToConstant(0.09));
  // L L^T reproduces R.
  const Eigen::MatrixXd rec = model.R_chol.L * model.R_chol.L.transpose();
  REQUIRE((rec - model.R).cwiseAbs().maxCoeff() <=
          1e-10 * model.R.cwiseAbs().maxCoeff());
  REQUIRE(model.rank == 2);

  // Cached columns match the basis evaluator.
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    const Eigen::VectorXd h = line_basis(model.design.points().row(i).transpose());
    REQUIRE((h.transpose() - model.lin.H.row(i)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("assemble accepts the one-point one-parameter system") {
  Eigen::MatrixXd pts(1, 1);
  pts << 0.5;
  Design design(pts, Normalization::unit(1));
  Eigen::VectorXd y(1);
  y << 2.0;
  GpModel model = assemble(
      design, y,
      LinearModel::from_basis(
          [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); },
          design),
      CovarianceSpec(KernelFamily::Matern32, 1.0, Eigen::VectorXd::Ones(1)),
      NoiseSpec::homoscedastic(0.5));
  REQUIRE(model.R(0, 0) == Approx(1.25));
}

TEST_CASE("assemble rejects inconsistent dimensions") {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.2, 0.5, 0.8;
  Design design(pts, Normalization::unit(1));
  LinearModel lin = LinearModel::from_basis(line_basis, design);
  CovarianceSpec cov(KernelFamily::Gaussian, 0.09,
                     Eigen::VectorXd::Constant(1, 0.5));

  SECTION("wrong observation length") {
    REQUIRE_THROWS_AS(assemble(design, Eigen::VectorXd::Zero(2), lin, cov,
                               NoiseSpec::homoscedastic(0.0)),
                      contract_error);
  }
  SECTION("wrong length-vector dimension") {
    REQUIRE_THROWS_AS(
        assemble(design, Eigen::VectorXd::Zero(3), lin,
                 CovarianceSpec(KernelFamily::Gaussian, 0.09,
                                Eigen::VectorXd::Constant(2, 0.5)),
                 NoiseSpec::homoscedastic(0.0)),
        contract_error);
  }
  SECTION("wrong prior dimension") {
    REQUIRE_THROWS_AS(
        assemble(design, Eigen::VectorXd::Zero(3), lin, cov,
                 NoiseSpec::homoscedastic(0.0),
                 Prior(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3))),
        contract_error);
  }
}

TEST_CASE("finite differences reproduce an exactly linear model") {
  Eigen::MatrixXd pts(4, 1);
  pts << 0.0, 0.3, 0.6, 1.0;
  Design design(pts, Normalization::unit(1));
  const auto runner = [](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    return b(0) + b(1) * x(0);
  };
  const LinearModel lm = finite_difference_jacobian(
      runner, design, Eigen::VectorXd::Zero(2),
      Eigen::VectorXd::Constant(2, 0.37));
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(lm.H(i, 0) == Approx(1.0).epsilon(1e-12));
    CHECK(lm.H(i, 1) == Approx(pts(i, 0)).margin(1e-12));
  }
  REQUIRE(lm.f_nom.isZero());
  // The basis evaluator agrees at a fresh point.
  const Eigen::VectorXd h = lm.basis_at(Eigen::VectorXd::Constant(1, 0.45));
  CHECK(h(0) == Approx(1.0).epsilon(1e-12));
  CHECK(h(1) == Approx(0.45).margin(1e-12));
}

TEST_CASE("forward difference of exp at zero") {
  Eigen::MatrixXd pts(1, 1);
  pts << 0.0;
  Design design(pts, Normalization::unit(1));
  const LinearModel lm = finite_difference_jacobian(
      [](const Eigen::VectorXd&, const Eigen::VectorXd& b) {
        return std::exp(b(0));
      },
      design, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 1e-2));
  // (e^0.01 - 1) / 0.01, frozen from arbitrary-precision evaluation.
  CHECK(lm.H(0, 0) == Approx(1.0050167084168058).epsilon(1e-12));
  CHECK(lm.f_nom(0) == 1.0);
}

TEST_CASE("finite differences reject bad steps and bad outputs") {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 1.0;
  Design design(pts, Normalization::unit(1));
  const auto runner = [](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    return b(0) * x(0);
  };
  REQUIRE_THROWS_AS(finite_difference_jacobian(runner, design,
                                               Eigen::VectorXd::Zero(1),
                                               Eigen::VectorXd::Zero(1)),
                    contract_error);

  const auto nan_runner = [](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    return x(0) > 0.5 ? std::nan("") : b(0);
  };
  try {
    finite_difference_jacobian(nan_runner, design, Eigen::VectorXd::Zero(1),
                               Eigen::VectorXd::Ones(1));
    FAIL("expected numeric_error");
  } catch (const numeric_error& e) {
    REQUIRE(std::string(e.what()).find("point 2") != std::string::npos);
  }
}

TEST_CASE("shift convention matches the unshifted problem for linear models") {
  // f(x, beta) = g(x) + h(x)^T beta with beta_nom away from zero; working
  // in shifted coordinates and un-shifting afterwards must agree with
  // calibrating the plain linear model on y - g directly.
  Eigen::MatrixXd pts(5, 1);
  pts << 0.0, 0.25, 0.5, 0.75, 1.0;
  Design design(pts, Normalization::unit(1));
  const auto g = [](double x) { return 0.7 * std::sin(3.0 * x); };
  const auto runner = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    return g(x(0)) + b(0) + b(1) * x(0);
  };
  Eigen::VectorXd beta_nom(2);
  beta_nom << 1.5, -2.0;

  Eigen::VectorXd y(5);
  for (Eigen::Index i = 0; i < 5; ++i)
    y(i) = g(pts(i, 0)) + 0.9 - 1.4 * pts(i, 0) + 0.05 * std::cos(9.0 * pts(i, 0));

  const CovarianceSpec cov(KernelFamily::Matern52, 0.25,
                           Eigen::VectorXd::Constant(1, 0.4));
  const NoiseSpec noise = NoiseSpec::homoscedastic(0.05);

  const LinearModel shifted = finite_difference_jacobian(
      runner, design, beta_nom, Eigen::VectorXd::Constant(2, 1e-3));
  const GpModel model_shifted = assemble(design, y, shifted, cov, noise);
  const CalibrationResult calib_shifted = calibrate_gls(model_shifted);

  Eigen::VectorXd y_direct(5);
  for (Eigen::Index i = 0; i < 5; ++i) y_direct(i) = y(i) - g(pts(i, 0));
  const GpModel model_direct =
      assemble(design, y_direct, LinearModel::from_basis(line_basis, design),
               cov, noise);
  const CalibrationResult calib_direct = calibrate_gls(model_direct);

  REQUIRE((calib_shifted.beta_unshifted -
           (calib_shifted.beta + beta_nom)).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index j = 0; j < 2; ++j)
    CHECK(calib_shifted.beta_unshifted(j) ==
          Approx(calib_direct.beta(j)).epsilon(1e-9));

  // Predictions of the physical system agree too.
  Eigen::VectorXd xnew(1);
  xnew << 0.4;
  const Prediction p1 = predict(model_shifted, calib_shifted, xnew);
  const Prediction p2 = predict(model_direct, calib_direct, xnew);
  CHECK(p1.mean == Approx(p2.mean + g(0.4)).epsilon(1e-9));
  CHECK(p1.variance == Approx(p2.variance).margin(1e-12));
}

TEST_CASE("prior validation") {
  REQUIRE_THROWS_AS(
      Prior(Eigen::VectorXd::Zero(2), -Eigen::MatrixXd::Identity(2, 2)),
      contract_error);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.1, 0.2, 1.0;
  REQUIRE_THROWS_AS(Prior(Eigen::VectorXd::Zero(2), asym), contract_error);
}

TEST_CASE("default finite-difference steps") {
  Eigen::VectorXd beta_nom(2);
  beta_nom << 0.22, 0.0;
  SECTION("with a prior: 1e-2 of the prior standard deviation") {
    Prior prior(beta_nom, (Eigen::VectorXd(2) << 0.0121, 0.011025)
                              .finished()
                              .asDiagonal());
    const Eigen::VectorXd steps = default_fd_steps(beta_nom, prior);
    CHECK(steps(0) == Approx(1.1e-3).epsilon(1e-12));
    CHECK(steps(1) == Approx(1.05e-3).epsilon(1e-12));
  }
  SECTION("without a prior: 1e-2 of |beta_nom|, floored") {
    const Eigen::VectorXd steps = default_fd_steps(beta_nom, std::nullopt);
    CHECK(steps(0) == Approx(2.2e-3).epsilon(1e-12));
    CHECK(steps(1) == 1e-4);
  }
}
