#ifndef GPCAL_NELDER_MEAD_HPP
#define GPCAL_NELDER_MEAD_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "gpcal/errors.hpp"

namespace gpcal {

struct NelderMeadOptions {
  int max_iters = 400;
  double f_tolerance = 1e-10;   // stop when spread(f) <= tol * (1 + |f_best|)
  double x_tolerance = 1e-9;    // ... and the simplex has collapsed
  double initial_step = 0.5;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Derivative-free simplex minimization with box constraints handled by
// projection.  Fully deterministic for a given starting point.
inline NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    Eigen::VectorXd x0, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
    const NelderMeadOptions& opt = {}) {
  const Eigen::Index d = x0.size();
  if (lo.size() != d || hi.size() != d)
    throw contract_error("nelder_mead: bound dimension mismatch");

  const auto project = [&](Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = std::clamp(v(i), lo(i), hi(i));
    return v;
  };

  x0 = project(std::move(x0));

  if (d == 0) return {x0, f(x0), 0, true};

  // Initial simplex: x0 plus a step along each axis, flipped when the
  // step would leave the box.
  std::vector<Eigen::VectorXd> xs(d + 1, x0);
  for (Eigen::Index i = 0; i < d; ++i) {
    double step = opt.initial_step;
    if (x0(i) + step > hi(i)) step = -opt.initial_step;
    xs[i + 1](i) = std::clamp(x0(i) + step, lo(i), hi(i));
  }
  std::vector<double> fs(d + 1);
  for (Eigen::Index i = 0; i <= d; ++i) fs[i] = f(xs[i]);

  std::vector<int> order(d + 1);
  const auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });
  };

  NelderMeadResult result;
  int iter = 0;
  for (; iter < opt.max_iters; ++iter) {
    sort_simplex();
    const int best = order[0], worst = order[d];
    const int second_worst = order[d - 1];

    const double spread = fs[worst] - fs[best];
    double xspread = 0.0;
    for (int k = 1; k <= d; ++k)
      xspread = std::max(
          xspread, (xs[order[k]] - xs[best]).cwiseAbs().maxCoeff());
    if ((std::isfinite(fs[best]) &&
         spread <= opt.f_tolerance * (1.0 + std::abs(fs[best]))) ||
        xspread <= opt.x_tolerance) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < d; ++k) centroid += xs[order[k]];
    centroid /= double(d);

    // Reflection.
    Eigen::VectorXd xr = project(centroid + (centroid - xs[worst]));
    const double fr = f(xr);
    if (fr < fs[best]) {
      // Expansion.
      Eigen::VectorXd xe = project(centroid + 2.0 * (centroid - xs[worst]));
      const double fe = f(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second_worst]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    // Contraction (outside if the reflected point improved on the worst).
    Eigen::VectorXd xc;
    if (fr < fs[worst]) {
      xc = project(centroid + 0.5 * (xr - centroid));
    } else {
      xc = project(centroid + 0.5 * (xs[worst] - centroid));
    }
    const double fc = f(xc);
    if (fc < std::min(fr, fs[worst])) {
      xs[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (int k = 1; k <= d; ++k) {
      const int idx = order[k];
      xs[idx] = project(xs[best] + 0.5 * (xs[idx] - xs[best]));
      fs[idx] = f(xs[idx]);
    }
  }

  sort_simplex();
  result.x = xs[order[0]];
  result.f = fs[order[0]];
  result.iterations = iter;
  return result;
}

}  // namespace gpcal

#endif
