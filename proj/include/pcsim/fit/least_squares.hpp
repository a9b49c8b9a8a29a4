#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace pcsim::fit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Residual callback: fills r (size m) for parameters p.
using ResidualFn = std::function<void(const Vec& p, Vec& r)>;
/// Optional analytic Jacobian dr/dp (m x n).
using JacobianFn = std::function<void(const Vec& p, Mat& J)>;

struct LsqResult {
  Vec params;
  Vec errors;        // 1-sigma from the scaled inverse normal matrix
  Mat covariance;
  double chi2 = 0.0;  // sum of squared residuals
  int dof = 0;
  int status = 0;
  bool converged = false;
};

namespace detail {

struct Functor : Eigen::DenseFunctor<double> {
  Functor(int n, int m, const ResidualFn& f, const JacobianFn& j)
      : Eigen::DenseFunctor<double>(n, m), res(f), jac(j) {}
  const ResidualFn& res;
  const JacobianFn& jac;

  int operator()(const InputType& x, ValueType& fvec) const {
    res(x, fvec);
    return 0;
  }

  int df(const InputType& x, JacobianType& fjac) const {
    if (jac) {
      jac(x, fjac);
      return 0;
    }
    // Central differences with a parameter-relative step.
    const int n = static_cast<int>(x.size());
    ValueType fp(values()), fm(values());
    InputType xp = x;
    for (int k = 0; k < n; ++k) {
      const double h = 1e-7 * std::max(std::abs(x[k]), 1e-6);
      xp[k] = x[k] + h;
      res(xp, fp);
      xp[k] = x[k] - h;
      res(xp, fm);
      xp[k] = x[k];
      fjac.col(k) = (fp - fm) / (2.0 * h);
    }
    return 0;
  }
};

}  // namespace detail

/// Levenberg-Marquardt over m residuals in n parameters. Errors are scaled by
/// the reduced chi-square unless `absolute_sigma` is set (residuals already
/// divided by their standard deviations).
inline LsqResult least_squares(const ResidualFn& res, const Vec& p0, int m, const JacobianFn& jac = {},
                               bool absolute_sigma = false, int max_evals = 2000) {
  const int n = static_cast<int>(p0.size());
  detail::Functor f(n, m, res, jac);
  Eigen::LevenbergMarquardt<detail::Functor> lm(f);
  lm.setMaxfev(max_evals);
  lm.setXtol(1e-12);
  lm.setFtol(1e-14);
  LsqResult out;
  out.params = p0;
  out.status = static_cast<int>(lm.minimize(out.params));
  out.converged = out.status >= 1 && out.status <= 8 && out.status != 5;
  Vec r(m);
  res(out.params, r);
  out.chi2 = r.squaredNorm();
  out.dof = std::max(m - n, 1);
  Mat J(m, n);
  f.df(out.params, J);
  const Mat JtJ = J.transpose() * J;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(JtJ);
  out.covariance = cod.pseudoInverse();
  if (!absolute_sigma) out.covariance *= out.chi2 / out.dof;
  out.errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

/// Ordinary linear least squares y ~ X beta.
inline Vec linear_fit(const Mat& X, const Vec& y) { return X.colPivHouseholderQr().solve(y); }

}  // namespace pcsim::fit
