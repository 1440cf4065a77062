#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance binary.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rie/regress/model.hpp"

namespace rie::test {

/// Least squares with an intercept column via column-pivoted QR.
inline Eigen::VectorXd ols_predict(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& probe) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  a << Eigen::VectorXd::Ones(x.rows()), x;
  Eigen::VectorXd w = a.colPivHouseholderQr().solve(y);
  Eigen::MatrixXd p(probe.rows(), probe.cols() + 1);
  p << Eigen::VectorXd::Ones(probe.rows()), probe;
  return p * w;
}

/// Dense RBF Gram matrix, written out without the library kernel.
inline Eigen::MatrixXd gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
  }
  return k;
}

// Projected gradient on the epsilon-SVR dual with an exact projection onto
// {0 <= b <= C, s'b = 0} (bisection on the multiplier).
struct QpSvr {
  Eigen::VectorXd coef;
  double rho;
};

inline QpSvr qp_svr(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c, double eps) {
  const Eigen::Index n = y.size(), l = 2 * n;
  Eigen::VectorXd s(l), p(l);
  Eigen::MatrixXd q(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    s(i) = i < n ? 1.0 : -1.0;
    p(i) = i < n ? eps - y(i) : eps + y(i - n);
  }
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) q(i, j) = s(i) * s(j) * k(i % n, j % n);
  }
  double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff();
  auto project = [&](const Eigen::VectorXd& v) {
    auto at = [&](double lam) {
      return (v - lam * s).cwiseMax(0.0).cwiseMin(c).eval();
    };
    double lo = -1e6, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (s.dot(at(mid)) > 0.0 ? lo : hi) = mid;
    }
    return at(0.5 * (lo + hi));
  };
  Eigen::VectorXd b = Eigen::VectorXd::Zero(l);
  for (int it = 0; it < 50000; ++it) b = project(b - (q * b + p) / lip);
  Eigen::VectorXd g = q * b + p;
  double sum = 0.0;
  int free = 0;
  for (Eigen::Index i = 0; i < l; ++i) {
    if (b(i) > 1e-6 && b(i) < c - 1e-6) {
      sum += s(i) * g(i);
      ++free;
    }
  }
  return {b.head(n) - b.tail(n), free ? sum / free : 0.0};
}

/// Dual coefficient of every training row, recovered by matching the
/// standardized rows against the stored support vectors (0 if absent).
inline Eigen::VectorXd svr_training_coef(const ClassicalModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = m.standardizer.apply(x);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(z.rows());
  for (Eigen::Index j = 0; j < m.support_vectors.rows(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      if (z.row(i) == m.support_vectors.row(j)) {
        beta(i) = m.dual_coef(j);
        break;
      }
    }
  }
  return beta;
}

/// Maximal violating pair gap of the epsilon-SVR dual at the fitted
/// coefficients: m(a) - M(a) over the 2n split variables. Zero at the exact
/// optimum; independent of the bias.
inline double svr_kkt_violation(const ClassicalModel& m, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y, double c, double eps) {
  const Eigen::VectorXd beta = svr_training_coef(m, x);
  const Eigen::MatrixXd z = m.standardizer.apply(x);
  const Eigen::VectorXd f = gram(z, z, m.gamma) * beta;
  const double inf = std::numeric_limits<double>::infinity();
  double up = -inf, low = inf;
  const double tiny = 1e-12 * c;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // alpha_i (s = +1) and alpha*_i (s = -1); -s*g for each
    const double ap = std::max(beta(i), 0.0), am = std::max(-beta(i), 0.0);
    const double vp = y(i) - f(i) - eps, vm = y(i) - f(i) + eps;
    if (ap < c - tiny) up = std::max(up, vp);
    if (ap > tiny) low = std::min(low, vp);
    if (am > tiny) up = std::max(up, vm);
    if (am < c - tiny) low = std::min(low, vm);
  }
  return std::max(0.0, up - low);
}

}  // namespace rie::test
