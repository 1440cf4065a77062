#include <cmath>
#include <limits>

#include "rie/error.hpp"
#include "rie/regress/model.hpp"

namespace rie {

namespace {

constexpr double kTau = 1e-12;

// Dual of epsilon-SVR in the 2n-variable form
//   min 1/2 b'Qb + p'b  s.t.  s'b = 0, 0 <= b <= C,
// with s = (+1..., -1...), Q_ij = s_i s_j K(i mod n, j mod n),
// solved by SMO with second-order working-set selection.
struct SmoResult {
  Eigen::VectorXd coef;  // alpha - alpha*
  double rho = 0.0;
};

SmoResult solve_smo(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, const SvrConfig& cfg) {
  const Eigen::Index n = y.size();
  const Eigen::Index l = 2 * n;
  const double c = cfg.c;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(l);
  Eigen::VectorXd g(l);
  std::vector<int> s(l);
  for (Eigen::Index i = 0; i < n; ++i) {
    s[i] = 1;
    s[i + n] = -1;
    g(i) = cfg.epsilon - y(i);
    g(i + n) = cfg.epsilon + y(i);
  }
  auto q = [&](Eigen::Index i, Eigen::Index j) { return s[i] * s[j] * k(i % n, j % n); };
  auto upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

  long iter = 0;
  for (;; ++iter) {
    if (iter >= cfg.max_iterations) {
      throw ConvergenceFailure("SMO exceeded " + std::to_string(cfg.max_iterations) +
                               " iterations");
    }
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < l; ++t) {
      if (s[t] == 1) {
        if (!upper(t) && -g(t) >= gmax) {
          gmax = -g(t);
          i = t;
        }
      } else if (!lower(t) && g(t) >= gmax) {
        gmax = g(t);
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double obj_min = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < l; ++t) {
      if (s[t] == 1) {
        if (lower(t)) continue;
        double grad_diff = gmax + g(t);
        gmax2 = std::max(gmax2, g(t));
        if (i >= 0 && grad_diff > 0.0) {
          double quad = q(i, i) + q(t, t) - 2.0 * s[i] * q(i, t);
          double obj = -grad_diff * grad_diff / (quad > 0.0 ? quad : kTau);
          if (obj <= obj_min) {
            obj_min = obj;
            j = t;
          }
        }
      } else {
        if (upper(t)) continue;
        double grad_diff = gmax - g(t);
        gmax2 = std::max(gmax2, -g(t));
        if (i >= 0 && grad_diff > 0.0) {
          double quad = q(i, i) + q(t, t) + 2.0 * s[i] * q(i, t);
          double obj = -grad_diff * grad_diff / (quad > 0.0 ? quad : kTau);
          if (obj <= obj_min) {
            obj_min = obj;
            j = t;
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < cfg.tolerance) break;

    double old_i = alpha(i), old_j = alpha(j);
    double qij = q(i, j);
    if (s[i] != s[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      double delta = (-g(i) - g(j)) / quad;
      double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      double delta = (g(i) - g(j)) / quad;
      double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }
    double di = alpha(i) - old_i, dj = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < l; ++t) g(t) += q(t, i) * di + q(t, j) * dj;
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < l; ++t) {
    double yg = s[t] * g(t);
    if (upper(t)) {
      if (s[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (s[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  SmoResult r;
  r.rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  r.coef = alpha.head(n) - alpha.tail(n);
  return r;
}

}  // namespace

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      k(i, j) = std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return k;
}

ClassicalModel fit_svr(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                       const Eigen::VectorXd& y, const SvrConfig& cfg, std::uint32_t dimension) {
  if (static_cast<std::size_t>(x.cols()) != names.size() || x.rows() != y.size()) {
    throw FeatureMismatch("design, names and target disagree in shape");
  }
  if (x.rows() < 2) throw TooFewSamples("SVR needs at least 2 samples");
  if (!x.allFinite() || !y.allFinite()) throw FeatureMismatch("non-finite training value");
  if (!(cfg.c > 0.0) || !(cfg.epsilon >= 0.0)) throw Error("SVR needs C > 0 and epsilon >= 0");

  ClassicalModel m;
  m.kind = ModelKind::kSvr;
  m.dimension = dimension;
  m.feature_names = names;
  m.standardizer = Standardizer::fit(x);
  Eigen::MatrixXd z = m.standardizer.apply(x);
  if (cfg.gamma > 0.0) {
    m.gamma = cfg.gamma;
  } else {
    double var = (z.array() - z.mean()).square().mean();
    m.gamma = 1.0 / (static_cast<double>(z.cols()) * (var > 0.0 ? var : 1.0));
  }
  SmoResult r = solve_smo(rbf_kernel(z, z, m.gamma), y, cfg);
  m.bias = -r.rho;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < r.coef.size(); ++i) {
    if (r.coef(i) != 0.0) sv.push_back(i);
  }
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), z.cols());
  m.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_vectors.row(k) = z.row(sv[k]);
    m.dual_coef(k) = r.coef(sv[k]);
  }
  return m;
}

}  // namespace rie
