#include <cmath>

#include "rie/error.hpp"
#include "rie/regress/model.hpp"

namespace rie {

namespace {

void check_fit_inputs(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                      Eigen::Index y_rows, Eigen::Index min_rows) {
  if (static_cast<std::size_t>(x.cols()) != names.size()) {
    throw FeatureMismatch("feature names do not match design columns");
  }
  if (x.rows() != y_rows) throw FeatureMismatch("design and target row counts differ");
  if (x.rows() < min_rows) {
    throw TooFewSamples("need at least " + std::to_string(min_rows) + " samples, got " +
                        std::to_string(x.rows()));
  }
  if (!x.allFinite()) throw FeatureMismatch("non-finite value in design matrix");
}

ClassicalModel affine_model(ModelKind kind, std::uint32_t dimension,
                            const std::vector<std::string>& names, Standardizer s,
                            Eigen::MatrixXd coef, Eigen::VectorXd intercepts) {
  ClassicalModel m;
  m.kind = kind;
  m.dimension = dimension;
  m.feature_names = names;
  m.standardizer = std::move(s);
  m.coef = std::move(coef);
  m.intercepts = std::move(intercepts);
  return m;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinear: return "linear";
    case ModelKind::kRidge: return "ridge";
    case ModelKind::kPls2: return "pls2";
    case ModelKind::kRf: return "rf";
    case ModelKind::kGbdt: return "gbdt";
    case ModelKind::kSvr: return "svr";
    case ModelKind::kFeatNet: return "featnet";
    case ModelKind::kSslHead: return "sslhead";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  for (auto k : {ModelKind::kLinear, ModelKind::kRidge, ModelKind::kPls2, ModelKind::kRf,
                 ModelKind::kGbdt, ModelKind::kSvr, ModelKind::kFeatNet, ModelKind::kSslHead}) {
    if (to_string(k) == name) return k;
  }
  throw Error("unknown model kind: " + std::string(name));
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double var = (x.col(j).array() - s.mean(j)).square().mean();
    double sd = std::sqrt(var);
    s.scale(j) = sd > 1e-12 * (1.0 + std::fabs(s.mean(j))) ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

std::size_t ClassicalModel::outputs() const {
  switch (kind) {
    case ModelKind::kLinear:
    case ModelKind::kRidge:
    case ModelKind::kPls2:
      return static_cast<std::size_t>(coef.cols());
    default:
      return 1;
  }
}

ClassicalModel fit_linear(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                          const Eigen::VectorXd& y, std::uint32_t dimension) {
  check_fit_inputs(x, names, y.size(), 2);
  auto s = Standardizer::fit(x);
  Eigen::MatrixXd z = s.apply(x);
  double ym = y.mean();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() < z.cols()) {
    throw SingularDesign("design rank " + std::to_string(qr.rank()) + " < " +
                         std::to_string(z.cols()) + " features");
  }
  Eigen::VectorXd yc = y.array() - ym;
  Eigen::MatrixXd w = qr.solve(yc);
  return affine_model(ModelKind::kLinear, dimension, names, std::move(s), std::move(w),
                      Eigen::VectorXd::Constant(1, ym));
}

ClassicalModel fit_ridge(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                         const Eigen::VectorXd& y, double alpha, std::uint32_t dimension) {
  if (!(alpha >= 0.0)) throw Error("ridge alpha must be >= 0");
  check_fit_inputs(x, names, y.size(), 2);
  auto s = Standardizer::fit(x);
  Eigen::MatrixXd z = s.apply(x);
  double ym = y.mean();
  Eigen::VectorXd yc = y.array() - ym;
  Eigen::MatrixXd a = z.transpose() * z;
  a.diagonal().array() += alpha;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  Eigen::MatrixXd w = ldlt.solve(z.transpose() * yc);
  if (ldlt.info() != Eigen::Success || !w.allFinite()) {
    // alpha = 0 on a deficient design
    throw SingularDesign("ridge normal equations are singular");
  }
  return affine_model(ModelKind::kRidge, dimension, names, std::move(s), std::move(w),
                      Eigen::VectorXd::Constant(1, ym));
}

ClassicalModel fit_pls2(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                        const Eigen::MatrixXd& y, int n_components, std::uint32_t dimension) {
  if (n_components < 1) throw Error("n_components must be >= 1");
  check_fit_inputs(x, names, y.rows(), n_components + 1);

  auto s = Standardizer::fit(x);
  Eigen::MatrixXd e = s.apply(x);
  Eigen::VectorXd ym = y.colwise().mean().transpose();
  Eigen::MatrixXd f = y.rowwise() - ym.transpose();
  const Eigen::Index p = x.cols(), m = y.cols();
  const double scale0 = std::max(e.norm(), 1.0);

  Eigen::MatrixXd w_all(p, 0), p_all(p, 0), c_all(m, 0);
  for (int a = 0; a < n_components; ++a) {
    if (e.norm() < 1e-12 * scale0 || f.norm() < 1e-14) break;
    // The NIPALS fixed point is the leading left singular vector of E'F;
    // taking it from an SVD avoids slow power iteration when the top
    // singular values are close.
    Eigen::MatrixXd cross = e.transpose() * f;
    Eigen::VectorXd w;
    if (m == 1) {
      w = cross.col(0);
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeThinU);
      w = svd.matrixU().col(0);
    }
    const double wn = w.norm();
    if (!(wn > 1e-300)) break;
    if (!std::isfinite(wn)) throw ConvergenceFailure("PLS weight vector is not finite");
    w /= wn;
    Eigen::VectorXd t = e * w;
    double tt = t.squaredNorm();
    if (tt < 1e-24 * scale0 * scale0) break;  // X exhausted
    Eigen::VectorXd c = f.transpose() * t / tt;
    Eigen::VectorXd pl = e.transpose() * t / tt;
    e -= t * pl.transpose();
    f -= t * c.transpose();
    w_all.conservativeResize(Eigen::NoChange, a + 1);
    p_all.conservativeResize(Eigen::NoChange, a + 1);
    c_all.conservativeResize(Eigen::NoChange, a + 1);
    w_all.col(a) = w;
    p_all.col(a) = pl;
    c_all.col(a) = c;
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, m);
  if (w_all.cols() > 0) {
    Eigen::MatrixXd ptw = p_all.transpose() * w_all;
    b = w_all * ptw.partialPivLu().solve(c_all.transpose());
  }
  return affine_model(ModelKind::kPls2, dimension, names, std::move(s), std::move(b),
                      std::move(ym));
}

}  // namespace rie
