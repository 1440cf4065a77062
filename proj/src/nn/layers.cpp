#include "rie/nn/layers.hpp"

#include <cmath>

#include "rie/error.hpp"

namespace rie::nn {

void zero_grads(const ParamList& params) {
  for (auto* p : params) p->zero_grad();
}

void init_glorot(Tensor& t, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index i = 0; i < t.value.size(); ++i) {
    t.value.data()[i] = rng.uniform(-limit, limit);
  }
}

void check_finite(const ParamList& params) {
  for (const auto* p : params) {
    if (!p->value.allFinite()) throw FiniteCheckFailure("non-finite value in " + p->name);
    if (!p->grad.allFinite()) throw FiniteCheckFailure("non-finite gradient in " + p->name);
  }
}

Linear::Linear(std::string name, Eigen::Index in, Eigen::Index out)
    : w_(name + ".w", out, in), b_(name + ".b", out, 1) {}

void Linear::init(Rng& rng) {
  init_glorot(w_, in_features(), out_features(), rng);
  b_.value.setZero();
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) {
  if (x.cols() != in_features()) {
    throw DimensionMismatch(w_.name + ": expected " + std::to_string(in_features()) +
                            " inputs, got " + std::to_string(x.cols()));
  }
  x_ = x;
  return (x * w_.value.transpose()).rowwise() + b_.value.col(0).transpose();
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& dy) {
  w_.grad.noalias() += dy.transpose() * x_;
  b_.grad.col(0) += dy.colwise().sum().transpose();
  return dy * w_.value;
}

Eigen::MatrixXd Elementwise::forward(const Eigen::MatrixXd& x) {
  switch (act_) {
    case Activation::kRelu:
      x_ = x;
      y_ = x.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      y_ = x.array().tanh();
      break;
    case Activation::kSigmoid:
      y_ = (1.0 + (-x.array()).exp()).inverse();
      break;
  }
  return y_;
}

Eigen::MatrixXd Elementwise::backward(const Eigen::MatrixXd& dy) const {
  switch (act_) {
    case Activation::kRelu:
      return (x_.array() > 0.0).select(dy, 0.0);
    case Activation::kTanh:
      return dy.array() * (1.0 - y_.array().square());
    case Activation::kSigmoid:
      return dy.array() * y_.array() * (1.0 - y_.array());
  }
  return dy;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd softmax_backward(const Eigen::VectorXd& s, const Eigen::VectorXd& ds) {
  return s.array() * (ds.array() - s.dot(ds));
}

Mlp::Mlp(const std::string& name, const std::vector<Eigen::Index>& sizes) {
  if (sizes.size() < 2) throw DimensionMismatch("MLP needs at least input and output sizes");
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    layers_.emplace_back(name + "." + std::to_string(k), sizes[k], sizes[k + 1]);
    if (k + 2 < sizes.size()) acts_.emplace_back(Activation::kRelu);
  }
}

void Mlp::init(Rng& rng) {
  for (auto& l : layers_) l.init(rng);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    h = layers_[k].forward(h);
    if (k < acts_.size()) h = acts_[k].forward(h);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& dy) {
  Eigen::MatrixXd d = dy;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k < acts_.size()) d = acts_[k].backward(d);
    d = layers_[k].backward(d);
  }
  return d;
}

ParamList Mlp::params() {
  ParamList out;
  for (auto& l : layers_) {
    for (auto* p : l.params()) out.push_back(p);
  }
  return out;
}

Eigen::MatrixXd reverse_valid(const Eigen::MatrixXd& x, const std::vector<int>& lengths,
                              int tmax) {
  const auto n = static_cast<Eigen::Index>(lengths.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (Eigen::Index u = 0; u < n; ++u) {
    const int len = lengths[u];
    for (int t = 0; t < len && t < tmax; ++t) {
      out.row(t * n + u) = x.row(static_cast<Eigen::Index>(len - 1 - t) * n + u);
    }
  }
  return out;
}

Lstm::Lstm(const std::string& name, Eigen::Index in, Eigen::Index hidden)
    : wx_(name + ".wx", 4 * hidden, in),
      wh_(name + ".wh", 4 * hidden, hidden),
      b_(name + ".b", 4 * hidden, 1) {}

void Lstm::init(Rng& rng) {
  const Eigen::Index h = hidden();
  init_glorot(wx_, wx_.value.cols(), h, rng);
  init_glorot(wh_, h, h, rng);
  b_.value.setZero();
  b_.value.block(h, 0, h, 1).setOnes();
}

Eigen::MatrixXd Lstm::forward(const Eigen::MatrixXd& x, int n, int tmax) {
  const Eigen::Index hd = hidden();
  if (x.cols() != wx_.value.cols() || x.rows() != static_cast<Eigen::Index>(n) * tmax) {
    throw DimensionMismatch(wx_.name + ": input shape mismatch");
  }
  n_ = n;
  tmax_ = tmax;
  x_ = x;
  gates_.noalias() = x * wx_.value.transpose();
  gates_.rowwise() += b_.value.col(0).transpose();
  c_.resize(x.rows(), hd);
  tc_.resize(x.rows(), hd);
  h_.resize(x.rows(), hd);
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(n, hd);
  Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(n, hd);
  for (int t = 0; t < tmax; ++t) {
    auto z = gates_.middleRows(static_cast<Eigen::Index>(t) * n, n);
    if (t > 0) z.noalias() += h_prev * wh_.value.transpose();
    z.leftCols(2 * hd) = (1.0 + (-z.leftCols(2 * hd).array()).exp()).inverse();
    z.middleCols(2 * hd, hd) = z.middleCols(2 * hd, hd).array().tanh();
    z.rightCols(hd) = (1.0 + (-z.rightCols(hd).array()).exp()).inverse();
    auto c = c_.middleRows(static_cast<Eigen::Index>(t) * n, n);
    c = z.middleCols(hd, hd).cwiseProduct(c_prev) +
        z.leftCols(hd).cwiseProduct(z.middleCols(2 * hd, hd));
    auto tc = tc_.middleRows(static_cast<Eigen::Index>(t) * n, n);
    tc = c.array().tanh();
    auto h = h_.middleRows(static_cast<Eigen::Index>(t) * n, n);
    h = z.rightCols(hd).cwiseProduct(tc);
    h_prev = h;
    c_prev = c;
  }
  return h_;
}

Eigen::MatrixXd Lstm::backward(const Eigen::MatrixXd& dh_out) {
  const Eigen::Index hd = hidden();
  const Eigen::Index n = n_;
  Eigen::MatrixXd dz(gates_.rows(), 4 * hd);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(n, hd);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(n, hd);
  for (int t = tmax_ - 1; t >= 0; --t) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(t) * n;
    auto z = gates_.middleRows(r0, n);
    auto i = z.leftCols(hd).array();
    auto f = z.middleCols(hd, hd).array();
    auto g = z.middleCols(2 * hd, hd).array();
    auto o = z.rightCols(hd).array();
    auto tc = tc_.middleRows(r0, n).array();
    Eigen::ArrayXXd dh = dh_out.middleRows(r0, n).array() + dh_next.array();
    Eigen::ArrayXXd dc = dh * o * (1.0 - tc.square()) + dc_next.array();
    Eigen::ArrayXXd c_prev = t > 0 ? Eigen::ArrayXXd(c_.middleRows(r0 - n, n).array())
                                   : Eigen::ArrayXXd::Zero(n, hd);
    auto d = dz.middleRows(r0, n);
    d.leftCols(hd) = (dc * g * i * (1.0 - i)).matrix();
    d.middleCols(hd, hd) = (dc * c_prev * f * (1.0 - f)).matrix();
    d.middleCols(2 * hd, hd) = (dc * i * (1.0 - g.square())).matrix();
    d.rightCols(hd) = (dh * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();
    dh_next.noalias() = d * wh_.value;
    if (t > 0) wh_.grad.noalias() += d.transpose() * h_.middleRows(r0 - n, n);
  }
  wx_.grad.noalias() += dz.transpose() * x_;
  b_.grad.col(0) += dz.colwise().sum().transpose();
  return dz * wx_.value;
}

BiLstm::BiLstm(const std::string& name, Eigen::Index in, Eigen::Index hidden)
    : fwd_(name + ".fwd", in, hidden), bwd_(name + ".bwd", in, hidden) {}

void BiLstm::init(Rng& rng) {
  fwd_.init(rng);
  bwd_.init(rng);
}

Eigen::MatrixXd BiLstm::forward(const SeqBatch& x) {
  lengths_ = x.lengths;
  tmax_ = x.tmax;
  const Eigen::Index hd = fwd_.hidden();
  Eigen::MatrixXd out(x.x.rows(), 2 * hd);
  out.leftCols(hd) = fwd_.forward(x.x, x.n(), x.tmax);
  Eigen::MatrixXd rev = bwd_.forward(reverse_valid(x.x, x.lengths, x.tmax), x.n(), x.tmax);
  out.rightCols(hd) = reverse_valid(rev, x.lengths, x.tmax);
  return out;
}

Eigen::MatrixXd BiLstm::backward(const Eigen::MatrixXd& dh) {
  const Eigen::Index hd = fwd_.hidden();
  Eigen::MatrixXd dx = fwd_.backward(dh.leftCols(hd));
  Eigen::MatrixXd drev = bwd_.backward(reverse_valid(dh.rightCols(hd), lengths_, tmax_));
  dx += reverse_valid(drev, lengths_, tmax_);
  return dx;
}

ParamList BiLstm::params() {
  ParamList out = fwd_.params();
  for (auto* p : bwd_.params()) out.push_back(p);
  return out;
}

AttentionPool::AttentionPool(const std::string& name, Eigen::Index in, Eigen::Index attn)
    : w_(name + ".w", attn, in), b_(name + ".b", attn, 1), v_(name + ".v", attn, 1) {}

void AttentionPool::init(Rng& rng) {
  init_glorot(w_, w_.value.cols(), w_.value.rows(), rng);
  b_.value.setZero();
  init_glorot(v_, v_.value.rows(), 1, rng);
}

Eigen::MatrixXd AttentionPool::forward(const Eigen::MatrixXd& h, const std::vector<int>& lengths,
                                       int tmax) {
  const auto n = static_cast<Eigen::Index>(lengths.size());
  if (h.cols() != w_.value.cols() || h.rows() != n * tmax) {
    throw DimensionMismatch(w_.name + ": input shape mismatch");
  }
  for (int len : lengths) {
    if (len < 1 || len > tmax) throw DimensionMismatch(w_.name + ": bad sequence length");
  }
  lengths_ = lengths;
  tmax_ = tmax;
  h_ = h;
  s_.noalias() = h * w_.value.transpose();
  s_.rowwise() += b_.value.col(0).transpose();
  s_ = s_.array().tanh();
  Eigen::VectorXd e = s_ * v_.value.col(0);
  alpha_ = Eigen::MatrixXd::Zero(tmax, n);
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(n, h.cols());
  for (Eigen::Index u = 0; u < n; ++u) {
    const int len = lengths[u];
    double mx = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < len; ++t) mx = std::max(mx, e(t * n + u));
    double z = 0.0;
    for (int t = 0; t < len; ++t) {
      alpha_(t, u) = std::exp(e(t * n + u) - mx);
      z += alpha_(t, u);
    }
    for (int t = 0; t < len; ++t) {
      alpha_(t, u) /= z;
      psi.row(u) += alpha_(t, u) * h.row(t * n + u);
    }
  }
  return psi;
}

Eigen::MatrixXd AttentionPool::backward(const Eigen::MatrixXd& dpsi) {
  const auto n = static_cast<Eigen::Index>(lengths_.size());
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(h_.rows(), h_.cols());
  Eigen::VectorXd de = Eigen::VectorXd::Zero(h_.rows());
  for (Eigen::Index u = 0; u < n; ++u) {
    const int len = lengths_[u];
    double dot = 0.0;
    for (int t = 0; t < len; ++t) {
      const Eigen::Index r = t * n + u;
      double da = dpsi.row(u).dot(h_.row(r));
      de(r) = da;
      dot += alpha_(t, u) * da;
      dh.row(r) += alpha_(t, u) * dpsi.row(u);
    }
    for (int t = 0; t < len; ++t) {
      const Eigen::Index r = t * n + u;
      de(r) = alpha_(t, u) * (de(r) - dot);
    }
  }
  v_.grad.col(0).noalias() += s_.transpose() * de;
  Eigen::MatrixXd ds = (de * v_.value.col(0).transpose()).array() * (1.0 - s_.array().square());
  w_.grad.noalias() += ds.transpose() * h_;
  b_.grad.col(0) += ds.colwise().sum().transpose();
  dh.noalias() += ds * w_.value;
  return dh;
}

LayerWeightedSum::LayerWeightedSum(const std::string& name, Eigen::Index layers)
    : w_(name + ".w", layers, 1) {}

Eigen::MatrixXd LayerWeightedSum::forward(const std::vector<Eigen::MatrixXd>& layers) {
  if (static_cast<Eigen::Index>(layers.size()) != w_.value.rows()) {
    throw LayerCountMismatch("expected " + std::to_string(w_.value.rows()) + " layers, got " +
                             std::to_string(layers.size()));
  }
  s_ = softmax(w_.value.col(0));
  inputs_ = layers;
  Eigen::MatrixXd h = s_(0) * layers[0];
  for (std::size_t l = 1; l < layers.size(); ++l) h += s_(static_cast<Eigen::Index>(l)) * layers[l];
  return h;
}

void LayerWeightedSum::backward(const Eigen::MatrixXd& dh) {
  Eigen::VectorXd ds(s_.size());
  for (Eigen::Index l = 0; l < s_.size(); ++l) ds(l) = (dh.array() * inputs_[l].array()).sum();
  w_.grad.col(0) += softmax_backward(s_, ds);
}

double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                Eigen::MatrixXd* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionMismatch("prediction and target shapes differ");
  }
  const double n = static_cast<double>(pred.size());
  Eigen::MatrixXd diff = pred - target;
  if (grad) *grad = 2.0 / n * diff;
  return diff.squaredNorm() / n;
}

}  // namespace rie::nn
