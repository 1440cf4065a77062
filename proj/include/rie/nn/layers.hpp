#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rie/nn/tensor.hpp"

namespace rie::nn {

/// Batch-major dense layer: Y = X W' + b, X is n x in.
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, Eigen::Index in, Eigen::Index out);

  void init(Rng& rng);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy);
  ParamList params() { return {&w_, &b_}; }

  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }
  Eigen::Index in_features() const { return w_.value.cols(); }
  Eigen::Index out_features() const { return w_.value.rows(); }

 private:
  Tensor w_, b_;
  Eigen::MatrixXd x_;
};

enum class Activation { kRelu, kTanh, kSigmoid };

class Elementwise {
 public:
  explicit Elementwise(Activation a = Activation::kRelu) : act_(a) {}
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy) const;

 private:
  Activation act_;
  Eigen::MatrixXd y_;
  Eigen::MatrixXd x_;
};

/// Softmax of a vector and its vector-Jacobian product.
Eigen::VectorXd softmax(const Eigen::VectorXd& z);
Eigen::VectorXd softmax_backward(const Eigen::VectorXd& s, const Eigen::VectorXd& ds);

/// Linear layers with ReLU between them and a linear output.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const std::vector<Eigen::Index>& sizes);

  void init(Rng& rng);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy);
  ParamList params();
  std::vector<Linear>& layers() { return layers_; }

 private:
  std::vector<Linear> layers_;
  std::vector<Elementwise> acts_;
};

/// Right-padded batch of sequences, time-major: row t * n + u holds frame t
/// of sequence u. Rows past a sequence's length are zero.
struct SeqBatch {
  Eigen::MatrixXd x;
  std::vector<int> lengths;
  int tmax = 0;

  int n() const { return static_cast<int>(lengths.size()); }
  Eigen::Index row(int t, int u) const { return static_cast<Eigen::Index>(t) * n() + u; }
};

/// Same sequences with each one's valid frames reversed in time.
Eigen::MatrixXd reverse_valid(const Eigen::MatrixXd& x, const std::vector<int>& lengths, int tmax);

/// One-direction LSTM over a SeqBatch. Gates ordered i, f, g, o.
class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, Eigen::Index in, Eigen::Index hidden);

  void init(Rng& rng);  // forget-gate bias 1
  /// Returns (tmax * n) x hidden; padded rows carry unspecified values.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, int n, int tmax);
  /// dh must be zero on padded rows.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dh);
  ParamList params() { return {&wx_, &wh_, &b_}; }
  Eigen::Index hidden() const { return wh_.value.cols(); }

 private:
  Tensor wx_, wh_, b_;
  int n_ = 0, tmax_ = 0;
  Eigen::MatrixXd x_;
  Eigen::MatrixXd gates_;  // (tmax*n) x 4H, activated
  Eigen::MatrixXd c_, tc_, h_;
};

class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(const std::string& name, Eigen::Index in, Eigen::Index hidden);

  void init(Rng& rng);
  /// (tmax * n) x 2H: forward states then backward states.
  Eigen::MatrixXd forward(const SeqBatch& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dh);
  ParamList params();

 private:
  Lstm fwd_, bwd_;
  std::vector<int> lengths_;
  int tmax_ = 0;
};

/// u_t = v' tanh(W h_t + b), alpha = softmax over valid frames,
/// psi = sum_t alpha_t h_t.
class AttentionPool {
 public:
  AttentionPool() = default;
  AttentionPool(const std::string& name, Eigen::Index in, Eigen::Index attn);

  void init(Rng& rng);
  /// h is (tmax * n) x in; returns n x in.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& h, const std::vector<int>& lengths, int tmax);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dpsi);
  ParamList params() { return {&w_, &b_, &v_}; }
  /// Attention weights of the last forward, (tmax x n), zero on padding.
  const Eigen::MatrixXd& alpha() const { return alpha_; }

 private:
  Tensor w_, b_, v_;
  std::vector<int> lengths_;
  int tmax_ = 0;
  Eigen::MatrixXd h_, s_, alpha_;
};

/// H = sum_l softmax(w)_l E_l over L stacked inputs.
class LayerWeightedSum {
 public:
  LayerWeightedSum() = default;
  LayerWeightedSum(const std::string& name, Eigen::Index layers);

  Eigen::MatrixXd forward(const std::vector<Eigen::MatrixXd>& layers);
  void backward(const Eigen::MatrixXd& dh);
  ParamList params() { return {&w_}; }
  Eigen::VectorXd weights() const { return softmax(w_.value.col(0)); }

 private:
  Tensor w_;
  std::vector<Eigen::MatrixXd> inputs_;
  Eigen::VectorXd s_;
};

/// Mean over all elements of (pred - target)^2; grad receives dL/dpred.
double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                Eigen::MatrixXd* grad = nullptr);

}  // namespace rie::nn
