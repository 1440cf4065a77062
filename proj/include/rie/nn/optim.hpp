#pragma once

#include <vector>

#include "rie/nn/tensor.hpp"

namespace rie::nn {

enum class OptimizerKind { kSgd, kAdam, kAdamW };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, AdamW only
};

/// Adam / AdamW (decoupled decay, p -= lr*wd*p before the Adam step) and
/// plain SGD over a fixed parameter list.
class Optimizer {
 public:
  Optimizer(ParamList params, OptimizerConfig cfg);

  void step();
  long steps() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  ParamList params_;
  OptimizerConfig cfg_;
  std::vector<Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

/// Scales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);

}  // namespace rie::nn
