#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rie/rng.hpp"

namespace rie::nn {

/// Trainable 2-D parameter with its accumulated gradient. Vectors are
/// stored as n x 1.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}

  std::vector<Eigen::Index> shape() const { return {value.rows(), value.cols()}; }
  void zero_grad() { grad.setZero(); }
};

using ParamList = std::vector<Tensor*>;

void zero_grads(const ParamList& params);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void init_glorot(Tensor& t, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

/// Throws FiniteCheckFailure naming the first tensor holding a NaN/Inf.
void check_finite(const ParamList& params);

}  // namespace rie::nn
