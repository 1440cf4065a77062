#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "rie/nn/models.hpp"
#include "rie/nn/optim.hpp"

namespace rie::nn {

struct TrainConfig {
  OptimizerConfig optimizer{};
  int batch_size = 8;
  int max_epochs = 500;
  int patience = 20;
  double val_fraction = 0.1;
  bool early_stopping = true;
  /// Each pair (a, b, r) in a batch also contributes (b, a, -r).
  bool augment = true;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;
};

/// Featnet defaults: Adam, lr 1e-3, batch 8.
TrainConfig featnet_train_config();
/// SSL head defaults: AdamW, lr 2e-3, weight decay 0.01, batch 8.
TrainConfig sslhead_train_config();

struct EpochLoss {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;  // NaN without a validation split
};

struct TrainResult {
  std::vector<EpochLoss> curve;
  int best_epoch = 0;
  long steps = 0;
};

/// Binds a network to its pair data. `forward` receives pair indices and
/// returns one row per index, followed (when augmenting) by one row per
/// index for the swapped pair, in the same order.
struct PairTask {
  std::size_t size = 0;
  std::function<Eigen::MatrixXd(std::span<const std::size_t>, bool)> forward;
  std::function<void(const Eigen::MatrixXd&)> backward;
  ParamList params;
  Eigen::MatrixXd labels;  // size x outputs
};

/// Minibatch training with a seeded shuffle per epoch. With early stopping a
/// seeded validation share is held out and the best-validation parameters
/// are restored. Throws DivergenceDetected on a non-finite loss.
TrainResult train(PairTask& task, const TrainConfig& cfg);

PairTask featnet_task(FeatNet& net, const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                      const Eigen::MatrixXd& labels);
PairTask sslhead_task(SslHead& net, std::vector<const EmbeddingSequence*> a,
                      std::vector<const EmbeddingSequence*> b, const Eigen::MatrixXd& labels);

/// Batched inference.
Eigen::MatrixXd predict_sslhead(SslHead& net, std::span<const EmbeddingSequence* const> a,
                                std::span<const EmbeddingSequence* const> b,
                                std::size_t batch = 32);

void write_loss_curve(const std::filesystem::path& path, const TrainResult& result);

/// Central finite differences on every entry of `tensors` against their
/// accumulated .grad (the caller runs forward + backward once before).
/// Relative error is |a - n| / max(|a| + |n|, 1e-8).
double grad_check(const std::function<double()>& loss, const ParamList& tensors,
                  double eps = 1e-5);

}  // namespace rie::nn
