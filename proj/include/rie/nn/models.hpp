#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rie/corpus.hpp"
#include "rie/nn/layers.hpp"

namespace rie::nn {

struct FeatNetConfig {
  Eigen::Index input_dim = 20;  // 2 x features per utterance
  std::vector<Eigen::Index> hidden{64, 64, 64};
  Eigen::Index output = 9;
};

/// MLP over the concatenation [phi_a; phi_b] of standardized descriptors.
class FeatNet {
 public:
  explicit FeatNet(FeatNetConfig cfg = {}, std::uint64_t seed = 0);

  /// xa, xb: n x (input_dim / 2). Returns n x output.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x_concat);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy);
  ParamList params() { return mlp_.params(); }
  const FeatNetConfig& config() const { return cfg_; }
  Mlp& mlp() { return mlp_; }

 private:
  FeatNetConfig cfg_;
  Mlp mlp_;
};

struct SslHeadConfig {
  std::uint32_t n_layers = 13;
  Eigen::Index frame_dim = 768;
  Eigen::Index lstm_hidden = 64;  // per direction; utterance embedding is 2x
  Eigen::Index attention_dim = 64;
  std::vector<Eigen::Index> mlp_hidden{128, 64};
  Eigen::Index output = 9;

  Eigen::Index utterance_dim() const { return 2 * lstm_hidden; }
};

/// Layer-weighted sum -> BiLSTM -> attention pooling per utterance, then an
/// MLP over [psi_a; psi_b].
class SslHead {
 public:
  explicit SslHead(SslHeadConfig cfg = {}, std::uint64_t seed = 0);

  /// Utterance embeddings psi, one row per sequence (n x utterance_dim).
  Eigen::MatrixXd encode(std::span<const EmbeddingSequence* const> utts);
  void encode_backward(const Eigen::MatrixXd& dpsi);

  /// rows[k] = (index of a, index of b) into `utts`; returns rows x output.
  /// Each distinct utterance is encoded once.
  Eigen::MatrixXd forward_pairs(std::span<const EmbeddingSequence* const> utts,
                                const std::vector<std::pair<int, int>>& rows);
  void backward_pairs(const Eigen::MatrixXd& dy);

  /// Convenience: one prediction per (a[i], b[i]).
  Eigen::MatrixXd forward(std::span<const EmbeddingSequence* const> a,
                          std::span<const EmbeddingSequence* const> b);

  ParamList params();
  const SslHeadConfig& config() const { return cfg_; }
  Eigen::VectorXd layer_weights() const { return weighted_.weights(); }
  const AttentionPool& attention() const { return attn_; }

 private:
  SslHeadConfig cfg_;
  LayerWeightedSum weighted_;
  BiLstm lstm_;
  AttentionPool attn_;
  Mlp mlp_;
  std::vector<std::pair<int, int>> rows_;
  Eigen::Index n_utts_ = 0;
};

/// Converts a batch of sequences to per-layer padded matrices.
std::vector<Eigen::MatrixXd> pad_layers(std::span<const EmbeddingSequence* const> utts,
                                        std::vector<int>& lengths, int& tmax);

struct FeatNetCheckpoint {
  FeatNet net;
  std::vector<std::string> feature_names;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

void save_featnet(const std::filesystem::path& path, FeatNet& net,
                  const std::vector<std::string>& feature_names, const Eigen::VectorXd& mean,
                  const Eigen::VectorXd& scale);
FeatNetCheckpoint load_featnet(const std::filesystem::path& path);
void save_sslhead(const std::filesystem::path& path, SslHead& net);
SslHead load_sslhead(const std::filesystem::path& path);

}  // namespace rie::nn
