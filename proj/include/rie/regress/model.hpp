#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rie/exec.hpp"

namespace rie {

enum class ModelKind : std::uint32_t {
  kLinear = 0,
  kRidge,
  kPls2,
  kRf,
  kGbdt,
  kSvr,
  kFeatNet,  // neural checkpoints share the RIEM header
  kSslHead,
};

std::string_view to_string(ModelKind kind);
/// Accepts "linear", "ridge", "pls2", "rf", "gbdt", "svr", "featnet", "sslhead".
ModelKind model_kind_from_string(std::string_view name);

/// Per-feature z-scoring with population statistics; constant columns keep
/// scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Regression tree stored as a flat node array; node 0 is the root.
struct Tree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when x <= threshold
    double value = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };
  std::vector<Node> nodes;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

enum class SplitCriterion { kVariance, kFriedman };

struct TreeConfig {
  int max_depth = 0;        // 0 = unlimited
  int min_leaf = 1;
  int max_features = 0;     // 0 = all
  SplitCriterion criterion = SplitCriterion::kVariance;
};

/// Grows one CART regression tree on the rows listed in `rows` (duplicates
/// allowed for bootstrap samples). `seed` only matters with max_features.
Tree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const std::vector<Eigen::Index>& rows, const TreeConfig& cfg,
               std::uint64_t seed = 0);

/// Split score used by the Friedman criterion: n_l*n_r/(n_l+n_r)*(mean_l-mean_r)^2.
double friedman_improvement(double n_left, double sum_left, double n_right, double sum_right);

struct RfConfig {
  int n_trees = 300;
  TreeConfig tree{};
};

struct GbdtConfig {
  int n_estimators = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
};

struct SvrConfig {
  double c = 10.0;
  double epsilon = 0.1;
  double gamma = 0.0;  // 0 = "scale": 1 / (p * Var(X_std))
  double tolerance = 1e-3;
  long max_iterations = 100000;
};

/// A fitted estimator for one impression axis (or all axes for
/// multi-output PLS2). Immutable after fitting.
struct ClassicalModel {
  ModelKind kind = ModelKind::kLinear;
  std::uint32_t dimension = 0;
  std::vector<std::string> feature_names;
  Standardizer standardizer;

  // linear, ridge, pls2: outputs = X_std * coef + intercepts
  Eigen::MatrixXd coef;
  Eigen::VectorXd intercepts;

  // rf, gbdt: base + scale * sum(tree outputs)
  std::vector<Tree> trees;
  double base = 0.0;
  double scale = 1.0;

  // svr: sum_i dual_coef_i * exp(-gamma |x_i - x|^2) + bias
  Eigen::MatrixXd support_vectors;
  Eigen::VectorXd dual_coef;
  double gamma = 0.0;
  double bias = 0.0;

  std::size_t outputs() const;
};

ClassicalModel fit_linear(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                          const Eigen::VectorXd& y, std::uint32_t dimension = 0);
ClassicalModel fit_ridge(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                         const Eigen::VectorXd& y, double alpha = 0.5,
                         std::uint32_t dimension = 0);
/// PLS2 with NIPALS deflation; y may have one column (per-axis mode) or several.
ClassicalModel fit_pls2(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                        const Eigen::MatrixXd& y, int n_components = 5,
                        std::uint32_t dimension = 0);
ClassicalModel fit_rf(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                      const Eigen::VectorXd& y, const RfConfig& cfg, std::uint64_t seed,
                      Exec exec = Exec::kSerial, std::uint32_t dimension = 0);
ClassicalModel fit_gbdt(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                        const Eigen::VectorXd& y, const GbdtConfig& cfg = {},
                        std::uint32_t dimension = 0);
ClassicalModel fit_svr(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                       const Eigen::VectorXd& y, const SvrConfig& cfg = {},
                       std::uint32_t dimension = 0);

/// Columns of `x` are matched to the model by name. Throws FeatureMismatch
/// on missing names or non-finite inputs. Returns n x outputs().
Eigen::MatrixXd predict_all(const ClassicalModel& model, const Eigen::MatrixXd& x,
                            const std::vector<std::string>& names);
Eigen::VectorXd predict(const ClassicalModel& model, const Eigen::MatrixXd& x,
                        const std::vector<std::string>& names, std::size_t output = 0);

/// K_ij = exp(-gamma * |a_i - b_j|^2) over rows.
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma);

inline constexpr std::uint32_t kModelVersion = 1;

std::vector<std::uint8_t> serialize_model(const ClassicalModel& model);
ClassicalModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const ClassicalModel& model, const std::filesystem::path& path);
ClassicalModel load_model(const std::filesystem::path& path);

}  // namespace rie
