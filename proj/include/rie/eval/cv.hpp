#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rie/corpus.hpp"
#include "rie/exec.hpp"
#include "rie/features.hpp"
#include "rie/nn/train.hpp"
#include "rie/regress/model.hpp"
#include "rie/regress/selection.hpp"

namespace rie::eval {

/// Seeded shuffle of the sorted pair ids, then round-robin over k folds.
struct FoldPlan {
  int k = 10;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignments;

  int fold_of(const std::string& pair_id) const;
  /// Pair ids of one fold, sorted.
  std::vector<std::string> members(int fold) const;
  std::vector<std::size_t> sizes() const;
};

/// Throws TooFewPairs when fewer ids than folds, Error on k < 2 or
/// duplicate ids.
FoldPlan make_folds(std::vector<std::string> pair_ids, int k = 10, std::uint64_t seed = 0);

/// Pearson and CCC for one (axis, method) cell. nullopt marks an undefined
/// Pearson (constant input).
struct Cell {
  std::optional<double> pearson;
  std::optional<double> ccc;
};

using AxisScores = std::array<Cell, kAxes>;

/// CCC is 0 when exactly one side is constant; both undefined when both are.
Cell score_axis(std::span<const double> pred, std::span<const double> truth);
AxisScores score(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// Axes x methods grid of cells.
struct ResultTable {
  std::vector<std::string> methods;
  std::vector<AxisScores> columns;

  void add(std::string method, const AxisScores& scores);
  const Cell& at(std::size_t axis, std::size_t method) const { return columns[method][axis]; }
};

/// What to fit inside each training fold.
struct MethodSpec {
  std::string name;
  ModelKind kind = ModelKind::kRidge;
  std::size_t select_k = 8;
  double ridge_alpha = 0.5;
  int pls_components = 5;
  /// PLS2 over the union of the per-axis selections with all nine outputs.
  bool pls_shared = false;
  RfConfig rf{};
  GbdtConfig gbdt{};
  SvrConfig svr{};
  nn::TrainConfig train{};
  nn::SslHeadConfig ssl{};
  std::vector<Eigen::Index> featnet_hidden{64, 64, 64};
  std::uint64_t seed = 0;
};

/// Default hyperparameters for a model kind.
MethodSpec default_method(ModelKind kind, std::uint64_t seed = 0);

/// Everything the harness needs, one row per pair in `pair_ids` order.
struct CvData {
  std::vector<std::string> pair_ids;
  std::vector<std::string> diff_names;
  Eigen::MatrixXd diff;       // phi(b) - phi(a) over diff_names
  std::vector<std::string> utt_names;
  Eigen::MatrixXd feat_a;     // per-utterance descriptors for the feature net
  Eigen::MatrixXd feat_b;
  std::vector<const EmbeddingSequence*> emb_a;  // may be empty
  std::vector<const EmbeddingSequence*> emb_b;
  Eigen::MatrixXd labels;     // n x 9
};

/// Assembles CvData from per-utterance features and embeddings. Pairs
/// without labels are dropped; a missing feature or embedding throws.
CvData build_cv_data(std::span<const UtterancePair> pairs,
                     const std::map<std::string, ImpressionVector>& labels,
                     const std::map<std::string, FeatureVector>& features,
                     const std::map<std::string, EmbeddingSequence>* embeddings = nullptr);

struct FoldRecord {
  int fold = 0;
  std::vector<SelectionReport> selections;  // per axis; empty for the nets
  std::optional<nn::TrainResult> training;
};

struct CvResult {
  std::string method;
  Eigen::MatrixXd predictions;  // pooled held-out predictions, pair order
  AxisScores scores;
  std::vector<FoldRecord> folds;
};

/// Fits on k-1 folds (selection and standardization inside the training
/// folds only), predicts the held-out fold, then scores the pooled
/// predictions once per axis. Folds may run concurrently; results are
/// assembled by fold index.
CvResult cross_validate(const MethodSpec& spec, const CvData& data, const FoldPlan& plan,
                        Exec exec = Exec::kSerial);

/// Per-axis selection + fit for classical kinds on the given rows.
struct ClassicalFit {
  std::vector<SelectionReport> selections;
  std::vector<ClassicalModel> models;  // one per axis, or one shared PLS2
};
ClassicalFit fit_classical(const MethodSpec& spec, const Eigen::MatrixXd& diff,
                           const std::vector<std::string>& names, const Eigen::MatrixXd& labels);
Eigen::MatrixXd predict_classical(const ClassicalFit& fit, const Eigen::MatrixXd& diff,
                                  const std::vector<std::string>& names);

}  // namespace rie::eval
