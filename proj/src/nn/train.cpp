#include "rie/nn/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "rie/binary_io.hpp"
#include "rie/error.hpp"

namespace rie::nn {

TrainConfig featnet_train_config() {
  TrainConfig c;
  c.optimizer.kind = OptimizerKind::kAdam;
  c.optimizer.lr = 1e-3;
  return c;
}

TrainConfig sslhead_train_config() {
  TrainConfig c;
  c.optimizer.kind = OptimizerKind::kAdamW;
  c.optimizer.lr = 2e-3;
  c.optimizer.weight_decay = 0.01;
  return c;
}

namespace {

Eigen::MatrixXd targets(const Eigen::MatrixXd& labels, std::span<const std::size_t> idx,
                        bool augment) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd y(augment ? 2 * n : n, labels.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    y.row(k) = labels.row(static_cast<Eigen::Index>(idx[k]));
    if (augment) y.row(n + k) = -labels.row(static_cast<Eigen::Index>(idx[k]));
  }
  return y;
}

double evaluate(PairTask& task, const std::vector<std::size_t>& idx, std::size_t batch) {
  double sse = 0.0;
  double count = 0.0;
  for (std::size_t s = 0; s < idx.size(); s += batch) {
    std::span<const std::size_t> b(idx.data() + s, std::min(batch, idx.size() - s));
    Eigen::MatrixXd pred = task.forward(b, false);
    sse += (pred - targets(task.labels, b, false)).squaredNorm();
    count += static_cast<double>(pred.size());
  }
  return sse / count;
}

}  // namespace

TrainResult train(PairTask& task, const TrainConfig& cfg) {
  if (task.size == 0) throw Error("training set is empty");
  if (cfg.batch_size < 1) throw Error("batch_size must be >= 1");
  if (!(cfg.optimizer.lr >= 0.0)) throw Error("learning rate must be >= 0");
  if (static_cast<std::size_t>(task.labels.rows()) != task.size) {
    throw DimensionMismatch("label rows do not match the pair count");
  }

  std::vector<std::size_t> all(task.size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> train_idx = all, val_idx;
  const bool use_val = cfg.early_stopping && cfg.val_fraction > 0.0 && task.size >= 10;
  if (use_val) {
    Rng split(derive_seed(cfg.seed, std::string_view("validation")));
    split.shuffle(std::span(all));
    auto n_val = static_cast<std::size_t>(std::ceil(cfg.val_fraction * task.size));
    val_idx.assign(all.begin(), all.begin() + n_val);
    train_idx.assign(all.begin() + n_val, all.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
  }

  Optimizer opt(task.params, cfg.optimizer);
  Rng order(derive_seed(cfg.seed, std::string_view("epochs")));
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> best_values;
  int since_best = 0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    order.shuffle(std::span(train_idx));
    double loss_sum = 0.0;
    double rows = 0.0;
    for (std::size_t s = 0; s < train_idx.size(); s += batch) {
      std::span<const std::size_t> b(train_idx.data() + s, std::min(batch, train_idx.size() - s));
      zero_grads(task.params);
      Eigen::MatrixXd pred = task.forward(b, cfg.augment);
      Eigen::MatrixXd grad;
      double loss = mse_loss(pred, targets(task.labels, b, cfg.augment), &grad);
      if (!std::isfinite(loss)) {
        throw DivergenceDetected("non-finite loss at epoch " + std::to_string(epoch));
      }
      task.backward(grad);
      if (cfg.clip_norm > 0.0) clip_grad_norm(task.params, cfg.clip_norm);
      opt.step();
      loss_sum += loss * static_cast<double>(pred.rows());
      rows += static_cast<double>(pred.rows());
    }
    EpochLoss e;
    e.epoch = epoch;
    e.train_mse = loss_sum / rows;
    e.val_mse = std::numeric_limits<double>::quiet_NaN();
    if (use_val) {
      e.val_mse = evaluate(task, val_idx, 64);
      if (!std::isfinite(e.val_mse)) {
        throw DivergenceDetected("non-finite validation loss at epoch " + std::to_string(epoch));
      }
      if (e.val_mse < best) {
        best = e.val_mse;
        result.best_epoch = epoch;
        since_best = 0;
        best_values.clear();
        for (const auto* p : task.params) best_values.push_back(p->value);
      } else if (++since_best >= cfg.patience) {
        result.curve.push_back(e);
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
    result.curve.push_back(e);
  }
  if (use_val && !best_values.empty()) {
    for (std::size_t k = 0; k < task.params.size(); ++k) task.params[k]->value = best_values[k];
  }
  result.steps = opt.steps();
  return result;
}

PairTask featnet_task(FeatNet& net, const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                      const Eigen::MatrixXd& labels) {
  if (xa.rows() != xb.rows() || xa.cols() != xb.cols()) {
    throw DimensionMismatch("featnet inputs differ in shape");
  }
  PairTask t;
  t.size = static_cast<std::size_t>(xa.rows());
  t.labels = labels;
  t.params = net.params();
  t.forward = [&net, &xa, &xb](std::span<const std::size_t> idx, bool augment) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index p = xa.cols();
    Eigen::MatrixXd x(augment ? 2 * n : n, 2 * p);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(idx[k]);
      x.row(k) << xa.row(i), xb.row(i);
      if (augment) x.row(n + k) << xb.row(i), xa.row(i);
    }
    return net.forward(x);
  };
  t.backward = [&net](const Eigen::MatrixXd& dy) { net.backward(dy); };
  return t;
}

PairTask sslhead_task(SslHead& net, std::vector<const EmbeddingSequence*> a,
                      std::vector<const EmbeddingSequence*> b, const Eigen::MatrixXd& labels) {
  if (a.size() != b.size()) throw DimensionMismatch("pair lists differ in length");
  PairTask t;
  t.size = a.size();
  t.labels = labels;
  t.params = net.params();
  t.forward = [&net, a = std::move(a), b = std::move(b)](std::span<const std::size_t> idx,
                                                          bool augment) {
    std::vector<const EmbeddingSequence*> utts;
    std::map<const EmbeddingSequence*, int> slot;
    auto index_of = [&](const EmbeddingSequence* e) {
      auto [it, inserted] = slot.emplace(e, static_cast<int>(utts.size()));
      if (inserted) utts.push_back(e);
      return it->second;
    };
    std::vector<std::pair<int, int>> rows;
    for (auto i : idx) rows.emplace_back(index_of(a[i]), index_of(b[i]));
    if (augment) {
      for (std::size_t k = 0; k < idx.size(); ++k) rows.emplace_back(rows[k].second, rows[k].first);
    }
    return net.forward_pairs(utts, rows);
  };
  t.backward = [&net](const Eigen::MatrixXd& dy) { net.backward_pairs(dy); };
  return t;
}

Eigen::MatrixXd predict_sslhead(SslHead& net, std::span<const EmbeddingSequence* const> a,
                                std::span<const EmbeddingSequence* const> b, std::size_t batch) {
  if (a.size() != b.size()) throw DimensionMismatch("pair lists differ in length");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), net.config().output);
  for (std::size_t s = 0; s < a.size(); s += batch) {
    std::size_t m = std::min(batch, a.size() - s);
    out.middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m)) =
        net.forward(a.subspan(s, m), b.subspan(s, m));
  }
  return out;
}

void write_loss_curve(const std::filesystem::path& path, const TrainResult& result) {
  std::ostringstream os;
  os << "epoch,train_mse,val_mse\n";
  char buf[96];
  for (const auto& e : result.curve) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.train_mse, e.val_mse);
    os << buf;
  }
  write_file_atomic(path, os.str());
}

double grad_check(const std::function<double()>& loss, const ParamList& tensors, double eps) {
  double worst = 0.0;
  for (auto* t : tensors) {
    for (Eigen::Index i = 0; i < t->value.size(); ++i) {
      double& v = t->value.data()[i];
      const double orig = v;
      v = orig + eps;
      double up = loss();
      v = orig - eps;
      double down = loss();
      v = orig;
      double numeric = (up - down) / (2.0 * eps);
      double analytic = t->grad.data()[i];
      double denom = std::max(std::fabs(analytic) + std::fabs(numeric), 1e-8);
      worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace rie::nn
