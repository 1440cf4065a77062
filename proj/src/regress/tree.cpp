#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "rie/error.hpp"
#include "rie/regress/model.hpp"
#include "rie/rng.hpp"

namespace rie {

namespace {

struct Pending {
  std::int32_t node;
  std::vector<Eigen::Index> rows;
  int depth;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;
};

Split best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const std::vector<Eigen::Index>& rows, const std::vector<int>& features,
                 const TreeConfig& cfg, double total) {
  const double n = static_cast<double>(rows.size());
  const double base = total * total / n;
  Split best;
  std::vector<Eigen::Index> order(rows);
  for (int j : features) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return x(a, j) < x(b, j); });
    double sum_l = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      sum_l += y(order[i]);
      double xl = x(order[i], j), xr = x(order[i + 1], j);
      if (!(xl < xr)) continue;
      double n_l = static_cast<double>(i + 1), n_r = n - n_l;
      if (n_l < cfg.min_leaf || n_r < cfg.min_leaf) continue;
      double sum_r = total - sum_l;
      double score = cfg.criterion == SplitCriterion::kFriedman
                         ? friedman_improvement(n_l, sum_l, n_r, sum_r)
                         : sum_l * sum_l / n_l + sum_r * sum_r / n_r - base;
      if (score > best.score) {
        double mid = 0.5 * (xl + xr);
        best = {j, mid < xr ? mid : xl, score};
      }
    }
  }
  return best;
}

}  // namespace

double friedman_improvement(double n_left, double sum_left, double n_right, double sum_right) {
  double diff = sum_left / n_left - sum_right / n_right;
  return n_left * n_right / (n_left + n_right) * diff * diff;
}

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  std::int32_t k = 0;
  while (nodes[k].feature >= 0) {
    k = row(nodes[k].feature) <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
  }
  return nodes[k].value;
}

Tree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const std::vector<Eigen::Index>& rows, const TreeConfig& cfg,
               std::uint64_t seed) {
  if (rows.empty()) throw Error("cannot grow a tree on zero rows");
  Rng rng(seed);
  const int p = static_cast<int>(x.cols());
  std::vector<int> all(p);
  std::iota(all.begin(), all.end(), 0);

  Tree tree;
  tree.nodes.emplace_back();
  std::vector<Pending> stack;
  stack.push_back({0, rows, 0});
  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    double total = 0.0, lo = y(cur.rows[0]), hi = lo;
    for (auto r : cur.rows) {
      total += y(r);
      lo = std::min(lo, y(r));
      hi = std::max(hi, y(r));
    }
    const double n = static_cast<double>(cur.rows.size());
    tree.nodes[cur.node].value = total / n;
    bool depth_ok = cfg.max_depth <= 0 || cur.depth < cfg.max_depth;
    if (!depth_ok || cur.rows.size() < 2u * static_cast<std::size_t>(cfg.min_leaf) || lo == hi) {
      continue;
    }
    std::vector<int> features = all;
    if (cfg.max_features > 0 && cfg.max_features < p) {
      rng.shuffle(std::span(features));
      features.resize(cfg.max_features);
      std::sort(features.begin(), features.end());
    }
    Split s = best_split(x, y, cur.rows, features, cfg, total);
    if (s.feature < 0 || s.score <= 1e-12 * (1.0 + std::fabs(total * total / n))) continue;

    std::vector<Eigen::Index> left, right;
    for (auto r : cur.rows) (x(r, s.feature) <= s.threshold ? left : right).push_back(r);
    auto li = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[cur.node];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = li;
    node.right = li + 1;
    stack.push_back({li + 1, std::move(right), cur.depth + 1});
    stack.push_back({li, std::move(left), cur.depth + 1});
  }
  return tree;
}

namespace {

void check_tree_inputs(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                       const Eigen::VectorXd& y) {
  if (static_cast<std::size_t>(x.cols()) != names.size() || x.rows() != y.size()) {
    throw FeatureMismatch("design, names and target disagree in shape");
  }
  if (x.rows() < 5) throw TooFewSamples("tree ensembles need at least 5 samples");
  if (!x.allFinite() || !y.allFinite()) throw FeatureMismatch("non-finite training value");
}

}  // namespace

ClassicalModel fit_rf(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                      const Eigen::VectorXd& y, const RfConfig& cfg, std::uint64_t seed,
                      Exec exec, std::uint32_t dimension) {
  check_tree_inputs(x, names, y);
  if (cfg.n_trees < 1) throw Error("n_trees must be >= 1");
  ClassicalModel m;
  m.kind = ModelKind::kRf;
  m.dimension = dimension;
  m.feature_names = names;
  m.standardizer = Standardizer::fit(x);
  Eigen::MatrixXd z = m.standardizer.apply(x);
  m.trees.resize(cfg.n_trees);
  m.base = 0.0;
  m.scale = 1.0 / cfg.n_trees;

  const Eigen::Index n = x.rows();
  std::vector<std::exception_ptr> errors(cfg.n_trees);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(exec))
  for (int t = 0; t < cfg.n_trees; ++t) {
    try {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
      std::vector<Eigen::Index> rows(n);
      for (auto& r : rows) r = static_cast<Eigen::Index>(rng.index(n));
      m.trees[t] = grow_tree(z, y, rows, cfg.tree, rng.next_u64());
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return m;
}

ClassicalModel fit_gbdt(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                        const Eigen::VectorXd& y, const GbdtConfig& cfg,
                        std::uint32_t dimension) {
  check_tree_inputs(x, names, y);
  if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) {
    throw Error("learning_rate must be in (0, 1]");
  }
  ClassicalModel m;
  m.kind = ModelKind::kGbdt;
  m.dimension = dimension;
  m.feature_names = names;
  m.standardizer = Standardizer::fit(x);
  Eigen::MatrixXd z = m.standardizer.apply(x);
  m.base = y.mean();
  m.scale = cfg.learning_rate;

  std::vector<Eigen::Index> rows(x.rows());
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  TreeConfig tc;
  tc.max_depth = cfg.max_depth;
  tc.criterion = SplitCriterion::kFriedman;
  Eigen::VectorXd f = Eigen::VectorXd::Constant(y.size(), m.base);
  for (int s = 0; s < cfg.n_estimators; ++s) {
    Eigen::VectorXd residual = y - f;
    Tree t = grow_tree(z, residual, rows, tc);
    for (Eigen::Index i = 0; i < z.rows(); ++i) f(i) += cfg.learning_rate * t.predict(z.row(i));
    m.trees.push_back(std::move(t));
  }
  return m;
}

}  // namespace rie
