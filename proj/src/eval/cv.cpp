#include "rie/eval/cv.hpp"

#include <algorithm>
#include <exception>
#include <set>

#include "rie/error.hpp"
#include "rie/rng.hpp"
#include "rie/stats.hpp"

namespace rie::eval {

int FoldPlan::fold_of(const std::string& pair_id) const {
  auto it = assignments.find(pair_id);
  if (it == assignments.end()) throw Error("pair " + pair_id + " is not in the fold plan");
  return it->second;
}

std::vector<std::string> FoldPlan::members(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignments) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::sizes() const {
  std::vector<std::size_t> s(static_cast<std::size_t>(k), 0);
  for (const auto& [id, f] : assignments) ++s[static_cast<std::size_t>(f)];
  return s;
}

FoldPlan make_folds(std::vector<std::string> pair_ids, int k, std::uint64_t seed) {
  if (k < 2) throw Error("fold count must be >= 2");
  if (pair_ids.size() < static_cast<std::size_t>(k)) {
    throw TooFewPairs(std::to_string(pair_ids.size()) + " pairs for " + std::to_string(k) +
                      " folds");
  }
  std::sort(pair_ids.begin(), pair_ids.end());
  if (std::adjacent_find(pair_ids.begin(), pair_ids.end()) != pair_ids.end()) {
    throw DuplicatePairId("duplicate pair id in fold plan input");
  }
  Rng rng(derive_seed(seed, std::string_view("folds")));
  rng.shuffle(std::span(pair_ids));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < pair_ids.size(); ++i) {
    plan.assignments[pair_ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return plan;
}

Cell score_axis(std::span<const double> pred, std::span<const double> truth) {
  Cell c;
  c.pearson = pearson(pred, truth);
  c.ccc = ccc(pred, truth);
  return c;
}

AxisScores score(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != static_cast<Eigen::Index>(kAxes) ||
      truth.cols() != static_cast<Eigen::Index>(kAxes)) {
    throw DimensionMismatch("score expects two n x 9 matrices");
  }
  AxisScores s;
  for (std::size_t d = 0; d < kAxes; ++d) {
    Eigen::VectorXd p = pred.col(static_cast<Eigen::Index>(d));
    Eigen::VectorXd t = truth.col(static_cast<Eigen::Index>(d));
    s[d] = score_axis(std::span(p.data(), static_cast<std::size_t>(p.size())),
                      std::span(t.data(), static_cast<std::size_t>(t.size())));
  }
  return s;
}

void ResultTable::add(std::string method, const AxisScores& scores) {
  methods.push_back(std::move(method));
  columns.push_back(scores);
}

MethodSpec default_method(ModelKind kind, std::uint64_t seed) {
  MethodSpec m;
  m.kind = kind;
  m.name = std::string(to_string(kind));
  m.seed = seed;
  if (kind == ModelKind::kGbdt) m.gbdt = GbdtConfig{};
  if (kind == ModelKind::kFeatNet) m.train = nn::featnet_train_config();
  if (kind == ModelKind::kSslHead) m.train = nn::sslhead_train_config();
  return m;
}

CvData build_cv_data(std::span<const UtterancePair> pairs,
                     const std::map<std::string, ImpressionVector>& labels,
                     const std::map<std::string, FeatureVector>& features,
                     const std::map<std::string, EmbeddingSequence>* embeddings) {
  CvData d;
  d.diff_names = feature_names();
  d.utt_names = featnet_feature_names();
  std::vector<const UtterancePair*> kept;
  for (const auto& p : pairs) {
    if (labels.count(p.pair_id)) kept.push_back(&p);
  }
  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto p = static_cast<Eigen::Index>(d.diff_names.size());
  const auto q = static_cast<Eigen::Index>(d.utt_names.size());
  d.diff.resize(n, p);
  d.feat_a.resize(n, q);
  d.feat_b.resize(n, q);
  d.labels.resize(n, static_cast<Eigen::Index>(kAxes));
  auto feature = [&](const std::string& utt) -> const FeatureVector& {
    auto it = features.find(utt);
    if (it == features.end()) throw FeatureMismatch("no features for utterance " + utt);
    return it->second;
  };
  auto embedding = [&](const std::string& utt) -> const EmbeddingSequence* {
    auto it = embeddings->find(utt);
    if (it == embeddings->end()) throw Error("no embeddings for utterance " + utt);
    return &it->second;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pr = *kept[static_cast<std::size_t>(i)];
    d.pair_ids.push_back(pr.pair_id);
    const auto& fa = feature(pr.utt_a);
    const auto& fb = feature(pr.utt_b);
    auto df = diff_features(fa, fb);
    for (Eigen::Index j = 0; j < p; ++j) d.diff(i, j) = df.at(d.diff_names[static_cast<std::size_t>(j)]);
    for (Eigen::Index j = 0; j < q; ++j) {
      d.feat_a(i, j) = fa.at(d.utt_names[static_cast<std::size_t>(j)]);
      d.feat_b(i, j) = fb.at(d.utt_names[static_cast<std::size_t>(j)]);
    }
    const auto& y = labels.at(pr.pair_id);
    for (std::size_t k = 0; k < kAxes; ++k) d.labels(i, static_cast<Eigen::Index>(k)) = y[k];
    if (embeddings) {
      d.emb_a.push_back(embedding(pr.utt_a));
      d.emb_b.push_back(embedding(pr.utt_b));
    }
  }
  return d;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Eigen::MatrixXd take_cols(const Eigen::MatrixXd& m, const std::vector<std::string>& all,
                          const std::vector<std::string>& wanted) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(wanted.size()));
  for (std::size_t c = 0; c < wanted.size(); ++c) {
    auto it = std::find(all.begin(), all.end(), wanted[c]);
    if (it == all.end()) throw FeatureMismatch("unknown feature " + wanted[c]);
    out.col(static_cast<Eigen::Index>(c)) = m.col(it - all.begin());
  }
  return out;
}

ClassicalModel fit_one(const MethodSpec& spec, const Eigen::MatrixXd& x,
                       const std::vector<std::string>& names, const Eigen::MatrixXd& y,
                       std::uint32_t dim) {
  const Eigen::VectorXd y0 = y.col(0);
  switch (spec.kind) {
    case ModelKind::kLinear:
      return fit_linear(x, names, y0, dim);
    case ModelKind::kRidge:
      return fit_ridge(x, names, y0, spec.ridge_alpha, dim);
    case ModelKind::kPls2:
      return fit_pls2(x, names, y, spec.pls_components, dim);
    case ModelKind::kRf:
      return fit_rf(x, names, y0, spec.rf, derive_seed(spec.seed, dim), Exec::kSerial, dim);
    case ModelKind::kGbdt:
      return fit_gbdt(x, names, y0, spec.gbdt, dim);
    case ModelKind::kSvr:
      return fit_svr(x, names, y0, spec.svr, dim);
    default:
      throw Error("not a classical model kind: " + std::string(to_string(spec.kind)));
  }
}

}  // namespace

ClassicalFit fit_classical(const MethodSpec& spec, const Eigen::MatrixXd& diff,
                           const std::vector<std::string>& names, const Eigen::MatrixXd& labels) {
  ClassicalFit fit;
  for (std::size_t d = 0; d < kAxes; ++d) {
    Eigen::VectorXd y = labels.col(static_cast<Eigen::Index>(d));
    fit.selections.push_back(rank_features(diff, names, y, spec.select_k, d));
  }
  if (spec.kind == ModelKind::kPls2 && spec.pls_shared) {
    std::set<std::string> uni;
    for (const auto& s : fit.selections) uni.insert(s.selected.begin(), s.selected.end());
    // keep canonical column order
    std::vector<std::string> cols;
    for (const auto& n : names) {
      if (uni.count(n)) cols.push_back(n);
    }
    fit.models.push_back(fit_pls2(take_cols(diff, names, cols), cols, labels,
                                  spec.pls_components, 0));
    return fit;
  }
  for (std::size_t d = 0; d < kAxes; ++d) {
    const auto& sel = fit.selections[d].selected;
    Eigen::MatrixXd y = labels.col(static_cast<Eigen::Index>(d));
    fit.models.push_back(
        fit_one(spec, take_cols(diff, names, sel), sel, y, static_cast<std::uint32_t>(d)));
  }
  return fit;
}

Eigen::MatrixXd predict_classical(const ClassicalFit& fit, const Eigen::MatrixXd& diff,
                                  const std::vector<std::string>& names) {
  if (fit.models.size() == 1 && fit.models[0].outputs() == kAxes) {
    return predict_all(fit.models[0], diff, names);
  }
  if (fit.models.size() != kAxes) throw Error("classical fit holds no per-axis models");
  Eigen::MatrixXd out(diff.rows(), static_cast<Eigen::Index>(kAxes));
  for (std::size_t d = 0; d < kAxes; ++d) {
    out.col(static_cast<Eigen::Index>(d)) = predict(fit.models[d], diff, names);
  }
  return out;
}

namespace {

struct FoldOutput {
  Eigen::MatrixXd pred;
  FoldRecord record;
};

FoldOutput run_featnet(const MethodSpec& spec, const CvData& data,
                       const std::vector<Eigen::Index>& tr, const std::vector<Eigen::Index>& te,
                       int fold) {
  Eigen::MatrixXd xa = take_rows(data.feat_a, tr), xb = take_rows(data.feat_b, tr);
  // One standardizer over both sides keeps phi_a and phi_b on a shared scale.
  Eigen::MatrixXd stacked(2 * xa.rows(), xa.cols());
  stacked << xa, xb;
  const auto st = Standardizer::fit(stacked);
  xa = st.apply(xa);
  xb = st.apply(xb);
  Eigen::MatrixXd y = take_rows(data.labels, tr);

  nn::FeatNetConfig cfg;
  cfg.input_dim = 2 * data.feat_a.cols();
  cfg.hidden = spec.featnet_hidden;
  cfg.output = static_cast<Eigen::Index>(kAxes);
  nn::FeatNet net(cfg, derive_seed(spec.seed, static_cast<std::uint64_t>(fold)));
  auto task = nn::featnet_task(net, xa, xb, y);
  auto tcfg = spec.train;
  tcfg.seed = derive_seed(spec.seed ^ tcfg.seed, static_cast<std::uint64_t>(1000 + fold));
  FoldOutput out;
  out.record.fold = fold;
  out.record.training = nn::train(task, tcfg);
  out.pred = net.forward(st.apply(take_rows(data.feat_a, te)), st.apply(take_rows(data.feat_b, te)));
  return out;
}

FoldOutput run_sslhead(const MethodSpec& spec, const CvData& data,
                       const std::vector<Eigen::Index>& tr, const std::vector<Eigen::Index>& te,
                       int fold) {
  if (data.emb_a.empty()) throw Error("SSL head needs embeddings for every pair");
  std::vector<const EmbeddingSequence*> a, b, ta, tb;
  for (auto i : tr) {
    a.push_back(data.emb_a[static_cast<std::size_t>(i)]);
    b.push_back(data.emb_b[static_cast<std::size_t>(i)]);
  }
  for (auto i : te) {
    ta.push_back(data.emb_a[static_cast<std::size_t>(i)]);
    tb.push_back(data.emb_b[static_cast<std::size_t>(i)]);
  }
  nn::SslHeadConfig cfg = spec.ssl;
  cfg.n_layers = data.emb_a.front()->layers;
  cfg.frame_dim = data.emb_a.front()->dim;
  cfg.output = static_cast<Eigen::Index>(kAxes);
  nn::SslHead net(cfg, derive_seed(spec.seed, static_cast<std::uint64_t>(fold)));
  auto task = nn::sslhead_task(net, a, b, take_rows(data.labels, tr));
  auto tcfg = spec.train;
  tcfg.seed = derive_seed(spec.seed ^ tcfg.seed, static_cast<std::uint64_t>(1000 + fold));
  FoldOutput out;
  out.record.fold = fold;
  out.record.training = nn::train(task, tcfg);
  out.pred = nn::predict_sslhead(net, ta, tb);
  return out;
}

FoldOutput run_classical(const MethodSpec& spec, const CvData& data,
                         const std::vector<Eigen::Index>& tr, const std::vector<Eigen::Index>& te,
                         int fold) {
  auto fit = fit_classical(spec, take_rows(data.diff, tr), data.diff_names,
                           take_rows(data.labels, tr));
  FoldOutput out;
  out.record.fold = fold;
  out.pred = predict_classical(fit, take_rows(data.diff, te), data.diff_names);
  out.record.selections = std::move(fit.selections);
  return out;
}

}  // namespace

CvResult cross_validate(const MethodSpec& spec, const CvData& data, const FoldPlan& plan,
                        Exec exec) {
  const auto n = static_cast<Eigen::Index>(data.pair_ids.size());
  if (data.labels.rows() != n || data.diff.rows() != n) {
    throw DimensionMismatch("CV data rows disagree with the pair list");
  }
  std::vector<std::vector<Eigen::Index>> train_rows(static_cast<std::size_t>(plan.k)),
      test_rows(static_cast<std::size_t>(plan.k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int f = plan.fold_of(data.pair_ids[static_cast<std::size_t>(i)]);
    for (int g = 0; g < plan.k; ++g) {
      (g == f ? test_rows : train_rows)[static_cast<std::size_t>(g)].push_back(i);
    }
  }

  std::vector<FoldOutput> outputs(static_cast<std::size_t>(plan.k));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(plan.k));
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(exec))
  for (int f = 0; f < plan.k; ++f) {
    const auto& tr = train_rows[static_cast<std::size_t>(f)];
    const auto& te = test_rows[static_cast<std::size_t>(f)];
    try {
      if (te.empty()) continue;
      if (spec.kind == ModelKind::kFeatNet) {
        outputs[static_cast<std::size_t>(f)] = run_featnet(spec, data, tr, te, f);
      } else if (spec.kind == ModelKind::kSslHead) {
        outputs[static_cast<std::size_t>(f)] = run_sslhead(spec, data, tr, te, f);
      } else {
        outputs[static_cast<std::size_t>(f)] = run_classical(spec, data, tr, te, f);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CvResult result;
  result.method = spec.name.empty() ? std::string(to_string(spec.kind)) : spec.name;
  result.predictions = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(kAxes));
  for (int f = 0; f < plan.k; ++f) {
    auto& o = outputs[static_cast<std::size_t>(f)];
    const auto& te = test_rows[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < te.size(); ++i) {
      result.predictions.row(te[i]) = o.pred.row(static_cast<Eigen::Index>(i));
    }
    o.record.fold = f;
    result.folds.push_back(std::move(o.record));
  }
  result.scores = score(result.predictions, data.labels);
  return result;
}

}  // namespace rie::eval
