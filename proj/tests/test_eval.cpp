#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rie/error.hpp"
#include "rie/eval/cv.hpp"
#include "rie/eval/report.hpp"
#include "rie/rng.hpp"
#include "rie/stats.hpp"

using namespace rie;
using namespace rie::eval;

namespace {

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%04zu", i);
    out.emplace_back(buf);
  }
  return out;
}

double brute_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  // two-pass textbook formula with sample moments
  double n = static_cast<double>(x.size()), mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my) / (n - 1);
    sxx += (x[i] - mx) * (x[i] - mx) / (n - 1);
    syy += (y[i] - my) * (y[i] - my) / (n - 1);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Random CV data with 26 noise diff columns named f00..f25.
CvData noise_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  CvData d;
  d.pair_ids = ids(n);
  for (int j = 0; j < 26; ++j) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "f%02d", j);
    d.diff_names.emplace_back(buf);
  }
  d.diff.resize(static_cast<Eigen::Index>(n), 26);
  d.labels.resize(static_cast<Eigen::Index>(n), 9);
  for (Eigen::Index i = 0; i < d.diff.size(); ++i) d.diff.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < d.labels.size(); ++i) d.labels.data()[i] = rng.normal();
  return d;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("metric oracles") {
  std::vector<double> x{1, 2, 3}, y{2, 4, 6}, z{3, 1, 2};
  CHECK(std::fabs(*ccc(x, y) - 4.0 / 11.0) < 1e-12);
  CHECK(std::fabs(*pearson(x, y) - 1.0) < 1e-12);
  CHECK(std::fabs(*pearson(x, z) - brute_pearson(x, z)) < 1e-12);
  CHECK(std::fabs(*pearson(x, z) + 0.5) < 1e-12);
  CHECK(*ccc(x, x) == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<double> shifted{3.5, 4.5, 5.5};
  CHECK(std::fabs(*pearson(x, shifted) - 1.0) < 1e-12);
  CHECK(std::fabs(*ccc(x, shifted)) < 1.0);
}

TEST_CASE("constant predictions follow the declared convention") {
  std::vector<double> pred{0.5, 0.5, 0.5, 0.5}, truth{1, -1, 2, 0};
  auto c = score_axis(pred, truth);
  CHECK_FALSE(c.pearson.has_value());
  REQUIRE(c.ccc.has_value());
  CHECK(*c.ccc == 0.0);
  std::vector<double> same{0.5, 0.5, 0.5, 0.5};
  CHECK_FALSE(score_axis(pred, same).ccc.has_value());
}

TEST_CASE("CCC never exceeds Pearson in magnitude") {
  Rng rng(1);
  for (int trial = 0; trial < 10000; ++trial) {
    std::size_t n = 2 + rng.index(30);
    std::vector<double> x(n), y(n);
    const double shift = rng.uniform(-2.0, 2.0), sc = rng.uniform(0.1, 3.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = sc * (0.5 * x[i] + rng.normal()) + shift;
    }
    auto p = pearson(x, y);
    auto c = ccc(x, y);
    REQUIRE(p.has_value());
    REQUIRE(c.has_value());
    CHECK(std::fabs(*c) <= std::fabs(*p) + 1e-12);
  }
}

TEST_CASE("metric invariances") {
  Rng rng(2);
  std::vector<double> x(40), y(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = rng.normal();
    y[i] = x[i] + rng.normal();
  }
  auto affine = [](std::vector<double> v, double a, double b) {
    for (auto& e : v) e = a * e + b;
    return v;
  };
  CHECK(*pearson(affine(x, 2.5, 1.0), affine(y, 0.3, -4.0)) == doctest::Approx(*pearson(x, y)));
  CHECK(*ccc(affine(x, 3.0, 0.0), affine(y, 3.0, 0.0)) == doctest::Approx(*ccc(x, y)));
  CHECK(*ccc(affine(x, 1.7, 0.4), affine(y, 1.7, 0.4)) == doctest::Approx(*ccc(x, y)));
  CHECK(*ccc(affine(x, 1.0, 0.0), affine(y, 2.0, 0.0)) != doctest::Approx(*ccc(x, y)));
  CHECK(*pearson(y, x) == *pearson(x, y));
  CHECK(*ccc(y, x) == *ccc(x, y));
}

TEST_CASE("fold plans") {
  SUBCASE("814 pairs in ten folds") {
    auto plan = make_folds(ids(814), 10, 7);
    auto s = plan.sizes();
    CHECK(std::count(s.begin(), s.end(), 82u) == 4);
    CHECK(std::count(s.begin(), s.end(), 81u) == 6);
    CHECK(plan.assignments.size() == 814);
    std::set<std::string> seen;
    for (int f = 0; f < 10; ++f) {
      for (const auto& id : plan.members(f)) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == 814);
  }
  SUBCASE("leave one out") {
    auto plan = make_folds(ids(12), 12, 1);
    for (auto s : plan.sizes()) CHECK(s == 1u);
  }
  SUBCASE("deterministic and order independent") {
    auto a = ids(50);
    auto b = a;
    std::reverse(b.begin(), b.end());
    CHECK(make_folds(a, 10, 3).assignments == make_folds(b, 10, 3).assignments);
    CHECK(make_folds(a, 10, 3).assignments != make_folds(a, 10, 4).assignments);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(make_folds(ids(9), 10, 0), TooFewPairs);
    auto dup = ids(20);
    dup[3] = dup[4];
    CHECK_THROWS_AS(make_folds(dup, 10, 0), DuplicatePairId);
  }
}

TEST_CASE("leaked labels give a perfect table") {
  auto d = noise_data(60, 3);
  for (Eigen::Index a = 0; a < 9; ++a) d.diff.col(a) = d.labels.col(a);
  auto plan = make_folds(d.pair_ids, 10, 1);
  for (auto kind : {ModelKind::kLinear, ModelKind::kRidge}) {
    auto spec = default_method(kind);
    spec.ridge_alpha = 0.0;
    auto r = cross_validate(spec, d, plan);
    for (const auto& c : r.scores) {
      CHECK(*c.pearson == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(*c.ccc == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("selection is recomputed inside every training split") {
  // "trap" copies the label on fold-0 rows and is zero elsewhere: constant
  // (r = 0) when fold 0 is held out, r near 0.33 otherwise. "honest" is a
  // weak global signal; every other column is constant.
  auto d = noise_data(100, 4);
  auto plan = make_folds(d.pair_ids, 10, 2);
  Rng rng(5);
  d.diff_names[0] = "honest";
  d.diff_names[1] = "trap";
  d.diff.setZero();
  for (Eigen::Index i = 0; i < 100; ++i) {
    const bool in0 = plan.fold_of(d.pair_ids[static_cast<std::size_t>(i)]) == 0;
    for (Eigen::Index a = 0; a < 9; ++a) d.labels(i, a) = d.labels(i, 0);
    d.diff(i, 0) = 0.1 * d.labels(i, 0) + rng.normal();
    d.diff(i, 1) = in0 ? 20.0 * d.labels(i, 0) : 0.0;
  }
  auto spec = default_method(ModelKind::kRidge);
  spec.select_k = 1;
  auto r = cross_validate(spec, d, plan);
  REQUIRE(r.folds.size() == 10);
  CHECK(r.folds[0].selections[0].selected == std::vector<std::string>{"honest"});
  for (int f = 1; f < 10; ++f) {
    CHECK(r.folds[static_cast<std::size_t>(f)].selections[0].selected ==
          std::vector<std::string>{"trap"});
  }
  // Selection on the full set would pick the same column for every fold.
  Eigen::VectorXd y = d.labels.col(0);
  auto global = rank_features(d.diff, d.diff_names, y, 1);
  CHECK(global.selected == std::vector<std::string>{"trap"});
}

TEST_CASE("scores are pooled over held-out folds") {
  // Each fold's labels carry a fold-specific offset that ridge cannot see,
  // so pooled and fold-averaged Pearson disagree.
  auto d = noise_data(80, 6);
  auto plan = make_folds(d.pair_ids, 8, 3);
  for (Eigen::Index i = 0; i < 80; ++i) {
    const int f = plan.fold_of(d.pair_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index a = 0; a < 9; ++a) {
      d.labels(i, a) = d.diff(i, a) + 0.5 * d.labels(i, a) + 3.0 * f;
      d.diff(i, 20) = f;  // weak stand-in the model can partly use
    }
  }
  auto r = cross_validate(default_method(ModelKind::kRidge), d, plan);
  auto again = score(r.predictions, d.labels);
  double fold_mean = 0.0;
  for (int f = 0; f < 8; ++f) {
    std::vector<double> p, t;
    for (Eigen::Index i = 0; i < 80; ++i) {
      if (plan.fold_of(d.pair_ids[static_cast<std::size_t>(i)]) != f) continue;
      p.push_back(r.predictions(i, 0));
      t.push_back(d.labels(i, 0));
    }
    fold_mean += *pearson(p, t) / 8.0;
  }
  for (std::size_t a = 0; a < 9; ++a) CHECK(*r.scores[a].pearson == *again[a].pearson);
  CHECK(std::fabs(*r.scores[0].pearson - fold_mean) > 0.05);
}

TEST_CASE("fold-parallel CV matches the serial run") {
  auto d = noise_data(50, 7);
  for (Eigen::Index a = 0; a < 9; ++a) d.labels.col(a) += d.diff.col(a + 3);
  auto plan = make_folds(d.pair_ids, 5, 1);
  for (auto kind : {ModelKind::kRidge, ModelKind::kPls2, ModelKind::kRf, ModelKind::kGbdt,
                    ModelKind::kSvr}) {
    auto spec = default_method(kind, 3);
    spec.rf.n_trees = 20;
    auto s = cross_validate(spec, d, plan, Exec::kSerial);
    auto p = cross_validate(spec, d, plan, Exec::kParallel);
    CHECK(s.predictions == p.predictions);
  }
  auto shared = default_method(ModelKind::kPls2);
  shared.pls_shared = true;
  auto r = cross_validate(shared, d, plan);
  CHECK(r.predictions.allFinite());
}

TEST_CASE("neural methods run through the harness") {
  Rng rng(8);
  CvData d = noise_data(30, 9);
  d.utt_names = {"u0", "u1"};
  d.feat_a.resize(30, 2);
  d.feat_b.resize(30, 2);
  std::vector<EmbeddingSequence> seqs(60);
  for (int i = 0; i < 30; ++i) {
    d.feat_a.row(i) << rng.normal(), rng.normal();
    d.feat_b.row(i) << rng.normal(), rng.normal();
    for (int a = 0; a < 9; ++a) d.labels(i, a) = d.feat_b(i, 0) - d.feat_a(i, 0);
    for (int s = 0; s < 2; ++s) {
      auto& e = seqs[static_cast<std::size_t>(2 * i + s)];
      e.utt_id = "u" + std::to_string(2 * i + s);
      e.layers = 2;
      e.frames = static_cast<std::uint32_t>(2 + (i + s) % 3);
      e.dim = 3;
      for (std::size_t k = 0; k < std::size_t{2} * e.frames * 3; ++k) {
        e.data.push_back(static_cast<float>(rng.normal()));
      }
    }
    d.emb_a.push_back(&seqs[static_cast<std::size_t>(2 * i)]);
    d.emb_b.push_back(&seqs[static_cast<std::size_t>(2 * i + 1)]);
  }
  auto plan = make_folds(d.pair_ids, 3, 1);
  auto fn = default_method(ModelKind::kFeatNet, 1);
  fn.train.max_epochs = 30;
  auto r1 = cross_validate(fn, d, plan);
  auto r2 = cross_validate(fn, d, plan, Exec::kParallel);
  CHECK(r1.predictions == r2.predictions);
  CHECK(r1.folds[0].training.has_value());
  CHECK(*r1.scores[0].pearson > 0.5);

  auto ssl = default_method(ModelKind::kSslHead, 1);
  ssl.train.max_epochs = 3;
  ssl.ssl.lstm_hidden = 4;
  ssl.ssl.attention_dim = 4;
  ssl.ssl.mlp_hidden = {8, 4};
  auto rs = cross_validate(ssl, d, plan);
  CHECK(rs.predictions.allFinite());
  CHECK(rs.folds.size() == 3);

  CvData no_emb = d;
  no_emb.emb_a.clear();
  no_emb.emb_b.clear();
  CHECK_THROWS(cross_validate(ssl, no_emb, plan));
}

TEST_CASE("build_cv_data keeps labelled pairs only") {
  std::vector<UtterancePair> pairs{{"p0", "a", "b", "s", "t"}, {"p1", "b", "c", "s", "t"}};
  std::map<std::string, ImpressionVector> labels{{"p1", ImpressionVector{1, 2, 3, 4, 5, 6, 7, 8, 9}}};
  std::map<std::string, FeatureVector> feats;
  for (std::string u : {"b", "c"}) {
    FeatureVector f;
    f.id = u;
    f.names = feature_names();
    f.values.assign(f.names.size(), u == "b" ? 1.0 : 3.0);
    feats[u] = f;
  }
  auto d = build_cv_data(pairs, labels, feats);
  REQUIRE(d.pair_ids == std::vector<std::string>{"p1"});
  CHECK(d.diff(0, 0) == 2.0);
  CHECK(d.labels(0, 8) == 9.0);
  CHECK(d.feat_a.cols() == 10);
  labels["p0"] = ImpressionVector{};
  CHECK_THROWS_AS(build_cv_data(pairs, labels, feats), FeatureMismatch);
}

TEST_CASE("report flags and rendering") {
  AxisScores one, two;
  for (std::size_t a = 0; a < kAxes; ++a) {
    one[a] = Cell{0.5 + 0.04 * static_cast<double>(a), 0.4 + 0.03 * static_cast<double>(a)};
    two[a] = Cell{0.6 - 0.02 * static_cast<double>(a), 0.45};
  }
  one[2].pearson = 0.700;
  two[2].pearson = 0.695;  // within the tie tolerance
  two[8].pearson.reset();

  ResultTable single;
  single.add("ridge", one);
  for (std::size_t a = 0; a < kAxes; ++a) CHECK(best_flags(single, a, 0) == std::vector<bool>{true});

  ResultTable t;
  t.add("ridge", one);
  t.add("ssl_head", two);
  CHECK(best_flags(t, 2, 0) == std::vector<bool>{true, true});
  CHECK(best_flags(t, 0, 0) == std::vector<bool>{false, true});
  CHECK(best_flags(t, 8, 0) == std::vector<bool>{true, false});

  RunMeta meta{7, "abc123", "corpus/synth"};
  auto md = render_report(t, ReportFormat::kMarkdown, meta);
  auto csv = render_report(t, ReportFormat::kCsv, meta);
  CHECK(md == read_text(RIE_FIXTURE_DIR "/report_golden.md"));
  CHECK(csv == read_text(RIE_FIXTURE_DIR "/report_golden.csv"));
  CHECK(csv.find("n/a") != std::string::npos);

  auto back = parse_report_csv(csv);
  REQUIRE(back.methods == t.methods);
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t a = 0; a < kAxes; ++a) {
      CHECK(back.at(a, m).pearson.has_value() == t.at(a, m).pearson.has_value());
      if (t.at(a, m).pearson) CHECK(*back.at(a, m).pearson == doctest::Approx(*t.at(a, m).pearson));
    }
  }
  meta.timestamp = "2026-01-01T00:00:00Z";
  CHECK(render_report(t, ReportFormat::kCsv, meta).find("# timestamp:") != std::string::npos);
}
