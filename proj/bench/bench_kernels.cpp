// Serial reference path against the OpenMP path for each batch kernel.
// Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include <filesystem>
#include <unistd.h>

#include "rie/eval/cv.hpp"
#include "rie/features.hpp"
#include "rie/regress/model.hpp"
#include "rie/rng.hpp"
#include "rie/synth.hpp"

using namespace rie;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::kParallel : Exec::kSerial; }

const std::vector<AudioBuffer>& utterances() {
  static const std::vector<AudioBuffer> bufs = [] {
    std::vector<AudioBuffer> out;
    Rng rng(1);
    for (int i = 0; i < 16; ++i) out.push_back(synthesize(sample_style(rng), 1.5, derive_seed(1, i)));
    return out;
  }();
  return bufs;
}

void BM_ExtractFeatures(benchmark::State& state) {
  const auto& bufs = utterances();
  for (auto _ : state) benchmark::DoNotOptimize(extract_features_batch(bufs, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(bufs.size()));
}
BENCHMARK(BM_ExtractFeatures)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

struct Regression {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

const Regression& regression() {
  static const Regression r = [] {
    Regression out;
    Rng rng(2);
    out.x.resize(200, 8);
    out.y.resize(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      for (Eigen::Index j = 0; j < 8; ++j) out.x(i, j) = rng.normal();
      out.y(i) = std::sin(out.x(i, 0)) + 0.5 * out.x(i, 1) * out.x(i, 2) + 0.1 * rng.normal();
    }
    for (int j = 0; j < 8; ++j) out.names.push_back("x" + std::to_string(j));
    return out;
  }();
  return r;
}

void BM_RandomForest(benchmark::State& state) {
  const auto& r = regression();
  RfConfig cfg;
  cfg.n_trees = 100;
  for (auto _ : state) benchmark::DoNotOptimize(fit_rf(r.x, r.names, r.y, cfg, 3, exec_of(state)));
}
BENCHMARK(BM_RandomForest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CrossValidateGbdt(benchmark::State& state) {
  const auto& r = regression();
  eval::CvData d;
  d.diff = r.x;
  d.diff_names = r.names;
  d.labels.resize(r.x.rows(), static_cast<Eigen::Index>(kAxes));
  for (std::size_t a = 0; a < kAxes; ++a) d.labels.col(static_cast<Eigen::Index>(a)) = r.y;
  for (Eigen::Index i = 0; i < r.x.rows(); ++i) d.pair_ids.push_back("p" + std::to_string(1000 + i));
  const auto plan = eval::make_folds(d.pair_ids, 10, 4);
  auto spec = eval::default_method(ModelKind::kGbdt, 4);
  spec.gbdt.n_estimators = 30;
  for (auto _ : state) benchmark::DoNotOptimize(eval::cross_validate(spec, d, plan, exec_of(state)));
}
BENCHMARK(BM_CrossValidateGbdt)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GenerateCorpus(benchmark::State& state) {
  const auto dir = std::filesystem::temp_directory_path() / ("rie_bench_" + std::to_string(::getpid()));
  for (auto _ : state) {
    std::filesystem::remove_all(dir);
    benchmark::DoNotOptimize(generate_corpus(12, 5, dir, exec_of(state)));
  }
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_GenerateCorpus)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
