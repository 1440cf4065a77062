#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "rie/error.hpp"
#include "rie/version.hpp"

using namespace rie::cli;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative voice impression estimation toolkit"};
  app.set_version_flag("--version", std::string(rie::kVersion));
  app.require_subcommand(1);

  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for corpus generation, folds and training")
                       ->check(CLI::NonNegativeNumber);
  app.add_option("--jobs", g.jobs, "Worker threads; 1 selects the serial path, 0 all cores")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--config", g.config, "Run config (JSON)");
  // global options are accepted after the subcommand name too
  app.fallthrough();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  c_synth->add_option("--n-pairs", synth.n_pairs, "Number of utterance pairs")->required();
  c_synth->add_option("--out", synth.out, "Corpus directory")->required();

  ExtractArgs extract;
  auto* c_extract = app.add_subcommand("extract", "Extract per-utterance acoustic features");
  c_extract->add_option("--manifest", extract.manifest, "pairs.jsonl")->required();
  c_extract->add_option("--wav-dir", extract.wav_dir, "Directory of <utt>.wav (default: <manifest dir>/wav)");
  c_extract->add_option("--out", extract.out, "Run directory for features.csv")->required();

  SelectArgs select;
  auto* c_select = app.add_subcommand("select", "Rank difference features per axis");
  c_select->add_option("--manifest", select.manifest)->required();
  c_select->add_option("--labels", select.labels)->required();
  c_select->add_option("--features", select.features)->required();
  c_select->add_option("--k", select.k, "Features kept per axis");
  c_select->add_option("--out", select.out)->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Fit one model on all labelled pairs");
  c_train->add_option("--method", train.method, "linear|ridge|pls2|rf|gbdt|svr|featnet|sslhead")->required();
  c_train->add_option("--manifest", train.manifest)->required();
  c_train->add_option("--labels", train.labels)->required();
  c_train->add_option("--features", train.features)->required();
  c_train->add_option("--embeddings", train.embeddings, "Directory of <utt>.rie1 (sslhead)");
  c_train->add_option("--out", train.out)->required();

  CvArgs cv;
  auto* c_cv = app.add_subcommand("cv", "Cross-validate the configured methods and write reports");
  c_cv->add_option("--out", cv.out, "Run directory (overrides out_dir)");

  JudgeArgs judge;
  int fold = 0;
  auto* c_judge = app.add_subcommand("judge", "Score the designated fold with an MLLM provider");
  auto* fold_opt = c_judge->add_option("--fold", fold, "Fold index (default: provider.fold)");
  c_judge->add_option("--out", judge.out, "Run directory (overrides out_dir)");

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Re-render the result table of a run");
  c_report->add_option("--run-dir", report.run_dir)->required();
  c_report->add_option("--format", report.format, "csv|md");
  c_report->add_option("--source", report.source, "cv|judge");
  c_report->add_option("--out", report.out, "File name under <run-dir>/reports (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }
  if (*seed_opt) g.seed = seed;
  if (*fold_opt) judge.fold = fold;

  try {
    if (*c_synth) return cmd_synth(g, synth);
    if (*c_extract) return cmd_extract(g, extract);
    if (*c_select) return cmd_select(g, select);
    if (*c_train) return cmd_train(g, train);
    if (*c_cv) return cmd_cv(g, cv);
    if (*c_judge) return cmd_judge(g, judge);
    if (*c_report) return cmd_report(g, report);
  } catch (const rie::UsageError& e) {
    std::cerr << "rie: usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "rie: error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}
