#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "rie/exec.hpp"

namespace rie::cli {

struct Globals {
  std::optional<std::uint64_t> seed;
  int jobs = 0;  // 0 = all cores, 1 = serial reference path
  std::filesystem::path config;

  Exec exec() const { return jobs == 1 ? Exec::kSerial : Exec::kParallel; }
};

struct SynthArgs {
  std::size_t n_pairs = 200;
  std::filesystem::path out;
};

struct ExtractArgs {
  std::filesystem::path manifest, wav_dir, out;
};

struct SelectArgs {
  std::filesystem::path manifest, labels, features, out;
  std::size_t k = 8;
};

struct TrainArgs {
  std::string method;
  std::filesystem::path manifest, labels, features, embeddings, out;
};

struct CvArgs {
  std::filesystem::path out;  // overrides out_dir
};

struct JudgeArgs {
  std::optional<int> fold;
  std::filesystem::path out;
};

struct ReportArgs {
  std::filesystem::path run_dir;
  std::string format = "md";
  std::string source = "cv";  // cv | judge
  std::string out;            // file name under reports/; stdout when empty
};

int cmd_synth(const Globals& g, const SynthArgs& a);
int cmd_extract(const Globals& g, const ExtractArgs& a);
int cmd_select(const Globals& g, const SelectArgs& a);
int cmd_train(const Globals& g, const TrainArgs& a);
int cmd_cv(const Globals& g, const CvArgs& a);
int cmd_judge(const Globals& g, const JudgeArgs& a);
int cmd_report(const Globals& g, const ReportArgs& a);

}  // namespace rie::cli
