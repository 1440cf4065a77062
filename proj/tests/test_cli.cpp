#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rie/eval/report.hpp"
#include "rie/hash.hpp"
#include "rie/mllm/mock_server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = RIE_CLI_PATH;

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell with stderr folded into the captured output.
Run run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + kCli + "' " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    auto ts = line.find("timestamp: ");
    if (ts != std::string::npos) line = line.substr(0, ts);
    out += line + "\n";
  }
  return out;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// One synthetic corpus with features, shared by every case.
struct Workspace {
  fs::path dir;
  Workspace() : dir(fs::temp_directory_path() / ("rie_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto synth = run_cli("--seed 3 synth --n-pairs 40 --out corpus", dir);
    REQUIRE_MESSAGE(synth.code == 0, synth.out);
    auto extract = run_cli("extract --manifest corpus/pairs.jsonl --out corpus", dir);
    REQUIRE_MESSAGE(extract.code == 0, extract.out);
  }
  ~Workspace() { fs::remove_all(dir); }
};

Workspace& workspace() {
  static Workspace ws;
  return ws;
}

const char* kConfig = R"({
  "schema_version": 1,
  "seed": 3,
  "corpus": {"manifest": "corpus/pairs.jsonl"},
  "methods": ["linear", "ridge"],
  "folds": {"k": 5},
  "out_dir": "run1"
})";

}  // namespace

TEST_CASE("synth, extract and cv produce a two-method report") {
  auto& ws = workspace();
  write(ws.dir / "cv.json", kConfig);
  auto r = run_cli("cv --config cv.json", ws.dir);
  REQUIRE_MESSAGE(r.code == 0, r.out);

  const auto table = rie::eval::parse_report_csv(slurp(ws.dir / "run1/reports/cv.csv"));
  CHECK(table.methods == std::vector<std::string>{"linear", "ridge"});
  CHECK(table.columns.size() == 2);
  const std::string md = slurp(ws.dir / "run1/reports/cv.md");
  CHECK(md.find("| A (High / Low) |") != std::string::npos);
  CHECK(md.find("| I (Cold / Warm) |") != std::string::npos);
  CHECK(md.find("config_hash: ") != std::string::npos);
  CHECK(md.find("toolkit: rie ") != std::string::npos);

  // every committed file is listed with its checksum
  std::ifstream manifest(ws.dir / "run1/run_manifest.jsonl");
  std::string line;
  std::size_t files = 0;
  while (std::getline(manifest, line)) {
    const json record = json::parse(line);
    for (const auto& f : record["files"]) {
      CHECK(rie::sha256_file(ws.dir / "run1" / f["path"].get<std::string>()) == f["sha256"]);
      ++files;
    }
  }
  CHECK(files >= 6);
  // no staging leftovers
  for (const auto& e : fs::directory_iterator(ws.dir / "run1")) {
    CHECK(e.path().filename().string().rfind(".staging", 0) != 0);
  }
}

TEST_CASE("rerunning an identical config reproduces the reports") {
  auto& ws = workspace();
  write(ws.dir / "cv.json", kConfig);
  if (!fs::exists(ws.dir / "run1/results.json")) REQUIRE(run_cli("cv --config cv.json", ws.dir).code == 0);
  auto r = run_cli("--jobs 1 cv --config cv.json --out run2", ws.dir);
  REQUIRE_MESSAGE(r.code == 0, r.out);
  for (const char* f : {"reports/cv.csv", "reports/cv.md"}) {
    CAPTURE(f);
    CHECK(without_timestamp(slurp(ws.dir / "run1" / f)) == without_timestamp(slurp(ws.dir / "run2" / f)));
  }
  CHECK(slurp(ws.dir / "run1/results.json") == slurp(ws.dir / "run2/results.json"));
  CHECK(slurp(ws.dir / "run1/predictions/ridge.csv") == slurp(ws.dir / "run2/predictions/ridge.csv"));

  // a different seed is a different config
  auto r3 = run_cli("--seed 4 cv --config cv.json --out run3", ws.dir);
  REQUIRE(r3.code == 0);
  CHECK(json::parse(slurp(ws.dir / "run3/results.json"))["config_hash"] !=
        json::parse(slurp(ws.dir / "run1/results.json"))["config_hash"]);
}

TEST_CASE("usage and runtime errors map to exit codes") {
  auto& ws = workspace();
  auto config = [&](const std::string& name, const std::string& text) {
    write(ws.dir / name, text);
    return run_cli("cv --config " + name + " --out bad_" + name, ws.dir);
  };
  CHECK(config("m.json", R"({"schema_version": 1, "corpus": {"manifest": "corpus/pairs.jsonl"}, "methods": ["lasso"]})").code == 2);
  CHECK(config("v.json", R"({"schema_version": 2, "corpus": {"manifest": "corpus/pairs.jsonl"}})").code == 2);
  CHECK(config("k.json", R"({"schema_version": 1, "corpus": {"manifest": "corpus/pairs.jsonl"}, "colour": 1})").code == 2);
  CHECK(config("t.json", R"({"schema_version": 1, "corpus": {"manifest": "corpus/pairs.jsonl"}, "folds": {"k": "ten"}})").code == 2);
  CHECK(config("e.json", R"({"schema_version": 1, "corpus": {"manifest": "${HOME}/pairs.jsonl"}})").code == 2);
  CHECK(config("j.json", "{not json").code == 2);
  CHECK(run_cli("", ws.dir).code == 2);
  CHECK(run_cli("cv", ws.dir).code == 2);
  CHECK(run_cli("synth --out x", ws.dir).code == 2);
  CHECK(run_cli("train --method lasso --manifest a --labels b --features c --out d", ws.dir).code == 2);
  CHECK(run_cli("--help", ws.dir).code == 0);

  CHECK(run_cli("extract --manifest missing.jsonl --out x", ws.dir).code == 1);
  auto again = run_cli("--seed 3 synth --n-pairs 40 --out corpus", ws.dir);
  CHECK(again.code == 1);
  CHECK(again.out.find("already exists") != std::string::npos);
}

TEST_CASE("a failed run leaves no partial outputs") {
  auto& ws = workspace();
  write(ws.dir / "ssl.json", R"({"schema_version": 1, "corpus": {"manifest": "corpus/pairs.jsonl",
    "embeddings": "no_such_dir"}, "methods": ["ridge", "sslhead"], "out_dir": "failed"})");
  auto r = run_cli("cv --config ssl.json", ws.dir);
  CHECK(r.code == 1);
  std::size_t entries = 0;
  if (fs::exists(ws.dir / "failed")) {
    for ([[maybe_unused]] const auto& e : fs::recursive_directory_iterator(ws.dir / "failed")) ++entries;
  }
  CHECK(entries == 0);
}

TEST_CASE("select and train write their artifacts") {
  auto& ws = workspace();
  const std::string inputs = " --manifest corpus/pairs.jsonl --labels corpus/labels.csv --features corpus/features.csv";
  auto s = run_cli("select --k 4" + inputs + " --out sel", ws.dir);
  REQUIRE_MESSAGE(s.code == 0, s.out);
  const auto sel = json::parse(slurp(ws.dir / "sel/selection.json"));
  CHECK(sel["axes"].size() == 9);
  CHECK(sel["axes"][0]["selected"].size() == 4);

  auto t = run_cli("train --method ridge" + inputs + " --out tr", ws.dir);
  REQUIRE_MESSAGE(t.code == 0, t.out);
  CHECK(fs::exists(ws.dir / "tr/models/ridge_A.riem"));
  CHECK(fs::exists(ws.dir / "tr/models/ridge_I.riem"));
  auto f = run_cli("train --method featnet" + inputs + " --out trf", ws.dir);
  REQUIRE_MESSAGE(f.code == 0, f.out);
  CHECK(fs::exists(ws.dir / "trf/models/featnet.riem"));
  CHECK(fs::exists(ws.dir / "trf/loss_curve.csv"));
}

TEST_CASE("judge scores the designated fold against a mock provider") {
  auto& ws = workspace();
  rie::mllm::MockServer server(rie::mllm::hashed_scores_reply);
  write(ws.dir / "judge.json", R"({"schema_version": 1, "seed": 3,
    "corpus": {"manifest": "corpus/pairs.jsonl"}, "folds": {"k": 5},
    "provider": {"kind": "gemini", "base_url": ")" + server.base_url() + R"(", "model": "mock",
                 "language": "en", "shots": 2},
    "out_dir": "judged"})");
  auto r = run_cli("judge --config judge.json", ws.dir);
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const auto table = rie::eval::parse_report_csv(slurp(ws.dir / "judged/reports/judge.csv"));
  CHECK(table.methods == std::vector<std::string>{"mllm-gemini"});
  const auto results = json::parse(slurp(ws.dir / "judged/results_judge.json"));
  const auto n = results["n_pairs"].get<std::size_t>();
  CHECK(n == 8);  // 40 pairs over 5 folds
  CHECK(server.requests().size() == n);
  CHECK(server.requests()[0].prompt_text.find("Scored examples from other pairs") != std::string::npos);

  std::ifstream audit(ws.dir / "judged/audit.jsonl");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(audit, line)) ++rows;
  CHECK(rows == n);

  // the provider being down is a runtime failure
  std::string cfg = slurp(ws.dir / "judge.json");
  cfg.replace(cfg.find("\"judged\""), 8, "\"judged_down\"");
  cfg.replace(cfg.find("\"shots\": 2"), 10, "\"shots\": 0, \"max_retries\": 0");
  cfg.replace(cfg.find(server.base_url()), server.base_url().size(), "http://127.0.0.1:1");
  write(ws.dir / "down.json", cfg);
  CHECK(run_cli("judge --config down.json", ws.dir).code == 1);
}
