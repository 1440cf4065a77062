#include "run_dir.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>

#include "rie/error.hpp"
#include "rie/hash.hpp"
#include "rie/version.hpp"

namespace rie::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunWriter::RunWriter(fs::path run_dir, Provenance prov)
    : run_dir_(std::move(run_dir)), prov_(std::move(prov)) {
  fs::create_directories(run_dir_);
  staging_ = run_dir_ / (".staging-" + prov_.command + "-" + std::to_string(::getpid()));
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

RunWriter::~RunWriter() {
  std::error_code ec;
  fs::remove_all(staging_, ec);
}

fs::path RunWriter::stage(const fs::path& relative) {
  if (fs::exists(run_dir_ / relative)) {
    throw IoError("refusing to overwrite " + (run_dir_ / relative).string());
  }
  auto p = staging_ / relative;
  fs::create_directories(p.parent_path());
  return p;
}

void RunWriter::write_text(const fs::path& relative, const std::string& text) {
  std::ofstream out(stage(relative), std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + relative.string());
}

std::vector<fs::path> RunWriter::commit() {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(staging_)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), staging_));
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (fs::exists(run_dir_ / f)) throw IoError("refusing to overwrite " + (run_dir_ / f).string());
  }
  json record{{"command", prov_.command},
              {"toolkit", "rie " + std::string(kVersion)},
              {"config_hash", prov_.config_hash},
              {"seed", prov_.seed},
              {"timestamp", utc_timestamp()},
              {"files", json::array()}};
  for (const auto& f : files) {
    const auto dst = run_dir_ / f;
    fs::create_directories(dst.parent_path());
    record["files"].push_back({{"path", f.generic_string()},
                               {"sha256", sha256_file(staging_ / f)},
                               {"bytes", fs::file_size(staging_ / f)}});
    fs::rename(staging_ / f, dst);
  }
  std::ofstream log(run_dir_ / "run_manifest.jsonl", std::ios::app);
  log << record.dump() << "\n";
  if (!log) throw IoError("cannot append to run manifest");
  committed_ = true;
  return files;
}

}  // namespace rie::cli
