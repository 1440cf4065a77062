#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rie::cli {

struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Stages a command's outputs in a hidden directory next to their final
/// location and moves them into the run directory only on commit. Existing
/// files are never overwritten. Each commit appends one record listing the
/// new files and their sha256 to run_manifest.jsonl.
class RunWriter {
 public:
  RunWriter(std::filesystem::path run_dir, Provenance prov);
  ~RunWriter();
  RunWriter(const RunWriter&) = delete;
  RunWriter& operator=(const RunWriter&) = delete;

  /// Staged path for `relative`; parent directories are created.
  std::filesystem::path stage(const std::filesystem::path& relative);
  /// Root of the staging area, for writers that lay out a whole tree.
  const std::filesystem::path& staging_root() const { return staging_; }
  void write_text(const std::filesystem::path& relative, const std::string& text);
  /// Moves every staged file into place. Returns the committed paths.
  std::vector<std::filesystem::path> commit();

  const std::filesystem::path& run_dir() const { return run_dir_; }

 private:
  std::filesystem::path run_dir_;
  std::filesystem::path staging_;
  Provenance prov_;
  bool committed_ = false;
};

std::string utc_timestamp();

}  // namespace rie::cli
