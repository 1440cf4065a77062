#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rie/eval/cv.hpp"
#include "rie/eval/report.hpp"
#include "rie/mllm/client.hpp"

namespace rie::cli {

inline constexpr int kSchemaVersion = 1;

/// The complete default config. It doubles as the schema: user keys must
/// exist here and carry the same JSON type.
const nlohmann::json& default_config();

struct RunConfig {
  nlohmann::json resolved;  // defaults merged with the user file
  std::string hash;         // sha256 of resolved.dump() without out_dir
  std::filesystem::path base_dir;

  std::uint64_t seed = 0;
  std::filesystem::path manifest, labels, features, embeddings, wav_dir, out_dir;
  std::vector<std::string> methods;
  int folds = 10;
  std::vector<eval::ReportFormat> formats;
  mllm::JudgeOptions judge;
  std::size_t shots = 0;
  int judge_fold = 0;

  eval::MethodSpec method(const std::string& name) const;
};

/// Merges `user` over the defaults and validates. Relative paths resolve
/// against `base_dir`. Throws UsageError on any schema violation.
RunConfig resolve_config(const nlohmann::json& user, const std::filesystem::path& base_dir);
/// `seed`, when given, replaces the file's seed before hashing.
RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace rie::cli
