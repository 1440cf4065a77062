#pragma once

#include <cstdint>
#include <string>

#include "rie/eval/cv.hpp"

namespace rie::eval {

enum class ReportFormat { kCsv, kMarkdown };

struct RunMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string corpus_path;
  std::string toolkit;    // omitted when empty
  std::string timestamp;  // omitted when empty
};

/// Methods within this distance of a row's best score are flagged.
inline constexpr double kTieTolerance = 0.005;

/// Per axis, flags[method] for the best Pearson (metric 0) or CCC (1).
std::vector<bool> best_flags(const ResultTable& table, std::size_t axis, int metric);

/// Axis rows A..I, one column per method. Undefined values print as n/a.
/// Metadata goes into a '#' comment header (HTML comment for markdown).
std::string render_report(const ResultTable& table, ReportFormat format, const RunMeta& meta);

/// Inverse of the CSV rendering (metadata lines skipped).
ResultTable parse_report_csv(const std::string& text);

}  // namespace rie::eval
