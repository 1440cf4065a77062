#include "rie/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "../csv_util.hpp"
#include "rie/error.hpp"

namespace rie::eval {

namespace {

std::optional<double> metric_of(const Cell& c, int metric) {
  return metric == 0 ? c.pearson : c.ccc;
}

std::string fmt(std::optional<double> v, const char* f) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, f, *v);
  return buf;
}

}  // namespace

std::vector<bool> best_flags(const ResultTable& table, std::size_t axis, int metric) {
  std::vector<bool> flags(table.methods.size(), false);
  std::optional<double> best;
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    auto v = metric_of(table.at(axis, m), metric);
    if (v && (!best || *v > *best)) best = v;
  }
  if (!best) return flags;
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    auto v = metric_of(table.at(axis, m), metric);
    // a hair of slack so a printed tie at exactly the tolerance stays flagged
    flags[m] = v && *v >= *best - kTieTolerance - 1e-12;
  }
  return flags;
}

std::string render_report(const ResultTable& table, ReportFormat format, const RunMeta& meta) {
  std::ostringstream os;
  const auto& ax = axes();
  if (format == ReportFormat::kCsv) {
    os << "# seed: " << meta.seed << "\n";
    os << "# config_hash: " << meta.config_hash << "\n";
    os << "# corpus: " << meta.corpus_path << "\n";
    if (!meta.toolkit.empty()) os << "# toolkit: " << meta.toolkit << "\n";
    if (!meta.timestamp.empty()) os << "# timestamp: " << meta.timestamp << "\n";
    os << "axis,method,pearson,ccc,best_pearson,best_ccc\n";
    for (std::size_t a = 0; a < kAxes; ++a) {
      auto bp = best_flags(table, a, 0);
      auto bc = best_flags(table, a, 1);
      for (std::size_t m = 0; m < table.methods.size(); ++m) {
        const auto& c = table.at(a, m);
        os << ax[a].id << ',' << table.methods[m] << ',' << fmt(c.pearson, "%.6f") << ','
           << fmt(c.ccc, "%.6f") << ',' << (bp[m] ? 1 : 0) << ',' << (bc[m] ? 1 : 0) << "\n";
      }
    }
    return os.str();
  }

  os << "<!-- seed: " << meta.seed << " | config_hash: " << meta.config_hash
     << " | corpus: " << meta.corpus_path;
  if (!meta.toolkit.empty()) os << " | toolkit: " << meta.toolkit;
  if (!meta.timestamp.empty()) os << " | timestamp: " << meta.timestamp;
  os << " -->\n";
  const char* titles[] = {"Pearson correlation", "Concordance correlation (CCC)"};
  for (int metric = 0; metric < 2; ++metric) {
    os << "\n## " << titles[metric] << "\n\n| Axis |";
    for (const auto& m : table.methods) os << ' ' << m << " |";
    os << "\n|---|";
    for (std::size_t m = 0; m < table.methods.size(); ++m) os << "---:|";
    os << "\n";
    for (std::size_t a = 0; a < kAxes; ++a) {
      auto flags = best_flags(table, a, metric);
      os << "| " << ax[a].id << " (" << ax[a].low_label << " / " << ax[a].high_label << ") |";
      for (std::size_t m = 0; m < table.methods.size(); ++m) {
        std::string v = fmt(metric_of(table.at(a, m), metric), "%.3f");
        os << ' ' << (flags[m] ? "**" + v + "**" : v) << " |";
      }
      os << "\n";
    }
  }
  os << "\nBold marks the best method per axis (ties within " << kTieTolerance << ").\n";
  return os.str();
}

ResultTable parse_report_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  bool header = false;
  std::map<std::string, AxisScores> cols;
  std::vector<std::string> order;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = detail::split_csv(line);
    const std::string where = "report line " + std::to_string(lineno);
    if (!header) {
      if (f.size() < 4 || f[0] != "axis" || f[1] != "method") throw SchemaError(where + ": bad header");
      header = true;
      continue;
    }
    if (f.size() != 6 || f[0].size() != 1) throw SchemaError(where + ": expected 6 fields");
    const int a = f[0][0] - 'A';
    if (a < 0 || a >= static_cast<int>(kAxes)) throw SchemaError(where + ": unknown axis");
    if (!cols.count(f[1])) order.push_back(f[1]);
    auto& cell = cols[f[1]][static_cast<std::size_t>(a)];
    auto val = [&](const std::string& s) -> std::optional<double> {
      if (s == "n/a") return std::nullopt;
      return detail::parse_double(s, where);
    };
    cell.pearson = val(f[2]);
    cell.ccc = val(f[3]);
  }
  if (!header) throw SchemaError("report has no header");
  ResultTable t;
  for (const auto& m : order) t.add(m, cols[m]);
  return t;
}

}  // namespace rie::eval
