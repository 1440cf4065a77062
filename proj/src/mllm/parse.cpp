#include "rie/mllm/parse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>
#include <optional>
#include <regex>
#include <vector>

#include "rie/error.hpp"

namespace rie::mllm {

namespace {

using nlohmann::json;
using Partial = std::array<std::optional<double>, kAxes>;

// Full-width punctuation and digits, and unicode minus signs, to ASCII.
std::string normalize(std::string_view raw) {
  static const std::pair<std::string_view, std::string_view> kMap[] = {
      {"\xE2\x88\x92", "-"}, {"\xEF\xBC\x8D", "-"}, {"\xEF\xBC\x8B", "+"},
      {"\xEF\xBC\x9A", ":"}, {"\xEF\xBC\x8E", "."}, {"\xEF\xBD\x9B", "{"},
      {"\xEF\xBD\x9D", "}"}, {"\xE2\x80\x9C", "\""}, {"\xE2\x80\x9D", "\""}};
  std::string s(raw);
  for (const auto& [from, to] : kMap) {
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) {
      s.replace(p, from.size(), to);
    }
  }
  // U+FF10..U+FF19 are EF BC 90..99
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xEF &&
        static_cast<unsigned char>(s[i + 1]) == 0xBC) {
      auto c = static_cast<unsigned char>(s[i + 2]);
      if (c >= 0x90 && c <= 0x99) {
        out += static_cast<char>('0' + (c - 0x90));
        i += 2;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool contains(const std::string& hay, std::string_view needle) {
  return hay.find(needle) != std::string::npos;
}

// Axis named by a letter key ("A", "b", "C (Calm-Restless)") or by its
// two endpoint labels in either language.
int axis_of_key(const std::string& key) {
  std::string k = key;
  k.erase(0, k.find_first_not_of(" *_`\"'"));
  if (!k.empty()) {
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(k[0])));
    // "A", "A.", "A)", "A (High/Low)" but not "I think"
    bool letter_only = k.size() == 1 || std::string_view(".):-_*`\"'").find(k[1]) != std::string_view::npos;
    if (!letter_only && k[1] == ' ') {
      auto rest = k.find_first_not_of(' ', 1);
      letter_only = rest == std::string::npos || k[rest] == '(' || k[rest] == '[' || k[rest] == '-';
    }
    if (c >= 'A' && c <= 'I' && letter_only) return c - 'A';
  }
  const std::string lk = lower(key);
  for (std::size_t a = 0; a < kAxes; ++a) {
    const auto& ax = axes()[a];
    if ((contains(lk, lower(std::string(ax.low_label))) &&
         contains(lk, lower(std::string(ax.high_label)))) ||
        (contains(key, ax.low_label_ja) && contains(key, ax.high_label_ja))) {
      return static_cast<int>(a);
    }
  }
  return -1;
}

std::optional<double> number_of(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    try {
      std::size_t used = 0;
      double d = std::stod(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::size_t count(const Partial& p) {
  return static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](auto& v) { return v.has_value(); }));
}

std::string missing_axes(const Partial& p) {
  std::string out;
  for (std::size_t a = 0; a < kAxes; ++a) {
    if (!p[a]) out += std::string(out.empty() ? "" : ",") + axes()[a].id;
  }
  return out;
}

struct Candidate {
  Partial values;
  std::string rationale;
};

std::optional<Candidate> from_json(const json& j) {
  if (!j.is_object()) return std::nullopt;
  const json* body = &j;
  for (const char* key : {"scores", "score", "ratings"}) {
    if (j.contains(key) && j[key].is_object()) body = &j[key];
  }
  Candidate c;
  for (const auto& [k, v] : body->items()) {
    int a = axis_of_key(k);
    if (a < 0) continue;
    if (auto d = number_of(v)) c.values[static_cast<std::size_t>(a)] = d;
  }
  for (const char* key : {"rationale", "reason", "explanation", "理由"}) {
    if (j.contains(key) && j[key].is_string()) {
      c.rationale = j[key].get<std::string>();
      break;
    }
  }
  if (count(c.values) == 0) return std::nullopt;
  return c;
}

// Balanced {...} spans, skipping braces inside JSON strings.
struct Span {
  std::size_t begin, end;
};

std::vector<Span> object_spans(const std::string& s) {
  std::vector<Span> out;
  for (std::size_t start = s.find('{'); start != std::string::npos; start = s.find('{', start + 1)) {
    int depth = 0;
    bool in_str = false;
    for (std::size_t i = start; i < s.size(); ++i) {
      char c = s[i];
      if (in_str) {
        if (c == '\\') ++i;
        else if (c == '"') in_str = false;
        continue;
      }
      if (c == '"') in_str = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        out.push_back({start, i + 1});
        break;
      }
    }
  }
  return out;
}

// Best strict candidate: the last object with the most axes. An object
// nested in the current best (a "scores" member) only wins with more axes.
std::optional<Candidate> strict_block(const std::string& text) {
  std::optional<Candidate> best;
  std::size_t best_end = 0;
  for (const auto& span : object_spans(text)) {
    json j = json::parse(text.substr(span.begin, span.end - span.begin), nullptr, false);
    if (j.is_discarded()) continue;
    auto c = from_json(j);
    if (!c) continue;
    const bool nested = best && span.begin < best_end;
    if (!best || count(c->values) > count(best->values) ||
        (!nested && count(c->values) == count(best->values))) {
      best = c;
      best_end = span.end;
    }
  }
  return best;
}

std::optional<double> first_number(const std::string& s) {
  static const std::regex kNum(R"([+-]?\d+(?:\.\d+)?)");
  std::smatch m;
  if (!std::regex_search(s, m, kNum)) return std::nullopt;
  return std::stod(m.str());
}

Candidate line_patterns(const std::string& text) {
  static const std::regex kLead(R"(^\s*(?:[-*•#>]+\s*)?(?:\*\*)?\s*([A-Ia-i])\s*(?:\*\*)?\s*[.):])");
  Candidate c;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() + 1 : end + 1;

    if (!line.empty() && line.find('|') != std::string::npos) {
      // markdown table row: | A | label | value |
      std::vector<std::string> cells;
      std::size_t s = 0;
      while (s < line.size()) {
        std::size_t e = line.find('|', s);
        cells.push_back(line.substr(s, e == std::string::npos ? std::string::npos : e - s));
        if (e == std::string::npos) break;
        s = e + 1;
      }
      int axis = -1;
      std::optional<double> value;
      for (auto& cell : cells) {
        cell.erase(0, cell.find_first_not_of(" *"));
        cell.erase(cell.find_last_not_of(" *\r") + 1);
        if (cell.empty()) continue;
        if (axis < 0 && axis_of_key(cell) >= 0 && (cell.size() == 1 || !first_number(cell))) {
          axis = axis_of_key(cell);
          continue;
        }
        static const std::regex kCellNum(R"(^[+-]?\d+(?:\.\d+)?$)");
        if (axis >= 0 && std::regex_match(cell, kCellNum)) value = std::stod(cell);
      }
      if (axis >= 0 && value) c.values[static_cast<std::size_t>(axis)] = value;
      continue;
    }

    const auto colon = line.find_first_of(":=");
    if (colon == std::string::npos) continue;
    const std::string head = line.substr(0, colon);
    const std::string tail = line.substr(colon + 1);
    const std::string lh = lower(head);
    if (lh.find("rationale") != std::string::npos || lh.find("reason") != std::string::npos ||
        head.find("理由") != std::string::npos) {
      std::string r = tail;
      r.erase(0, r.find_first_not_of(' '));
      c.rationale = r;
      continue;
    }
    int axis = -1;
    std::smatch m;
    if (std::regex_search(line, m, kLead) && static_cast<std::size_t>(m.position(0) + m.length(0)) <= colon + 1) {
      axis = std::toupper(static_cast<unsigned char>(m.str(1)[0])) - 'A';
    } else {
      axis = axis_of_key(head);
    }
    if (axis < 0) continue;
    if (auto v = first_number(tail)) c.values[static_cast<std::size_t>(axis)] = v;
  }
  return c;
}

bool mentions_seven_point_scale(const std::string& text) {
  static const std::regex kScale(
      R"((\b1\s*(?:-|–|~|〜|to|から)\s*7\b)|seven[- ]point|7[- ]point|7段階|7件法|/\s*7\b)",
      std::regex::icase);
  return std::regex_search(text, kScale);
}

ParsedScores finish(const Candidate& c, ParsePath path, const std::string& text) {
  ParsedScores out;
  out.path = path;
  out.rationale = c.rationale;
  bool likert = true, above3 = false;
  for (const auto& v : c.values) {
    if (!std::isfinite(*v)) throw ParseError("non-finite score");
    likert = likert && *v >= 1.0 && *v <= 7.0;
    above3 = above3 || *v > 3.0;
  }
  out.centered_from_likert = likert && above3 && mentions_seven_point_scale(text);
  for (std::size_t a = 0; a < kAxes; ++a) {
    double v = *c.values[a] - (out.centered_from_likert ? 4.0 : 0.0);
    if (v < -3.0 || v > 3.0) {
      throw ParseError(std::string("score for axis ") + axes()[a].id + " out of range: " +
                       std::to_string(*c.values[a]));
    }
    out.scores[a] = v;
  }
  return out;
}

}  // namespace

ParsedScores parse_scores(std::string_view raw) {
  const std::string text = normalize(raw);
  auto strict = strict_block(text);
  if (strict && count(strict->values) == kAxes) return finish(*strict, ParsePath::kStrict, text);
  auto loose = line_patterns(text);
  if (count(loose.values) == kAxes) {
    if (loose.rationale.empty() && strict) loose.rationale = strict->rationale;
    return finish(loose, ParsePath::kFallback, text);
  }
  const Partial& best = strict && count(strict->values) >= count(loose.values) ? strict->values
                                                                                : loose.values;
  if (count(best) == 0) throw ParseError("no scores found; missing axes: " + missing_axes(best));
  throw ParseError("missing axes: " + missing_axes(best));
}

}  // namespace rie::mllm
