#include "rie/mllm/prompt.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rie/error.hpp"

namespace rie::mllm {

std::string_view to_string(Language lang) { return lang == Language::kEn ? "en" : "ja"; }

Language language_from_string(std::string_view s) {
  if (s == "en") return Language::kEn;
  if (s == "ja") return Language::kJa;
  throw Error("unknown language '" + std::string(s) + "' (expected en or ja)");
}

std::filesystem::path default_template_dir() { return RIE_PROMPT_DIR; }

namespace {

void replace_all(std::string& s, std::string_view key, const std::string& value) {
  for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
    s.replace(pos, key.size(), value);
  }
}

std::string score_object(const ImpressionVector& v) {
  std::string out = "{";
  char buf[32];
  for (std::size_t a = 0; a < kAxes; ++a) {
    std::snprintf(buf, sizeof buf, "%s\"%c\": %.2f", a ? ", " : "", axes()[a].id, v[a]);
    out += buf;
  }
  return out + "}";
}

std::string render_axes(Language lang) {
  std::string out;
  for (const auto& ax : axes()) {
    const bool en = lang == Language::kEn;
    out += std::string(1, ax.id) + ". " + std::string(en ? ax.low_label : ax.low_label_ja) +
           " (-3) " + (en ? "<->" : "〜") + " " +
           std::string(en ? ax.high_label : ax.high_label_ja) + " (+3)\n";
  }
  return out;
}

std::string render_shots(std::span<const Shot> shots, Language lang) {
  if (shots.empty()) return "";
  std::string out = lang == Language::kEn ? "Scored examples from other pairs:\n"
                                          : "他のペアの評価例:\n";
  for (const auto& s : shots) out += s.pair_id + ": " + score_object(s.scores) + "\n";
  return out;
}

std::string render_format(Language lang) {
  std::string body = "{\"A\": 0.0, \"B\": 0.0, \"C\": 0.0, \"D\": 0.0, \"E\": 0.0, "
                     "\"F\": 0.0, \"G\": 0.0, \"H\": 0.0, \"I\": 0.0, \"rationale\": \"...\"}";
  if (lang == Language::kEn) {
    return "Answer with exactly one JSON block in the following form and nothing after it.\n"
           "Replace each 0.0 with your score and put a brief rationale in \"rationale\".\n"
           "```json\n" + body + "\n```\n";
  }
  return "次の形式のJSONブロックを1つだけ出力し、その後には何も書かないでください。\n"
         "各0.0を評価値に置き換え、\"rationale\"に簡潔な理由を書いてください。\n"
         "```json\n" + body + "\n```\n";
}

}  // namespace

JudgePrompt build_prompt(const UtterancePair& pair, std::span<const Shot> shots, Language lang,
                         const std::filesystem::path& template_dir, AudioRef a, AudioRef b) {
  if (shots.size() > kMaxShots) {
    throw Error("at most " + std::to_string(kMaxShots) + " shots are supported");
  }
  const std::string id = "judge_" + std::string(to_string(lang));
  const auto path = template_dir / (id + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateNotFound("prompt template not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();

  JudgePrompt p;
  p.template_id = id;
  p.language = lang;
  p.pair_id = pair.pair_id;
  p.shots.assign(shots.begin(), shots.end());
  p.audio = {std::move(a), std::move(b)};
  p.rendered_text = ss.str();
  replace_all(p.rendered_text, "{{PAIR_ID}}", pair.pair_id);
  replace_all(p.rendered_text, "{{AXES}}", render_axes(lang));
  replace_all(p.rendered_text, "{{SHOTS}}", render_shots(shots, lang));
  replace_all(p.rendered_text, "{{FORMAT}}", render_format(lang));
  return p;
}

std::string repair_message(Language lang, const std::string& diagnostic) {
  if (lang == Language::kEn) {
    return "Your previous reply could not be parsed (" + diagnostic +
           "). Reply again with only the JSON block containing all nine keys A to I, each a "
           "number from -3 to 3, and \"rationale\".";
  }
  return "前回の回答を解析できませんでした（" + diagnostic +
         "）。AからIまでの9つのキー（各-3から3の数値）と\"rationale\"を含むJSONブロックだけを"
         "もう一度出力してください。";
}

}  // namespace rie::mllm
