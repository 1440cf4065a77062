#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rie/corpus.hpp"

namespace rie::mllm {

enum class Language { kEn, kJa };

std::string_view to_string(Language lang);
Language language_from_string(std::string_view s);

/// A scored in-context example.
struct Shot {
  std::string pair_id;
  ImpressionVector scores{};
};

struct AudioRef {
  std::string utt_id;
  std::filesystem::path path;
  std::string mime = "audio/wav";
};

struct JudgePrompt {
  std::string template_id;
  Language language = Language::kJa;
  std::string rendered_text;
  std::vector<Shot> shots;
  std::array<AudioRef, 2> audio;
  std::string pair_id;
};

inline constexpr std::size_t kMaxShots = 8;

/// Directory holding judge_en.txt / judge_ja.txt shipped with the sources.
std::filesystem::path default_template_dir();

/// Renders `judge_<lang>.txt` from `template_dir`. Placeholders: {{PAIR_ID}},
/// {{AXES}}, {{SHOTS}}, {{FORMAT}}. Throws TemplateNotFound when the file is
/// missing, Error for more than kMaxShots shots.
JudgePrompt build_prompt(const UtterancePair& pair, std::span<const Shot> shots, Language lang,
                         const std::filesystem::path& template_dir, AudioRef a, AudioRef b);

/// Follow-up message asking for a corrected reply after a parse failure.
std::string repair_message(Language lang, const std::string& diagnostic);

}  // namespace rie::mllm
