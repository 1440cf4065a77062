#pragma once

#include <string>
#include <string_view>

#include "rie/corpus.hpp"

namespace rie::mllm {

enum class ParsePath { kStrict, kFallback };

struct ParsedScores {
  ImpressionVector scores{};  // centered, each in [-3, 3]
  std::string rationale;
  ParsePath path = ParsePath::kStrict;
  bool centered_from_likert = false;
};

/// Strict path: a fenced or bare JSON object with keys "A".."I" (optionally
/// nested under "scores") and "rationale". Fallback: lines of the form
/// "<axis letter or labels>: <number>". Values that look like a 1..7 rating
/// (all in [1, 7], some above 3, and the text mentions a seven-point scale)
/// are centered by subtracting 4. Throws ParseError naming missing axes or
/// out-of-range values.
ParsedScores parse_scores(std::string_view raw);

}  // namespace rie::mllm
