#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "rie/eval/cv.hpp"
#include "rie/mllm/parse.hpp"
#include "rie/mllm/prompt.hpp"

namespace rie::mllm {

enum class ProviderKind { kOpenAi, kGemini };

std::string_view to_string(ProviderKind kind);
ProviderKind provider_from_string(std::string_view s);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::kOpenAi;
  std::string base_url = "https://api.openai.com";  // scheme://host[:port]
  std::string model = "gpt-4o-audio-preview";
  std::string api_key_env = "RIE_API_KEY";
  int max_retries = 3;
  std::vector<double> backoff_s{1.0, 2.0, 4.0};
  double timeout_s = 120.0;
  /// Requests per second shared by all workers; 0 disables the limiter.
  double rate_per_s = 0.0;
  /// Replaced in tests so that backoff does not actually sleep.
  std::function<void(double)> sleep;
};

struct ChatMessage {
  std::string role;  // user | assistant
  std::string text;
  bool with_audio = false;
};

struct JudgeResponse {
  std::string pair_id;
  ImpressionVector scores{};
  std::string rationale;
  std::string raw;
  std::string provider;
  long latency_ms = 0;
  int requests = 0;    // HTTP requests issued, retries included
  bool repaired = false;
};

/// Token bucket: `acquire` blocks until one request may be sent.
class RateLimiter {
 public:
  explicit RateLimiter(double rate_per_s, double burst = 1.0);
  void acquire();

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

/// Append-only JSONL log with monotonic sequence numbers; thread safe.
class AuditLog {
 public:
  explicit AuditLog(const std::filesystem::path& path);
  void append(const std::string& pair_id, const std::string& provider,
              const std::string& prompt_hash, const std::string& raw,
              const ImpressionVector* scores, const std::string& note);
  std::uint64_t next_sequence() const { return seq_; }

 private:
  std::mutex mu_;
  std::ofstream out_;
  std::uint64_t seq_ = 0;
};

/// Sends the prompt with both audio files, parses the reply, and on a parse
/// failure issues exactly one repair re-prompt. Transport failures and 5xx
/// are retried with backoff; exhausting retries throws ProviderError
/// (RateLimited when the last failure was HTTP 429). Other 4xx throw
/// ProviderError at once; a second unparsable reply throws ParseError.
JudgeResponse judge(const JudgePrompt& prompt, const ProviderConfig& cfg,
                    RateLimiter* limiter = nullptr, AuditLog* audit = nullptr);

struct JudgeOptions {
  ProviderConfig provider;
  Language language = Language::kJa;
  std::filesystem::path template_dir;
  std::filesystem::path wav_dir;
  std::vector<Shot> shots;
  std::filesystem::path audit_path;  // empty = no audit log
  int concurrency = 2;
};

struct FoldJudgement {
  std::vector<std::string> pair_ids;
  Eigen::MatrixXd predictions;  // n x 9
  Eigen::MatrixXd labels;
  eval::AxisScores scores;
  std::vector<JudgeResponse> responses;
};

/// Judges every labelled pair of one fold, at most `concurrency` requests
/// in flight. Results are ordered by pair id.
FoldJudgement judge_fold(std::span<const UtterancePair> pairs,
                         const std::map<std::string, ImpressionVector>& labels,
                         const eval::FoldPlan& plan, int fold, const JudgeOptions& opts);

}  // namespace rie::mllm
