#include "rie/mllm/client.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <json.hpp>
#include <thread>

#include "rie/binary_io.hpp"
#include "rie/error.hpp"
#include "rie/hash.hpp"

namespace rie::mllm {

using nlohmann::json;

std::string_view to_string(ProviderKind kind) {
  return kind == ProviderKind::kOpenAi ? "openai" : "gemini";
}

ProviderKind provider_from_string(std::string_view s) {
  if (s == "openai") return ProviderKind::kOpenAi;
  if (s == "gemini") return ProviderKind::kGemini;
  throw Error("unknown provider '" + std::string(s) + "' (expected openai or gemini)");
}

RateLimiter::RateLimiter(double rate_per_s, double burst)
    : rate_(rate_per_s), burst_(burst), tokens_(burst), last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mu_);
  while (true) {
    auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

namespace {

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app | std::ios::binary);
  if (!out_) throw IoError("cannot open audit log " + path.string());
}

void AuditLog::append(const std::string& pair_id, const std::string& provider,
                      const std::string& prompt_hash, const std::string& raw,
                      const ImpressionVector* scores, const std::string& note) {
  std::lock_guard lock(mu_);
  json j;
  j["seq"] = seq_++;
  j["timestamp"] = utc_now();
  j["pair_id"] = pair_id;
  j["provider"] = provider;
  j["prompt_sha256"] = prompt_hash;
  j["raw"] = raw;
  j["scores"] = scores ? json(std::vector<double>(scores->begin(), scores->end())) : json(nullptr);
  j["note"] = note;
  out_ << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  out_.flush();
}

namespace {

struct Audio {
  std::string mime;
  std::string base64;
};

json openai_body(const ProviderConfig& cfg, const std::vector<ChatMessage>& msgs,
                 const std::vector<Audio>& audio) {
  json messages = json::array();
  for (const auto& m : msgs) {
    if (m.role == "assistant") {
      messages.push_back({{"role", "assistant"}, {"content", m.text}});
      continue;
    }
    json content = json::array({{{"type", "text"}, {"text", m.text}}});
    if (m.with_audio) {
      for (const auto& a : audio) {
        content.push_back({{"type", "input_audio"},
                           {"input_audio", {{"data", a.base64}, {"format", "wav"}}}});
      }
    }
    messages.push_back({{"role", "user"}, {"content", content}});
  }
  return {{"model", cfg.model}, {"messages", messages}};
}

json gemini_body(const std::vector<ChatMessage>& msgs, const std::vector<Audio>& audio) {
  json contents = json::array();
  for (const auto& m : msgs) {
    json parts = json::array({{{"text", m.text}}});
    if (m.with_audio) {
      for (const auto& a : audio) {
        parts.push_back({{"inline_data", {{"mime_type", a.mime}, {"data", a.base64}}}});
      }
    }
    contents.push_back({{"role", m.role == "assistant" ? "model" : "user"}, {"parts", parts}});
  }
  return {{"contents", contents}};
}

std::string reply_text(ProviderKind kind, const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ProviderError("provider returned invalid JSON");
  try {
    if (kind == ProviderKind::kOpenAi) {
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_string()) return content.get<std::string>();
      std::string out;
      for (const auto& part : content) {
        if (part.contains("text")) out += part["text"].get<std::string>();
      }
      return out;
    }
    std::string out;
    for (const auto& part : j.at("candidates").at(0).at("content").at("parts")) {
      if (part.contains("text")) out += part["text"].get<std::string>();
    }
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected provider response shape: ") + e.what());
  }
}

class Transport {
 public:
  Transport(const ProviderConfig& cfg, RateLimiter* limiter)
      : cfg_(cfg), limiter_(limiter), client_(cfg.base_url) {
    const auto secs = static_cast<time_t>(cfg.timeout_s);
    client_.set_connection_timeout(std::min<time_t>(secs, 10), 0);
    client_.set_read_timeout(secs, 0);
    client_.set_write_timeout(secs, 0);
    if (const char* key = std::getenv(cfg.api_key_env.c_str())) key_ = key;
  }

  std::string send(const std::vector<ChatMessage>& msgs, const std::vector<Audio>& audio,
                   int& requests) {
    std::string path;
    json body;
    httplib::Headers headers;
    if (cfg_.kind == ProviderKind::kOpenAi) {
      path = "/v1/chat/completions";
      body = openai_body(cfg_, msgs, audio);
      if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
    } else {
      path = "/v1beta/models/" + cfg_.model + ":generateContent";
      body = gemini_body(msgs, audio);
      if (!key_.empty()) headers.emplace("x-goog-api-key", key_);
    }
    const std::string payload = body.dump();
    const int attempts = 1 + std::max(0, cfg_.max_retries);
    std::string last_error;
    bool last_429 = false;
    for (int i = 0; i < attempts; ++i) {
      if (i > 0) {
        const auto& b = cfg_.backoff_s;
        double wait = b.empty() ? 0.0 : b[std::min<std::size_t>(static_cast<std::size_t>(i - 1), b.size() - 1)];
        if (cfg_.sleep) {
          cfg_.sleep(wait);
        } else {
          std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        }
      }
      if (limiter_) limiter_->acquire();
      ++requests;
      auto res = client_.Post(path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        last_429 = false;
        continue;
      }
      if (res->status == 200) return reply_text(cfg_.kind, res->body);
      last_error = "HTTP " + std::to_string(res->status);
      last_429 = res->status == 429;
      if (res->status >= 500 || last_429) continue;
      throw ProviderError(last_error + ": " + res->body.substr(0, 200));
    }
    if (last_429) throw RateLimited("rate limited after " + std::to_string(attempts) + " attempts");
    throw ProviderError(last_error + " after " + std::to_string(attempts) + " attempts");
  }

 private:
  const ProviderConfig& cfg_;
  RateLimiter* limiter_;
  httplib::Client client_;
  std::string key_;
};

Audio load_audio(const AudioRef& ref) {
  auto bytes = read_file_bytes(ref.path);
  return {ref.mime, base64_encode(bytes)};
}

}  // namespace

JudgeResponse judge(const JudgePrompt& prompt, const ProviderConfig& cfg, RateLimiter* limiter,
                    AuditLog* audit) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Audio> audio{load_audio(prompt.audio[0]), load_audio(prompt.audio[1])};
  const std::string provider(to_string(cfg.kind));
  const std::string prompt_hash = sha256_hex(prompt.rendered_text);
  Transport transport(cfg, limiter);

  JudgeResponse r;
  r.pair_id = prompt.pair_id;
  r.provider = provider;
  std::vector<ChatMessage> msgs{{"user", prompt.rendered_text, true}};
  for (int round = 0; round < 2; ++round) {
    std::string raw = transport.send(msgs, audio, r.requests);
    try {
      auto parsed = parse_scores(raw);
      r.scores = parsed.scores;
      r.rationale = parsed.rationale;
      r.raw = raw;
      r.repaired = round == 1;
      r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t0).count();
      if (audit) audit->append(prompt.pair_id, provider, prompt_hash, raw, &r.scores, r.repaired ? "repaired" : "ok");
      return r;
    } catch (const ParseError& e) {
      if (audit) audit->append(prompt.pair_id, provider, prompt_hash, raw, nullptr, e.what());
      if (round == 1) throw ParseError("pair " + prompt.pair_id + " after repair: " + e.what());
      msgs.push_back({"assistant", raw, false});
      msgs.push_back({"user", repair_message(prompt.language, e.what()), false});
    }
  }
  throw ParseError("unreachable");
}

FoldJudgement judge_fold(std::span<const UtterancePair> pairs,
                         const std::map<std::string, ImpressionVector>& labels,
                         const eval::FoldPlan& plan, int fold, const JudgeOptions& opts) {
  if (fold < 0 || fold >= plan.k) throw Error("fold index out of range");
  std::vector<const UtterancePair*> chosen;
  for (const auto& p : pairs) {
    auto it = plan.assignments.find(p.pair_id);
    if (it != plan.assignments.end() && it->second == fold && labels.count(p.pair_id)) {
      chosen.push_back(&p);
    }
  }
  std::sort(chosen.begin(), chosen.end(),
            [](auto* a, auto* b) { return a->pair_id < b->pair_id; });
  if (chosen.empty()) throw TooFewPairs("designated fold holds no labelled pairs");

  const auto dir = opts.template_dir.empty() ? default_template_dir() : opts.template_dir;
  std::vector<JudgePrompt> prompts;
  for (const auto* p : chosen) {
    prompts.push_back(build_prompt(*p, opts.shots, opts.language, dir,
                                   {p->utt_a, opts.wav_dir / (p->utt_a + ".wav")},
                                   {p->utt_b, opts.wav_dir / (p->utt_b + ".wav")}));
  }

  std::optional<AuditLog> audit;
  if (!opts.audit_path.empty()) audit.emplace(opts.audit_path);
  RateLimiter limiter(opts.provider.rate_per_s);
  FoldJudgement out;
  out.responses.resize(prompts.size());
  std::vector<std::exception_ptr> errors(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        out.responses[i] = judge(prompts[i], opts.provider, &limiter, audit ? &*audit : nullptr);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_workers = std::clamp(opts.concurrency, 1, static_cast<int>(prompts.size()));
  std::vector<std::thread> threads;
  for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const auto n = static_cast<Eigen::Index>(chosen.size());
  out.predictions.resize(n, static_cast<Eigen::Index>(kAxes));
  out.labels.resize(n, static_cast<Eigen::Index>(kAxes));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.pair_ids.push_back(chosen[static_cast<std::size_t>(i)]->pair_id);
    const auto& y = labels.at(out.pair_ids.back());
    for (std::size_t a = 0; a < kAxes; ++a) {
      out.predictions(i, static_cast<Eigen::Index>(a)) = out.responses[static_cast<std::size_t>(i)].scores[a];
      out.labels(i, static_cast<Eigen::Index>(a)) = y[a];
    }
  }
  out.scores = eval::score(out.predictions, out.labels);
  return out;
}

}  // namespace rie::mllm
