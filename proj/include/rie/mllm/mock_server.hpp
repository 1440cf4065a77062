#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rie::mllm {

/// What the mock returns for one request: an HTTP status and, for 200, the
/// assistant text wrapped in the provider's response shape.
struct MockReply {
  int status = 200;
  std::string text;
};

struct MockRequest {
  std::string path;
  std::string body;
  std::string prompt_text;  // text of the last user message
  int audio_parts = 0;
  std::string auth;         // Authorization or x-goog-api-key header
};

/// Loopback server speaking the OpenAI-style and Gemini-style chat
/// contracts. The responder sees every request in arrival order.
class MockServer {
 public:
  using Responder = std::function<MockReply(const MockRequest&, int call_index)>;

  explicit MockServer(Responder responder);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const { return port_; }
  std::string base_url() const;
  std::vector<MockRequest> requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// Responder that answers with a strict JSON block derived from a hash of
/// the prompt: deterministic, in range, and uncorrelated with labels.
MockReply hashed_scores_reply(const MockRequest& req, int call_index);

}  // namespace rie::mllm
