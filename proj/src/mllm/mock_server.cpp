#include "rie/mllm/mock_server.hpp"

#include <httplib.h>

#include <cstdio>
#include <json.hpp>

#include "rie/corpus.hpp"
#include "rie/error.hpp"
#include "rie/hash.hpp"

namespace rie::mllm {

using nlohmann::json;

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
  Responder responder;
  mutable std::mutex mu;
  std::vector<MockRequest> log;
};

namespace {

MockRequest inspect(const httplib::Request& req, bool gemini) {
  MockRequest m;
  m.path = req.path;
  m.body = req.body;
  m.auth = gemini ? req.get_header_value("x-goog-api-key") : req.get_header_value("Authorization");
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) return m;
  const char* list = gemini ? "contents" : "messages";
  if (!j.contains(list)) return m;
  for (const auto& msg : j[list]) {
    const bool user = msg.value("role", "") == "user";
    const auto& parts = gemini ? msg["parts"] : msg["content"];
    if (!parts.is_array()) continue;
    std::string text;
    for (const auto& p : parts) {
      if (p.contains("text")) text += p["text"].get<std::string>();
      if (p.contains("input_audio") || p.contains("inline_data")) ++m.audio_parts;
    }
    if (user) m.prompt_text = text;
  }
  return m;
}

json wrap(const std::string& text, bool gemini) {
  if (gemini) {
    return {{"candidates", json::array({{{"content", {{"role", "model"}, {"parts", json::array({{{"text", text}}})}}}}})}};
  }
  return {{"id", "mock"},
          {"object", "chat.completion"},
          {"choices", json::array({{{"index", 0},
                                    {"message", {{"role", "assistant"}, {"content", text}}},
                                    {"finish_reason", "stop"}}})}};
}

}  // namespace

MockServer::MockServer(Responder responder) : impl_(std::make_unique<Impl>()) {
  impl_->responder = std::move(responder);
  auto handle = [this](bool gemini) {
    return [this, gemini](const httplib::Request& req, httplib::Response& res) {
      MockRequest m = inspect(req, gemini);
      int index = 0;
      {
        std::lock_guard lock(impl_->mu);
        index = static_cast<int>(impl_->log.size());
        impl_->log.push_back(m);
      }
      // outside the lock so that concurrent requests overlap
      const MockReply reply = impl_->responder(m, index);
      res.status = reply.status;
      if (reply.status == 200) {
        res.set_content(wrap(reply.text, gemini).dump(), "application/json");
      } else {
        res.set_content(json{{"error", {{"message", "mock failure"}}}}.dump(), "application/json");
      }
    };
  };
  impl_->server.Post("/v1/chat/completions", handle(false));
  impl_->server.Post(R"(/v1beta/models/[^/]+:generateContent)", handle(true));
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw IoError("mock server could not bind a loopback port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockServer::~MockServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::vector<MockRequest> MockServer::requests() const {
  std::lock_guard lock(impl_->mu);
  return impl_->log;
}

MockReply hashed_scores_reply(const MockRequest& req, int) {
  const std::string h = sha256_hex(req.prompt_text);
  std::string body = "```json\n{";
  char buf[48];
  for (std::size_t a = 0; a < kAxes; ++a) {
    const int byte = std::stoi(h.substr(2 * a, 2), nullptr, 16);
    const double v = std::round((byte / 255.0 * 4.0 - 2.0) * 10.0) / 10.0;
    std::snprintf(buf, sizeof buf, "%s\"%c\": %.1f", a ? ", " : "", axes()[a].id, v);
    body += buf;
  }
  body += ", \"rationale\": \"mock judgement\"}\n```";
  return {200, body};
}

}  // namespace rie::mllm
