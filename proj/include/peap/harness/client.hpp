#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "peap/harness/prompt.hpp"

namespace peap::harness {

// Seconds from an arbitrary origin.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
};

class SteadyClock final : public Clock {
 public:
  double now() override;
};

// Deterministic clock: every reading on a thread advances that thread's time
// by `step` seconds, so measured intervals depend only on the code path.
// The default step is a power of two so sums of intervals stay exact.
class TickClock final : public Clock {
 public:
  explicit TickClock(double step = 1.0 / 1024.0) : step_(step) {}
  double now() override;

 private:
  double step_;
};

struct ModelResponse {
  std::string text;
  double latency_seconds = 0.0;
  std::optional<long> prompt_tokens;
  std::optional<long> completion_tokens;
  int retries = 0;
};

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::string model_id() const = 0;
  // One request. Throws TransportError (retried by query_model) or AuthError.
  virtual ModelResponse send(const PromptPayload& payload) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  double initial_backoff_seconds = 0.5;
  double backoff_multiplier = 2.0;
};

// Retries transport failures with exponential backoff; latency covers all
// attempts.
ModelResponse query_model(ModelClient& client, const PromptPayload& payload, const RetryPolicy& retry, Clock& clock);

struct EndpointConfig {
  std::string kind = "http";  // "http" or "mock"
  std::string url;            // full chat-completions URL
  std::string model;
  std::string api_key_env = "PEAP_API_KEY";  // empty: no credential sent
  double timeout_seconds = 120.0;
  // Adds the blank-patch mask of each image as a request extension field.
  bool send_patch_mask = false;
  std::string mock_behavior = "echo";  // "echo" or "fixed"
  std::string mock_text;

  void validate() const;
  nlohmann::json to_json() const;
  static EndpointConfig from_json(const nlohmann::json& j);
};

nlohmann::json chat_request_json(const PromptPayload& payload, const std::string& model, bool send_patch_mask);
ModelResponse parse_chat_response(const std::string& body);

class HttpChatClient final : public ModelClient {
 public:
  // Reads the credential from the configured environment variable; a
  // missing variable is an AuthError.
  explicit HttpChatClient(EndpointConfig cfg);

  std::string model_id() const override { return cfg_.model; }
  ModelResponse send(const PromptPayload& payload) override;

 private:
  EndpointConfig cfg_;
  std::string api_key_;
  std::string origin_;
  std::string path_;
};

class MockClient final : public ModelClient {
 public:
  using Responder = std::function<std::string(const PromptPayload&)>;

  explicit MockClient(Responder responder, std::string model_id = "mock");
  // Mirrors the prompt: text parts verbatim, images as "[image WxH <sha>]".
  static std::unique_ptr<MockClient> echo();
  static std::unique_ptr<MockClient> fixed(std::string text);

  // The next n requests fail with a transport error.
  void fail_next(int n) { failures_.store(n); }
  long calls() const { return calls_.load(); }

  std::string model_id() const override { return model_id_; }
  ModelResponse send(const PromptPayload& payload) override;

 private:
  Responder responder_;
  std::string model_id_;
  std::atomic<int> failures_{0};
  std::atomic<long> calls_{0};
};

std::string echo_text(const PromptPayload& payload);

std::unique_ptr<ModelClient> make_client(const EndpointConfig& cfg);

}  // namespace peap::harness
