#include "peap/harness/client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>

#include "peap/error.hpp"
#include "peap/hash.hpp"

namespace peap::harness {

double SteadyClock::now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double TickClock::now() {
  thread_local std::uint64_t ticks = 0;
  return static_cast<double>(++ticks) * step_;
}

ModelResponse query_model(ModelClient& client, const PromptPayload& payload, const RetryPolicy& retry, Clock& clock) {
  const double start = clock.now();
  double backoff = retry.initial_backoff_seconds;
  const int attempts = std::max(1, retry.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      ModelResponse r = client.send(payload);
      r.retries = attempt - 1;
      r.latency_seconds = clock.now() - start;
      return r;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError) throw;
      if (attempt >= attempts) {
        throw Error(ErrorCode::TransportError,
                    "giving up after " + std::to_string(attempts) + " attempts: " + std::string(e.what()));
      }
    }
    if (backoff > 0) std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    backoff *= retry.backoff_multiplier;
  }
}

void EndpointConfig::validate() const {
  if (kind == "mock") {
    if (mock_behavior != "echo" && mock_behavior != "fixed") {
      throw Error(ErrorCode::InvalidConfig, "mock behavior must be echo or fixed");
    }
    return;
  }
  if (kind != "http") throw Error(ErrorCode::InvalidConfig, "endpoint kind must be http or mock");
  static const std::regex url_re(R"(^https?://[^/\s]+(/\S*)?$)");
  if (!std::regex_match(url, url_re)) throw Error(ErrorCode::InvalidConfig, "endpoint url must be http(s)://host[/path]");
  if (model.empty()) throw Error(ErrorCode::InvalidConfig, "endpoint model is required");
  if (!(timeout_seconds > 0)) throw Error(ErrorCode::InvalidConfig, "endpoint timeout must be positive");
}

nlohmann::json EndpointConfig::to_json() const {
  return {{"kind", kind},
          {"url", url},
          {"model", model},
          {"api_key_env", api_key_env},
          {"timeout_seconds", timeout_seconds},
          {"send_patch_mask", send_patch_mask},
          {"mock_behavior", mock_behavior},
          {"mock_text", mock_text}};
}

EndpointConfig EndpointConfig::from_json(const nlohmann::json& j) {
  EndpointConfig c;
  c.kind = j.value("kind", c.kind);
  c.url = j.value("url", c.url);
  c.model = j.value("model", c.kind == "mock" ? std::string("mock") : c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.send_patch_mask = j.value("send_patch_mask", c.send_patch_mask);
  c.mock_behavior = j.value("mock_behavior", c.mock_behavior);
  c.mock_text = j.value("mock_text", c.mock_text);
  c.validate();
  return c;
}

nlohmann::json chat_request_json(const PromptPayload& payload, const std::string& model, bool send_patch_mask) {
  nlohmann::json content = nlohmann::json::array();
  nlohmann::json masks = nlohmann::json::array();
  for (const auto& part : payload.parts) {
    if (part.kind == PromptPart::Kind::Text) {
      content.push_back({{"type", "text"}, {"text", part.text}});
    } else {
      content.push_back(
          {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(part.png)}}}});
      masks.push_back(part.mask ? part.mask->to_json(part.patch_size) : nlohmann::json(nullptr));
    }
  }
  nlohmann::json req{{"model", model},
                     {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
                     {"temperature", payload.generation.temperature},
                     {"max_tokens", payload.generation.max_tokens}};
  if (send_patch_mask) req["peap_patch_masks"] = masks;
  return req;
}

ModelResponse parse_chat_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::TransportError, "response is not JSON");
  }
  ModelResponse r;
  try {
    const auto& msg = j.at("choices").at(0).at("message");
    const auto& content = msg.at("content");
    if (content.is_string()) {
      r.text = content.get<std::string>();
    } else if (content.is_array()) {
      for (const auto& p : content) {
        if (p.value("type", "") == "text") r.text += p.value("text", "");
      }
    } else if (!content.is_null()) {
      throw Error(ErrorCode::TransportError, "unexpected message content");
    }
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::TransportError, "response lacks choices[0].message.content");
  }
  if (j.contains("usage") && j.at("usage").is_object()) {
    const auto& u = j.at("usage");
    if (u.contains("prompt_tokens") && u.at("prompt_tokens").is_number()) r.prompt_tokens = u.at("prompt_tokens").get<long>();
    if (u.contains("completion_tokens") && u.at("completion_tokens").is_number()) {
      r.completion_tokens = u.at("completion_tokens").get<long>();
    }
  }
  return r;
}

HttpChatClient::HttpChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key) throw Error(ErrorCode::AuthError, "environment variable " + cfg_.api_key_env + " is not set");
    api_key_ = key;
  }
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  std::regex_match(cfg_.url, m, url_re);
  origin_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
}

ModelResponse HttpChatClient::send(const PromptPayload& payload) {
  httplib::Client cli(origin_);
  const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
  const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string body = chat_request_json(payload, cfg_.model, cfg_.send_patch_mask).dump();
  auto res = cli.Post(path_, headers, body, "application/json");
  if (!res) throw Error(ErrorCode::TransportError, "request failed: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403) {
    throw Error(ErrorCode::AuthError, "endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(res->status));
  }
  return parse_chat_response(res->body);
}

std::string echo_text(const PromptPayload& payload) {
  std::string out;
  for (const auto& p : payload.parts) {
    if (!out.empty()) out += '\n';
    if (p.kind == PromptPart::Kind::Text) {
      out += p.text;
    } else {
      out += "[image " + std::to_string(p.width) + "x" + std::to_string(p.height) + " " +
             sha256_hex(p.png).substr(0, 16) + "]";
    }
  }
  return out;
}

MockClient::MockClient(Responder responder, std::string model_id)
    : responder_(std::move(responder)), model_id_(std::move(model_id)) {}

std::unique_ptr<MockClient> MockClient::echo() {
  return std::make_unique<MockClient>([](const PromptPayload& p) { return echo_text(p); }, "mock-echo");
}

std::unique_ptr<MockClient> MockClient::fixed(std::string text) {
  return std::make_unique<MockClient>([t = std::move(text)](const PromptPayload&) { return t; }, "mock-fixed");
}

ModelResponse MockClient::send(const PromptPayload& payload) {
  ++calls_;
  int pending = failures_.load();
  while (pending > 0) {
    if (failures_.compare_exchange_weak(pending, pending - 1)) throw Error(ErrorCode::TransportError, "injected failure");
  }
  ModelResponse r;
  r.text = responder_(payload);
  return r;
}

std::unique_ptr<ModelClient> make_client(const EndpointConfig& cfg) {
  cfg.validate();
  if (cfg.kind == "mock") {
    if (cfg.mock_behavior == "fixed") return MockClient::fixed(cfg.mock_text);
    return MockClient::echo();
  }
  return std::make_unique<HttpChatClient>(cfg);
}

}  // namespace peap::harness
