#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "peap/error.hpp"
#include "peap/harness/client.hpp"
#include "peap/hash.hpp"
#include "peap/png.hpp"
#include "peap/render.hpp"

namespace peap::harness {
namespace {

template <typename F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

PromptPayload image_payload() {
  PromptPayload p;
  p.parts.push_back(PromptPart::text_part(std::string(kImageInstruction)));
  const PixelCanvas c = render_text("in the image", RenderSpec{});
  PromptPart img;
  img.kind = PromptPart::Kind::Image;
  img.png = encode_png(c);
  img.width = c.width();
  img.height = c.height();
  img.mask = PatchMask::from_kept(1, 2, {1, 0});
  img.patch_size = 28;
  p.parts.push_back(std::move(img));
  p.parts.push_back(PromptPart::text_part("Give the final answer."));
  p.generation = {0.0, 2048};
  return p;
}

// Local chat-completions endpoint on an ephemeral port.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

EndpointConfig http_config(const std::string& url) {
  EndpointConfig c;
  c.url = url;
  c.model = "test-model";
  c.api_key_env = "PEAP_TEST_CLIENT_KEY";
  c.timeout_seconds = 5;
  return c;
}

struct KeyEnv {
  KeyEnv() { ::setenv("PEAP_TEST_CLIENT_KEY", "sekrit", 1); }
  ~KeyEnv() { ::unsetenv("PEAP_TEST_CLIENT_KEY"); }
};

TEST(ChatRequest, ShapeAndImageEncoding) {
  const PromptPayload p = image_payload();
  const auto j = chat_request_json(p, "m", false);
  EXPECT_EQ(j.at("model"), "m");
  EXPECT_EQ(j.at("temperature"), 0.0);
  EXPECT_EQ(j.at("max_tokens"), 2048);
  const auto& content = j.at("messages").at(0).at("content");
  ASSERT_EQ(content.size(), 3u);
  EXPECT_EQ(content[0].at("type"), "text");
  EXPECT_EQ(content[0].at("text"), kImageInstruction);
  EXPECT_EQ(content[1].at("type"), "image_url");
  const std::string url = content[1].at("image_url").at("url");
  const std::string prefix = "data:image/png;base64,";
  ASSERT_EQ(url.substr(0, prefix.size()), prefix);
  EXPECT_EQ(base64_decode(url.substr(prefix.size())), p.parts[1].png);
  EXPECT_FALSE(j.contains("peap_patch_masks"));
  const auto with_mask = chat_request_json(p, "m", true);
  ASSERT_TRUE(with_mask.contains("peap_patch_masks"));
  EXPECT_EQ(with_mask.at("peap_patch_masks").at(0).at("retained"), 1);
}

TEST(ChatResponse, ParsesStringAndArrayContent) {
  const auto a = parse_chat_response(
      R"({"choices": [{"message": {"content": "Answer: 4"}}], "usage": {"prompt_tokens": 11, "completion_tokens": 3}})");
  EXPECT_EQ(a.text, "Answer: 4");
  EXPECT_EQ(a.prompt_tokens, 11);
  EXPECT_EQ(a.completion_tokens, 3);
  const auto b = parse_chat_response(
      R"({"choices": [{"message": {"content": [{"type": "text", "text": "a"}, {"type": "text", "text": "b"}]}}]})");
  EXPECT_EQ(b.text, "ab");
  EXPECT_FALSE(b.prompt_tokens.has_value());
  expect_error(ErrorCode::TransportError, [] { parse_chat_response("<html>"); });
  expect_error(ErrorCode::TransportError, [] { parse_chat_response(R"({"choices": []})"); });
}

TEST(HttpClient, RoundTripWithCredential) {
  KeyEnv env;
  std::string seen_auth, seen_model;
  FakeEndpoint server([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_model = nlohmann::json::parse(req.body).at("model");
    res.set_content(R"({"choices": [{"message": {"content": "Answer: True"}}]})", "application/json");
  });
  HttpChatClient client(http_config(server.url()));
  EXPECT_EQ(client.model_id(), "test-model");
  const ModelResponse r = client.send(image_payload());
  EXPECT_EQ(r.text, "Answer: True");
  EXPECT_EQ(seen_auth, "Bearer sekrit");
  EXPECT_EQ(seen_model, "test-model");
}

TEST(HttpClient, MissingCredentialIsAuthError) {
  ::unsetenv("PEAP_TEST_CLIENT_KEY");
  expect_error(ErrorCode::AuthError, [] { HttpChatClient client(http_config("http://127.0.0.1:9/v1/chat/completions")); });
}

TEST(HttpClient, StatusCodesMapToErrors) {
  KeyEnv env;
  int status = 401;
  FakeEndpoint server([&](const httplib::Request&, httplib::Response& res) {
    res.status = status;
    res.set_content("{}", "application/json");
  });
  HttpChatClient client(http_config(server.url()));
  expect_error(ErrorCode::AuthError, [&] { client.send(image_payload()); });
  status = 403;
  expect_error(ErrorCode::AuthError, [&] { client.send(image_payload()); });
  status = 503;
  expect_error(ErrorCode::TransportError, [&] { client.send(image_payload()); });
}

TEST(HttpClient, TimeoutIsTransportError) {
  KeyEnv env;
  FakeEndpoint server([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    res.set_content(R"({"choices": [{"message": {"content": "late"}}]})", "application/json");
  });
  EndpointConfig cfg = http_config(server.url());
  cfg.timeout_seconds = 0.3;
  HttpChatClient client(cfg);
  expect_error(ErrorCode::TransportError, [&] { client.send(image_payload()); });
}

TEST(HttpClient, UnreachableEndpointIsTransportError) {
  EndpointConfig cfg = http_config("http://127.0.0.1:9/v1/chat/completions");
  cfg.api_key_env.clear();
  cfg.timeout_seconds = 1;
  HttpChatClient client(cfg);
  expect_error(ErrorCode::TransportError, [&] { client.send(image_payload()); });
}

TEST(EndpointConfig, Validation) {
  EndpointConfig c;
  expect_error(ErrorCode::InvalidConfig, [&] { c.validate(); });
  c.url = "ftp://x";
  c.model = "m";
  expect_error(ErrorCode::InvalidConfig, [&] { c.validate(); });
  c.url = "https://api.example.com/v1/chat/completions";
  EXPECT_NO_THROW(c.validate());
  c.kind = "mock";
  c.mock_behavior = "random";
  expect_error(ErrorCode::InvalidConfig, [&] { c.validate(); });
  EndpointConfig round = EndpointConfig::from_json(http_config("http://h/p").to_json());
  EXPECT_EQ(round.url, "http://h/p");
  EXPECT_EQ(round.api_key_env, "PEAP_TEST_CLIENT_KEY");
}

TEST(QueryModel, RetriesTransientFailures) {
  auto mock = MockClient::fixed("Answer: 1");
  mock->fail_next(2);
  TickClock clock;
  RetryPolicy fast{3, 0.001, 2.0};
  const ModelResponse r = query_model(*mock, image_payload(), fast, clock);
  EXPECT_EQ(r.text, "Answer: 1");
  EXPECT_EQ(r.retries, 2);
  EXPECT_EQ(mock->calls(), 3);
  EXPECT_GT(r.latency_seconds, 0.0);
}

TEST(QueryModel, GivesUpAfterMaxAttempts) {
  auto mock = MockClient::fixed("x");
  mock->fail_next(3);
  TickClock clock;
  expect_error(ErrorCode::TransportError, [&] { query_model(*mock, image_payload(), RetryPolicy{3, 0.0, 2.0}, clock); });
  EXPECT_EQ(mock->calls(), 3);
}

TEST(QueryModel, AuthErrorsAreNotRetried) {
  int calls = 0;
  MockClient denied([&](const PromptPayload&) -> std::string {
    ++calls;
    throw Error(ErrorCode::AuthError, "denied");
  });
  TickClock clock;
  expect_error(ErrorCode::AuthError, [&] { query_model(denied, image_payload(), RetryPolicy{3, 0.0, 2.0}, clock); });
  EXPECT_EQ(calls, 1);
}

TEST(MockClient, EchoMirrorsPrompt) {
  auto echo = MockClient::echo();
  const PromptPayload p = image_payload();
  const std::string text = echo->send(p).text;
  EXPECT_EQ(text.rfind(kImageInstruction, 0), 0u);
  EXPECT_NE(text.find("[image 512x256 " + sha256_hex(p.parts[1].png).substr(0, 16) + "]"), std::string::npos);
  EXPECT_NE(text.find("Give the final answer."), std::string::npos);
  EndpointConfig cfg;
  cfg.kind = "mock";
  EXPECT_EQ(make_client(cfg)->model_id(), "mock-echo");
}

TEST(TickClock, IntervalsAreExactAndPerThread) {
  TickClock clock;
  const double a = clock.now(), b = clock.now();
  EXPECT_EQ(b - a, 1.0 / 1024.0);
  double other = 0;
  std::thread([&] { other = clock.now(); }).join();
  EXPECT_EQ(other, 1.0 / 1024.0);
}

}  // namespace
}  // namespace peap::harness
