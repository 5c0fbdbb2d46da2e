#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "qrefine/error.hpp"
#include "qrefine/llm.hpp"
#include "test_helpers.hpp"

using namespace qrefine;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

PromptBundle bundle(std::string user) { return PromptBundle{"system", std::move(user), PromptKind::repair}; }

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

// Chat-completions stand-in answering from a handler on a local port.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
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

std::string chat_body(const std::string& content) {
  return json{{"choices", json::array({json{{"message", json{{"role", "assistant"}, {"content", content}}}}})},
              {"usage", json{{"prompt_tokens", 12}, {"completion_tokens", 5}}}}
      .dump();
}

ProviderConfig live_config(const std::string& url) {
  ::setenv("QREFINE_TEST_KEY", "secret", 1);
  ProviderConfig c;
  c.mode = ProviderMode::live;
  c.endpoint_url = url;
  c.api_key_env = "QREFINE_TEST_KEY";
  c.backoff_initial_s = 0.01;
  c.request_timeout_s = 5;
  return c;
}

}  // namespace

TEST_CASE("prompt hashes depend on every bundle field") {
  const auto a = bundle("u");
  auto b = a;
  CHECK(prompt_hash(a) == prompt_hash(b));
  b.kind = PromptKind::initial_generation;
  CHECK(prompt_hash(a) != prompt_hash(b));
  b = a;
  b.system_preamble = "other";
  CHECK(prompt_hash(a) != prompt_hash(b));
  CHECK(prompt_hash(a).size() == 64);
}

TEST_CASE("chat request and response bodies") {
  ProviderConfig c;
  c.model = "m";
  c.temperature = 0.2;
  const auto body = chat_request_body(bundle("hello"), c);
  CHECK(body.at("model") == "m");
  CHECK(body.at("messages").at(0).at("role") == "system");
  CHECK(body.at("messages").at(1).at("content") == "hello");
  const auto r = parse_chat_response(chat_body("```python\nx = 1\n```"));
  CHECK(r.reply == "```python\nx = 1\n```");
  CHECK(r.prompt_tokens == 12);
  CHECK_THROWS_AS(parse_chat_response("{}"), Error);
}

TEST_CASE("exchange cache round trip") {
  const auto dir = fresh_dir("qrefine-cache-test");
  ExchangeCache cache(dir);
  Exchange e{prompt_hash(bundle("q")), bundle("q"), "reply", 0.25, 3, std::nullopt};
  CHECK_FALSE(cache.find(e.prompt_hash));
  cache.store(e);
  const auto back = cache.find(e.prompt_hash);
  REQUIRE(back);
  CHECK(back->reply == "reply");
  CHECK(back->request == e.request);
  CHECK(back->prompt_tokens == 3);
  CHECK_FALSE(back->completion_tokens);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) files += entry.path().extension() == ".exchange" ? 1 : 0;
  CHECK(files == 1);
  fs::remove_all(dir);
}

TEST_CASE("recording then replaying returns the same replies") {
  const auto dir = fresh_dir("qrefine-record-test");
  ProviderConfig scripted;
  scripted.mode = ProviderMode::scripted;
  scripted.script = "echo";
  scripted.cache_dir = dir;
  auto recorder = make_provider(scripted);
  const auto b = bundle("Improve:\n```python\nx = 1\n```\n");
  const auto first = recorder->complete(b);

  ProviderConfig replay;
  replay.mode = ProviderMode::replay;
  replay.cache_dir = dir;
  auto player = make_provider(replay);
  CHECK(player->complete(b) == first);
  try {
    player->complete(bundle("never seen"));
    FAIL("expected replay_miss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::replay_miss);
  }
  fs::remove_all(dir);
}

TEST_CASE("provider configuration checks") {
  ProviderConfig replay;
  replay.mode = ProviderMode::replay;
  replay.cache_dir = fresh_dir("qrefine-empty-cache");
  CHECK_THROWS_AS(replay.validate(), Error);

  ProviderConfig live;
  live.mode = ProviderMode::live;
  live.api_key_env = "QREFINE_SURELY_UNSET_KEY";
  ::unsetenv("QREFINE_SURELY_UNSET_KEY");
  try {
    live.validate();
    FAIL("expected config_error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
  }
  CHECK(to_json(live).at("mode") == "live");
  CHECK_FALSE(to_json(live).dump().find("secret") != std::string::npos);
}

TEST_CASE("live provider retries transient failures") {
  std::atomic<int> calls{0};
  std::string auth;
  FakeEndpoint endpoint([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    if (++calls <= 2) {
      res.status = calls == 1 ? 429 : 503;
      res.set_content("busy", "text/plain");
      return;
    }
    res.set_content(chat_body("ok"), "application/json");
  });
  HttpProvider provider(live_config(endpoint.url()));
  const auto c = provider.generate(bundle("q"));
  CHECK(c.reply == "ok");
  CHECK(provider.attempts() == 3);
  CHECK(calls == 3);
  CHECK(auth == "Bearer secret");
}

TEST_CASE("live provider gives up after the retry budget") {
  std::atomic<int> calls{0};
  FakeEndpoint endpoint([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  auto config = live_config(endpoint.url());
  config.max_retries = 2;
  HttpProvider provider(config);
  try {
    provider.generate(bundle("q"));
    FAIL("expected provider_error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::provider_error);
  }
  CHECK(calls == 3);
}

TEST_CASE("client errors are not retried") {
  std::atomic<int> calls{0};
  FakeEndpoint endpoint([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
    res.set_content("bad key", "text/plain");
  });
  HttpProvider provider(live_config(endpoint.url()));
  CHECK_THROWS_AS(provider.generate(bundle("q")), Error);
  CHECK(calls == 1);
}

TEST_CASE("slow endpoints time out") {
  FakeEndpoint endpoint([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(chat_body("late"), "application/json");
  });
  auto config = live_config(endpoint.url());
  config.request_timeout_s = 0.2;
  config.max_retries = 1;
  HttpProvider provider(config);
  try {
    provider.generate(bundle("q"));
    FAIL("expected timeout");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::timeout);
  }
  CHECK(provider.attempts() == 2);
}
