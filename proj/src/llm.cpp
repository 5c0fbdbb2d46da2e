#include "qrefine/llm.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "qrefine/error.hpp"
#include "qrefine/hashing.hpp"
#include "qrefine/scripted.hpp"

namespace qrefine {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ProviderMode mode) {
  switch (mode) {
    case ProviderMode::live: return "live";
    case ProviderMode::replay: return "replay";
    case ProviderMode::scripted: return "scripted";
  }
  return "?";
}

void ProviderConfig::validate() const {
  if (temperature < 0) throw Error(Errc::config_error, "temperature must be non-negative");
  if (max_retries < 0) throw Error(Errc::config_error, "max-retries must be non-negative");
  if (request_timeout_s <= 0) throw Error(Errc::config_error, "request timeout must be positive");
  switch (mode) {
    case ProviderMode::live: {
      if (endpoint_url.empty()) throw Error(Errc::config_error, "live mode needs an endpoint URL");
      const char* key = std::getenv(api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw Error(Errc::config_error, "live mode needs the API key in $" + api_key_env);
      }
      break;
    }
    case ProviderMode::replay: {
      std::error_code ec;
      bool populated = false;
      if (!cache_dir.empty() && fs::is_directory(cache_dir, ec)) {
        for (const auto& entry : fs::directory_iterator(cache_dir)) {
          if (entry.path().extension() == ".exchange") {
            populated = true;
            break;
          }
        }
      }
      if (!populated) throw Error(Errc::config_error, "replay mode needs a populated cache directory");
      break;
    }
    case ProviderMode::scripted:
      break;
  }
}

json to_json(const ProviderConfig& config) {
  return json{{"mode", to_string(config.mode)},
              {"endpoint_url", config.endpoint_url},
              {"model", config.model},
              {"temperature", config.temperature},
              {"request_timeout_s", config.request_timeout_s},
              {"max_retries", config.max_retries},
              {"api_key_env", config.api_key_env},
              {"script", config.script}};
}

namespace {

json bundle_json(const PromptBundle& bundle) {
  return json{{"kind", to_string(bundle.kind)},
              {"system", bundle.system_preamble},
              {"user", bundle.user_message}};
}

}  // namespace

std::string prompt_hash(const PromptBundle& bundle) { return sha256_hex(bundle_json(bundle).dump()); }

json to_json(const Exchange& exchange) {
  json j{{"prompt_hash", exchange.prompt_hash},
         {"request", bundle_json(exchange.request)},
         {"reply", exchange.reply},
         {"latency_s", exchange.latency_s}};
  if (exchange.prompt_tokens) j["prompt_tokens"] = *exchange.prompt_tokens;
  if (exchange.completion_tokens) j["completion_tokens"] = *exchange.completion_tokens;
  return j;
}

Exchange exchange_from_json(const json& j) {
  try {
    Exchange e;
    e.prompt_hash = j.at("prompt_hash").get<std::string>();
    const auto& r = j.at("request");
    e.request.kind = parse_prompt_kind(r.at("kind").get<std::string>());
    e.request.system_preamble = r.at("system").get<std::string>();
    e.request.user_message = r.at("user").get<std::string>();
    e.reply = j.at("reply").get<std::string>();
    e.latency_s = j.value("latency_s", 0.0);
    if (j.contains("prompt_tokens")) e.prompt_tokens = j.at("prompt_tokens").get<int>();
    if (j.contains("completion_tokens")) e.completion_tokens = j.at("completion_tokens").get<int>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(Errc::parse_error, std::string("malformed exchange: ") + ex.what());
  }
}

ExchangeCache::ExchangeCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path ExchangeCache::path_for(const std::string& hash) const { return dir_ / (hash + ".exchange"); }

std::optional<Exchange> ExchangeCache::find(const std::string& hash) const {
  std::ifstream in(path_for(hash), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    return exchange_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, path_for(hash).string() + ": " + e.what());
  }
}

void ExchangeCache::store(const Exchange& exchange) const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  const auto target = path_for(exchange.prompt_hash);
  std::ostringstream suffix;
  suffix << ".tmp." << ::getpid() << "." << std::this_thread::get_id();
  const auto temp = fs::path(target.string() + suffix.str());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    out << to_json(exchange).dump(2) << "\n";
    if (!out) throw Error(Errc::io_error, "cannot write " + temp.string());
  }
  fs::rename(temp, target, ec);
  if (ec) throw Error(Errc::io_error, "cannot publish " + target.string() + ": " + ec.message());
}

json chat_request_body(const PromptBundle& bundle, const ProviderConfig& config) {
  return json{{"model", config.model},
              {"temperature", config.temperature},
              {"messages", json::array({json{{"role", "system"}, {"content", bundle.system_preamble}},
                                        json{{"role", "user"}, {"content", bundle.user_message}}})}};
}

Completion parse_chat_response(const std::string& body) {
  try {
    const auto doc = json::parse(body);
    Completion c;
    c.reply = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    if (auto it = doc.find("usage"); it != doc.end() && it->is_object()) {
      if (it->contains("prompt_tokens")) c.prompt_tokens = it->at("prompt_tokens").get<int>();
      if (it->contains("completion_tokens")) c.completion_tokens = it->at("completion_tokens").get<int>();
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::provider_error, std::string("unexpected completion response: ") + e.what());
  }
}

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

Completion HttpProvider::generate(const PromptBundle& bundle) {
  static const std::regex kUrl{R"(^(https?://[^/]+)(/.*)?$)"};
  std::smatch m;
  if (!std::regex_match(config_.endpoint_url, m, kUrl)) {
    throw Error(Errc::config_error, "malformed endpoint URL '" + config_.endpoint_url + "'");
  }
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";
  const std::string body = chat_request_body(bundle, config_).dump();

  httplib::Client client(base);
  const auto timeout = std::chrono::duration<double>(config_.request_timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  double backoff = config_.backoff_initial_s;
  std::string last_failure;
  bool last_was_timeout = false;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("completion attempt {} failed ({}); retrying in {:.2f}s", attempt, last_failure, backoff);
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2;
    }
    ++attempts_;
    auto result = client.Post(path, headers, body, "application/json");
    if (!result) {
      last_was_timeout = result.error() == httplib::Error::Read ||
                         result.error() == httplib::Error::ConnectionTimeout;
      last_failure = httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status == 200) return parse_chat_response(result->body);
    if (status == 429 || status >= 500) {
      last_was_timeout = false;
      last_failure = "HTTP " + std::to_string(status);
      continue;
    }
    throw Error(Errc::provider_error, "HTTP " + std::to_string(status) + ": " + result->body.substr(0, 500));
  }
  throw Error(last_was_timeout ? Errc::timeout : Errc::provider_error,
              "giving up after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_failure);
}

ReplayProvider::ReplayProvider(fs::path cache_dir) : cache_(std::move(cache_dir)) {}

Completion ReplayProvider::generate(const PromptBundle& bundle) {
  const auto hash = prompt_hash(bundle);
  auto exchange = cache_.find(hash);
  if (!exchange) throw Error(Errc::replay_miss, "no cached exchange " + hash);
  return Completion{std::move(exchange->reply), exchange->prompt_tokens, exchange->completion_tokens};
}

RecordingProvider::RecordingProvider(std::unique_ptr<CompletionProvider> inner, fs::path cache_dir)
    : inner_(std::move(inner)), cache_(std::move(cache_dir)) {}

Completion RecordingProvider::generate(const PromptBundle& bundle) {
  const auto started = std::chrono::steady_clock::now();
  auto completion = inner_->generate(bundle);
  Exchange exchange;
  exchange.prompt_hash = prompt_hash(bundle);
  exchange.request = bundle;
  exchange.reply = completion.reply;
  exchange.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  exchange.prompt_tokens = completion.prompt_tokens;
  exchange.completion_tokens = completion.completion_tokens;
  cache_.store(exchange);
  return completion;
}

std::unique_ptr<CompletionProvider> make_provider(const ProviderConfig& config) {
  config.validate();
  std::unique_ptr<CompletionProvider> provider;
  switch (config.mode) {
    case ProviderMode::replay:
      return std::make_unique<ReplayProvider>(config.cache_dir);
    case ProviderMode::live:
      provider = std::make_unique<HttpProvider>(config);
      break;
    case ProviderMode::scripted:
      provider = std::make_unique<ScriptedProvider>(ScriptedBehavior::parse(config.script, config.script_config));
      break;
  }
  if (!config.cache_dir.empty()) {
    return std::make_unique<RecordingProvider>(std::move(provider), config.cache_dir);
  }
  return provider;
}

}  // namespace qrefine
