#pragma once

// Completion backends: live chat-completions over HTTP, replay from an
// exchange cache, and scripted test doubles. Any backend can be wrapped in
// a RecordingProvider to populate the cache.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "qrefine/prompts.hpp"

namespace qrefine {

enum class ProviderMode { live, replay, scripted };

std::string_view to_string(ProviderMode mode);

struct ProviderConfig {
  ProviderMode mode = ProviderMode::scripted;
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  double request_timeout_s = 120.0;
  int max_retries = 3;
  // First retry waits this long; each further retry doubles it.
  double backoff_initial_s = 1.0;
  std::string api_key_env = "OPENAI_API_KEY";
  std::filesystem::path cache_dir;
  // Scripted mode: behaviour name and optional configuration file.
  std::string script = "echo";
  std::filesystem::path script_config;

  // Checks mode-specific requirements (endpoint and key for live, a populated
  // cache for replay). Throws Errc::config_error.
  void validate() const;
};

nlohmann::json to_json(const ProviderConfig& config);

// Content hash of the full bundle; independent of timing and machine.
std::string prompt_hash(const PromptBundle& bundle);

struct Exchange {
  std::string prompt_hash;
  PromptBundle request;
  std::string reply;
  double latency_s = 0.0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

nlohmann::json to_json(const Exchange& exchange);
Exchange exchange_from_json(const nlohmann::json& j);

// One file per exchange, `<prompt-hash>.exchange`, written atomically.
class ExchangeCache {
 public:
  explicit ExchangeCache(std::filesystem::path dir);

  std::optional<Exchange> find(const std::string& hash) const;
  void store(const Exchange& exchange) const;
  std::filesystem::path path_for(const std::string& hash) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct Completion {
  std::string reply;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  // Safe to call from several threads at once.
  virtual Completion generate(const PromptBundle& bundle) = 0;
  std::string complete(const PromptBundle& bundle) { return generate(bundle).reply; }
};

nlohmann::json chat_request_body(const PromptBundle& bundle, const ProviderConfig& config);
// Content of choices[0].message.content; token usage when reported.
Completion parse_chat_response(const std::string& body);

class HttpProvider final : public CompletionProvider {
 public:
  explicit HttpProvider(ProviderConfig config);

  Completion generate(const PromptBundle& bundle) override;

  // Total HTTP attempts made, including retries.
  std::size_t attempts() const { return attempts_.load(); }

 private:
  ProviderConfig config_;
  std::string api_key_;
  std::atomic<std::size_t> attempts_{0};
};

class ReplayProvider final : public CompletionProvider {
 public:
  explicit ReplayProvider(std::filesystem::path cache_dir);
  Completion generate(const PromptBundle& bundle) override;

 private:
  ExchangeCache cache_;
};

// Forwards to an inner provider and writes every exchange to the cache.
class RecordingProvider final : public CompletionProvider {
 public:
  RecordingProvider(std::unique_ptr<CompletionProvider> inner, std::filesystem::path cache_dir);
  Completion generate(const PromptBundle& bundle) override;

 private:
  std::unique_ptr<CompletionProvider> inner_;
  ExchangeCache cache_;
};

// live -> HttpProvider recording to cache_dir; replay -> ReplayProvider;
// scripted -> ScriptedProvider, recording when cache_dir is set.
std::unique_ptr<CompletionProvider> make_provider(const ProviderConfig& config);

}  // namespace qrefine
