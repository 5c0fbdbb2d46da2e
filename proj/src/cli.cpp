#include "qrefine/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "qrefine/analyzers.hpp"
#include "qrefine/corpus.hpp"
#include "qrefine/engine.hpp"
#include "qrefine/error.hpp"
#include "qrefine/report.hpp"
#include "qrefine/rule_analyzer.hpp"
#include "qrefine/serialization.hpp"
#include "qrefine/text.hpp"

namespace qrefine::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

class InterruptScope {
 public:
  InterruptScope() {
    g_interrupted.store(false);
    previous_ = std::signal(SIGINT, on_interrupt);
  }
  ~InterruptScope() { std::signal(SIGINT, previous_); }
  InterruptScope(const InterruptScope&) = delete;
  InterruptScope& operator=(const InterruptScope&) = delete;

 private:
  void (*previous_)(int) = SIG_DFL;
};

// Routes library logging to the err stream for the duration of one command.
class LogScope {
 public:
  LogScope(std::ostream& err, spdlog::level::level_enum level) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    sink->set_pattern("%v");
    auto logger = std::make_shared<spdlog::logger>("qrefine", sink);
    logger->set_level(level);
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }
  LogScope(const LogScope&) = delete;
  LogScope& operator=(const LogScope&) = delete;

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

json default_settings() {
  const ProviderConfig provider;
  return json{{"seed", 0},
              {"parallelism", 1},
              {"max_iterations", 10},
              {"issues_selected", json::array({"5"})},
              {"test_timeout_s", 30.0},
              {"weights", weights_to_json(WeightTable::defaults())},
              {"provider", "live"},
              {"endpoint_url", provider.endpoint_url},
              {"model", provider.model},
              {"temperature", provider.temperature},
              {"request_timeout_s", provider.request_timeout_s},
              {"max_retries", provider.max_retries},
              {"backoff_initial_s", provider.backoff_initial_s},
              {"api_key_env", provider.api_key_env},
              {"cache_dir", ""},
              {"script_config", ""},
              {"analyzer", "tools"},
              {"analyzer_config", to_json(AnalyzerConfig{})},
              {"runner", ""},
              {"memory_limit_bytes", nullptr},
              {"template_dir", ""}};
}

// Values given on the command line; unset members fall through to the
// environment, the config file and the defaults, in that order.
struct Flags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::optional<int> max_iterations;
  std::vector<std::string> issues_selected;
  std::optional<double> test_timeout_s;
  std::optional<std::string> provider;
  std::optional<std::string> script_config;
  std::optional<std::string> cache_dir;
  std::optional<std::string> analyzer;
  std::optional<std::string> runner;
  std::optional<std::string> template_dir;
  std::optional<std::string> model;
  bool verbose = false;
  bool quiet = false;
};

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error(Errc::config_error, "cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::config_error, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(Errc::config_error, path + ": expected a JSON object");
  const auto known = default_settings();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(Errc::config_error, path + ": unknown setting '" + key + "'");
  }
  return j;
}

json environment_settings() {
  json j = json::object();
  auto text = [&](const char* var, const char* key) {
    if (const char* v = std::getenv(var); v && *v) j[key] = std::string(v);
  };
  auto number = [&](const char* var, const char* key) {
    if (const char* v = std::getenv(var); v && *v) {
      try {
        j[key] = json::parse(v);
      } catch (const json::parse_error&) {
        throw Error(Errc::config_error, std::string(var) + " is not a number");
      }
      if (!j[key].is_number()) throw Error(Errc::config_error, std::string(var) + " is not a number");
    }
  };
  number("QREFINE_SEED", "seed");
  number("QREFINE_PARALLELISM", "parallelism");
  number("QREFINE_MAX_ITERATIONS", "max_iterations");
  number("QREFINE_TEST_TIMEOUT", "test_timeout_s");
  text("QREFINE_PROVIDER", "provider");
  text("QREFINE_SCRIPT_CONFIG", "script_config");
  text("QREFINE_CACHE_DIR", "cache_dir");
  text("QREFINE_ANALYZER", "analyzer");
  text("QREFINE_RUNNER", "runner");
  text("QREFINE_TEMPLATE_DIR", "template_dir");
  text("QREFINE_MODEL", "model");
  if (const char* v = std::getenv("QREFINE_ISSUES_SELECTED"); v && *v) {
    json list = json::array();
    std::string_view rest(v);
    while (true) {
      const auto comma = rest.find(',');
      list.push_back(std::string(trim(rest.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    j["issues_selected"] = list;
  }
  return j;
}

json flag_settings(const Flags& f) {
  json j = json::object();
  if (f.seed) j["seed"] = *f.seed;
  if (f.parallelism) j["parallelism"] = *f.parallelism;
  if (f.max_iterations) j["max_iterations"] = *f.max_iterations;
  if (!f.issues_selected.empty()) j["issues_selected"] = f.issues_selected;
  if (f.test_timeout_s) j["test_timeout_s"] = *f.test_timeout_s;
  if (f.provider) j["provider"] = *f.provider;
  if (f.script_config) j["script_config"] = *f.script_config;
  if (f.cache_dir) j["cache_dir"] = *f.cache_dir;
  if (f.analyzer) j["analyzer"] = *f.analyzer;
  if (f.runner) j["runner"] = *f.runner;
  if (f.template_dir) j["template_dir"] = *f.template_dir;
  if (f.model) j["model"] = *f.model;
  return j;
}

json merged_settings(const Flags& flags) {
  json settings = default_settings();
  for (const auto& layer : {load_config_file(flags.config_file), environment_settings(), flag_settings(flags)}) {
    for (const auto& [key, value] : layer.items()) settings[key] = value;
  }
  return settings;
}

template <typename T>
T setting(const json& settings, const char* key) {
  try {
    return settings.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::config_error, std::string("setting '") + key + "' has the wrong type");
  }
}

// Typed view of the merged settings plus the services built from them.
struct Environment {
  json settings;
  LoopConfig loop;
  std::vector<IssuesSelected> configurations;
  int parallelism = 1;
  ProviderConfig provider_config;
  std::unique_ptr<Analyzer> analyzer;
  std::unique_ptr<VerdictProvider> verdicts;
  std::unique_ptr<CompletionProvider> provider;
  PromptTemplates templates;
  json analyzer_description;

  Services services() const { return Services{*analyzer, *verdicts, *provider, templates}; }

  // Everything that determines results; provider mode and paths are provenance.
  json snapshot(const IssuesSelected& selected) const {
    LoopConfig l = loop;
    l.selection.issues_selected = selected;
    return json{{"loop", to_json(l)},
                {"analyzer", analyzer_description},
                {"verdicts", verdicts->describe()},
                {"templates", templates.fingerprint()},
                {"model", provider_config.model},
                {"temperature", provider_config.temperature}};
  }
};

ProviderConfig provider_config_from(const json& s) {
  ProviderConfig p;
  const auto spec = setting<std::string>(s, "provider");
  if (spec == "live") {
    p.mode = ProviderMode::live;
  } else if (spec == "replay") {
    p.mode = ProviderMode::replay;
  } else if (starts_with(spec, "scripted")) {
    p.mode = ProviderMode::scripted;
    p.script = spec == "scripted" ? "echo" : spec.substr(std::string_view("scripted:").size());
    if (spec != "scripted" && spec.size() <= std::string_view("scripted:").size()) {
      throw Error(Errc::config_error, "provider 'scripted:' needs a script name");
    }
  } else {
    throw Error(Errc::config_error, "unknown provider '" + spec + "' (live, replay or scripted:<script>)");
  }
  p.endpoint_url = setting<std::string>(s, "endpoint_url");
  p.model = setting<std::string>(s, "model");
  p.temperature = setting<double>(s, "temperature");
  p.request_timeout_s = setting<double>(s, "request_timeout_s");
  p.max_retries = setting<int>(s, "max_retries");
  p.backoff_initial_s = setting<double>(s, "backoff_initial_s");
  p.api_key_env = setting<std::string>(s, "api_key_env");
  p.cache_dir = setting<std::string>(s, "cache_dir");
  p.script_config = setting<std::string>(s, "script_config");
  return p;
}

struct Needs {
  bool provider = true;
  bool analyzer = true;
  bool verdicts = true;
};

Environment build_environment(const Flags& flags, Needs needs) {
  Environment env;
  env.settings = merged_settings(flags);
  const auto& s = env.settings;

  env.loop.max_iterations = setting<int>(s, "max_iterations");
  env.loop.selection.seed = setting<std::uint64_t>(s, "seed");
  env.loop.test_timeout_s = setting<double>(s, "test_timeout_s");
  env.loop.weights = weights_from_json(s.at("weights"));
  env.loop.validate();
  for (const auto& label : setting<std::vector<std::string>>(s, "issues_selected")) {
    try {
      env.configurations.push_back(IssuesSelected::parse(label));
    } catch (const Error& e) {
      throw Error(Errc::config_error, e.what());
    }
  }
  if (env.configurations.empty()) throw Error(Errc::config_error, "no issues-selected configuration given");
  env.loop.selection.issues_selected = env.configurations.front();
  env.parallelism = setting<int>(s, "parallelism");
  if (env.parallelism < 1) throw Error(Errc::config_error, "parallelism must be at least 1");

  const auto template_dir = setting<std::string>(s, "template_dir");
  env.templates = template_dir.empty() ? PromptTemplates::builtin() : PromptTemplates::load(template_dir);

  if (needs.analyzer) {
    const auto spec = setting<std::string>(s, "analyzer");
    if (spec == "tools") {
      auto config = analyzer_config_from_json(s.at("analyzer_config"));
      env.analyzer_description = json{{"kind", "tools"}, {"config", to_json(config)}};
      env.analyzer = std::make_unique<ToolAnalyzer>(std::move(config));
    } else if (starts_with(spec, "rules:")) {
      auto rules = RuleAnalyzer::from_file(spec.substr(6));
      env.analyzer_description = json{{"kind", "rules"}, {"rules", rules.versions().at("rules")}};
      env.analyzer = std::make_unique<RuleAnalyzer>(std::move(rules));
    } else {
      throw Error(Errc::config_error, "unknown analyzer '" + spec + "' (tools or rules:<file>)");
    }
  }

  if (needs.verdicts) {
    const auto runner = setting<std::string>(s, "runner");
    if (runner == "scripted") {
      env.verdicts = std::make_unique<ScriptedVerdictProvider>();
    } else if (!runner.empty()) {
      std::vector<std::string> argv;
      std::istringstream words(runner);
      for (std::string w; words >> w;) argv.push_back(w);
      std::optional<std::int64_t> memory;
      if (!s.at("memory_limit_bytes").is_null()) memory = setting<std::int64_t>(s, "memory_limit_bytes");
      env.verdicts = std::make_unique<SubprocessVerdictProvider>(std::move(argv), memory);
    }
  }

  if (needs.provider) {
    env.provider_config = provider_config_from(s);
    env.provider = make_provider(env.provider_config);
  }
  return env;
}

// Problems with tests need a verdict provider.
void require_verdicts(const Environment& env, const std::vector<Problem>& problems) {
  if (env.verdicts) return;
  for (const auto& p : problems) {
    if (p.tested()) {
      throw Error(Errc::config_error, "problem " + p.id + " has tests but no runner is configured "
                                      "(--runner <command> or --runner scripted)");
    }
  }
}

// Placeholder used when no problem needs tests.
class NoVerdicts final : public VerdictProvider {
 public:
  TestVerdict run(const Problem& problem, const std::string&, double) const override {
    throw Error(Errc::harness_error, "no runner configured for " + problem.id);
  }
  json describe() const override { return json{{"kind", "none"}}; }
};

void ensure_verdicts(Environment& env) {
  if (!env.verdicts) env.verdicts = std::make_unique<NoVerdicts>();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void add_common(CLI::App* cmd, Flags& f, bool benchmark) {
  cmd->add_option("--config", f.config_file, "JSON settings file (flags > QREFINE_* environment > file > defaults)");
  cmd->add_option("--seed", f.seed, "Run seed for issue selection and permutation tests (default 0)");
  cmd->add_option("--provider", f.provider,
                  "Completion backend: live, replay, or scripted:<echo|resolve-tagged|inject:CODES|canned> "
                  "(default live)");
  cmd->add_option("--script-config", f.script_config, "Fix table / canned replies for scripted providers (JSON)");
  cmd->add_option("--cache-dir", f.cache_dir, "Exchange cache: recorded in live/scripted mode, read in replay mode");
  cmd->add_option("--analyzer", f.analyzer, "Static analysis backend: tools (bandit + pylint) or rules:<file>");
  cmd->add_option("--runner", f.runner, "Test runner command speaking the JSON stdin/stdout protocol, or 'scripted'");
  cmd->add_option("--template-dir", f.template_dir, "Directory with system/repair/signature/initial.txt overrides");
  cmd->add_option("--model", f.model, "Model name sent to the live endpoint (default gpt-4o)");
  cmd->add_option("--max-iterations", f.max_iterations, "Iteration cap per problem (default 10)");
  cmd->add_option("--test-timeout", f.test_timeout_s, "Seconds allowed for one test run (default 30)");
  if (benchmark) {
    cmd->add_option("--issues-selected", f.issues_selected,
                    "Issues surfaced per iteration: 1, 2, 3, 5, all or any k >= 1; repeat for several "
                    "configurations (default 5)");
    cmd->add_option("--parallelism", f.parallelism, "Problems refined concurrently (default 1)");
  } else {
    cmd->add_option("--issues-selected", f.issues_selected,
                    "Issues surfaced per iteration: 1, 2, 3, 5, all or any k >= 1 (default 5)")
        ->expected(1);
  }
  cmd->add_flag("-v,--verbose", f.verbose, "Log debug detail");
  cmd->add_flag("-q,--quiet", f.quiet, "Only log warnings and errors");
}

spdlog::level::level_enum log_level(const Flags& f) {
  if (f.verbose) return spdlog::level::debug;
  if (f.quiet) return spdlog::level::warn;
  return spdlog::level::info;
}

std::string describe_issue(const Issue& i) {
  std::string where = "line " + std::to_string(i.line);
  if (i.end_line != i.line) where += "-" + std::to_string(i.end_line);
  return where + ": " + std::string(to_string(i.tool)) + " " + i.code + " [" + to_string(i.severity) + ", " +
         std::string(to_string(i.aspect)) + "] " + i.message;
}

// --- analyze -------------------------------------------------------------

struct AnalyzeArgs {
  std::string file;
  std::string tests;
  std::string module_name = "solution";
  bool json_output = false;
};

int cmd_analyze(const Flags& flags, const AnalyzeArgs& a, std::ostream& out) {
  auto env = build_environment(flags, Needs{false, true, !a.tests.empty()});
  if (!fs::is_regular_file(a.file)) throw Error(Errc::io_error, "cannot read " + a.file);
  const auto code = read_file(a.file);
  const auto issues = env.analyzer->analyze(code);
  TestVerdict verdict;
  if (!a.tests.empty()) {
    if (!env.verdicts) throw Error(Errc::config_error, "--tests needs --runner");
    Problem p;
    p.id = fs::path(a.file).stem().string();
    p.module_name = a.module_name;
    p.test_suite = read_file(a.tests);
    verdict = env.verdicts->run(p, code, env.loop.test_timeout_s);
    if (verdict.status == VerdictStatus::harness_error) throw Error(Errc::harness_error, "test harness failed");
  }
  const auto delta = total_severity(issues, env.loop.weights);
  const auto score = fitness(issues, verdict, env.loop.weights);
  const bool tested = !a.tests.empty();
  const bool perfect = tested ? score.perfect() : delta == 0;

  std::array<std::size_t, 5> per_aspect{};
  for (const auto& i : issues) {
    for (std::size_t k = 0; k < kAllAspects.size(); ++k) per_aspect[k] += i.aspect == kAllAspects[k] ? 1 : 0;
  }
  if (a.json_output) {
    json counts = json::object();
    for (std::size_t k = 0; k < kAllAspects.size(); ++k) counts[std::string(to_string(kAllAspects[k]))] = per_aspect[k];
    json doc{{"file", a.file}, {"issues", issues}, {"aspect_counts", counts}, {"total_severity", delta}};
    if (tested) {
      doc["verdict"] = verdict;
      doc["fitness"] = score;
    }
    out << doc.dump(2) << "\n";
  } else {
    out << a.file << ": " << issues.size() << " issue(s)\n";
    for (const auto& i : issues) out << "  " << describe_issue(i) << "\n";
    out << "Aspect counts:";
    for (std::size_t k = 0; k < kAllAspects.size(); ++k) {
      out << (k ? ", " : " ") << to_string(kAllAspects[k]) << " " << per_aspect[k];
    }
    out << "\nTotal severity: " << delta << "\n";
    if (tested) {
      out << "Tests: " << to_string(verdict.status) << "\n";
      for (const auto& f : verdict.failures) out << "  " << f.test_name << ": " << f.message << "\n";
      out << "Fitness: tests_pass=" << (score.tests_pass ? "true" : "false")
          << ", total_severity=" << score.total_severity << "\n";
    }
  }
  return perfect ? kExitPerfect : kExitImperfect;
}

// --- generate-initial ----------------------------------------------------

struct CorpusArgs {
  std::string corpus;
  std::vector<std::string> problems;
  std::string out;
};

std::vector<Problem> select_problems(const std::string& corpus, const std::vector<std::string>& ids) {
  auto problems = load_corpus(corpus);
  if (ids.empty()) return problems;
  std::vector<Problem> chosen;
  for (const auto& id : ids) {
    auto it = std::find_if(problems.begin(), problems.end(), [&](const Problem& p) { return p.id == id; });
    if (it == problems.end()) throw Error(Errc::invalid_argument, "problem '" + id + "' is not in the corpus");
    chosen.push_back(*it);
  }
  return chosen;
}

int cmd_generate_initial(const Flags& flags, const CorpusArgs& a, std::ostream& out) {
  auto env = build_environment(flags, Needs{true, false, false});
  const auto problems = select_problems(a.corpus, a.problems);
  fs::create_directories(a.out);
  int failures = 0;
  for (const auto& p : problems) {
    try {
      const auto sig = [&] {
        if (!p.required_signatures.empty() || !p.tested()) {
          return SignatureSpec{p.required_signatures, SignatureSpec::Source::dataset};
        }
        return parse_signature_reply(env.provider->complete(build_signature_prompt(p, env.templates)));
      }();
      const auto code = p.initial_code
                            ? *p.initial_code
                            : extract_code(env.provider->complete(build_initial_prompt(p, sig, env.templates)));
      std::ofstream file(fs::path(a.out) / (p.id + ".py"), std::ios::binary | std::ios::trunc);
      file << code;
      if (!file) throw Error(Errc::io_error, "cannot write initial code for " + p.id);
      out << p.id << ": " << (fs::path(a.out) / (p.id + ".py")).string() << "\n";
    } catch (const Error& e) {
      spdlog::error("{}: {}", p.id, e.what());
      ++failures;
    }
  }
  return failures == 0 ? kExitPerfect : kExitInfrastructure;
}

// --- refine --------------------------------------------------------------

struct RefineArgs {
  std::string corpus;
  std::string problem;
  std::string code;
  std::string output;
  std::string trace;
};

int cmd_refine(const Flags& flags, const RefineArgs& a, std::ostream& out) {
  auto env = build_environment(flags, Needs{});
  auto problem = select_problems(a.corpus, {a.problem}).front();
  if (!a.code.empty()) problem.initial_code = read_file(a.code);
  require_verdicts(env, {problem});
  ensure_verdicts(env);
  const auto record = refine(problem, env.loop, env.services());
  if (!a.trace.empty()) {
    TraceHeader header{env.snapshot(env.loop.selection.issues_selected), env.analyzer->versions(),
                       corpus_hash(a.corpus), env.loop.selection.seed,
                       env.loop.selection.issues_selected.label(),
                       json{{"created_at", utc_now()}, {"provider", to_string(env.provider_config.mode)}}};
    TraceWriter writer(a.trace, header, {problem.id}, false);
    writer.append(record);
  }
  if (record.status == RunStatus::aborted) {
    spdlog::error("{}: {}", problem.id, record.error.value_or("aborted"));
    return kExitInfrastructure;
  }
  const auto& initial = *record.initial;
  const auto& final_c = *record.final_candidate;
  out << problem.id << ": " << record.traces.size() << " iteration(s), total severity "
      << initial.fitness.total_severity << " -> " << final_c.fitness.total_severity << ", tests "
      << to_string(initial.verdict.status) << " -> " << to_string(final_c.verdict.status) << "\n";
  for (const auto& i : final_c.issues) out << "  " << describe_issue(i) << "\n";
  if (!a.output.empty()) {
    std::ofstream file(a.output, std::ios::binary | std::ios::trunc);
    file << final_c.code;
    if (!file) throw Error(Errc::io_error, "cannot write " + a.output);
  }
  const bool perfect = problem.tested() ? final_c.fitness.perfect() : final_c.fitness.total_severity == 0;
  return perfect ? kExitPerfect : kExitImperfect;
}

// --- run-benchmark / replay ----------------------------------------------

struct BenchmarkArgs {
  std::string corpus;
  std::string out;
  bool fresh = false;
  std::string verify;
};

fs::path trace_path(const fs::path& dir, const IssuesSelected& selected) {
  std::string label = selected.label();
  std::transform(label.begin(), label.end(), label.begin(), [](unsigned char c) { return std::tolower(c); });
  return dir / ("trace-select-" + label + ".jsonl");
}

// Header without provenance followed by the record lines.
std::string comparable_trace(const fs::path& path) {
  const auto content = read_file(path);
  const auto nl = content.find('\n');
  if (nl == std::string::npos) throw Error(Errc::trace_parse_error, path.string() + ": missing header");
  auto header = json::parse(content.substr(0, nl));
  header.erase("provenance");
  return header.dump() + "\n" + content.substr(nl + 1);
}

int cmd_run_benchmark(const Flags& flags, const BenchmarkArgs& a, std::ostream& out, bool replay) {
  Flags effective = flags;
  if (replay) {
    if (effective.provider && *effective.provider != "replay") {
      throw Error(Errc::config_error, "replay always uses the replay provider");
    }
    effective.provider = "replay";
  }
  auto env = build_environment(effective, Needs{});
  const auto scan = scan_corpus(a.corpus);
  require_verdicts(env, scan.problems);
  ensure_verdicts(env);
  if (scan.problems.empty() && scan.failures.empty()) throw Error(Errc::corpus_parse_error, "empty corpus");
  const auto hash = corpus_hash(a.corpus);
  std::set<std::string> ids;
  for (const auto& p : scan.problems) ids.insert(p.id);
  std::vector<RunRecord> preset;
  for (const auto& f : scan.failures) {
    ids.insert(f.id);
    preset.push_back(aborted_record(f.id, false, "aborted-run: " + f.message));
  }
  const auto versions = env.analyzer->versions();
  fs::create_directories(a.out);

  InterruptScope interrupt;
  bool mismatch = false;
  for (const auto& selected : env.configurations) {
    LoopConfig loop = env.loop;
    loop.selection.issues_selected = selected;
    TraceHeader header{env.snapshot(selected), versions, hash, loop.selection.seed, selected.label(),
                       json{{"created_at", utc_now()}, {"provider", to_string(env.provider_config.mode)}}};
    const auto path = trace_path(a.out, selected);
    TraceWriter writer(path, header, ids, !a.fresh);
    CorpusRunOptions options;
    options.parallelism = env.parallelism;
    options.skip = writer.recorded();
    options.preset = preset;
    options.writer = &writer;
    options.cancel = &g_interrupted;
    if (!options.skip.empty()) spdlog::info("{}: resuming, {} problem(s) already recorded", path.string(), options.skip.size());
    const auto records = run_corpus(scan.problems, loop, env.services(), options);
    std::size_t aborted = 0;
    for (const auto& r : records) aborted += r.status == RunStatus::aborted ? 1 : 0;
    out << "select-" << selected.label() << ": " << records.size() << " new record(s), " << aborted << " aborted -> "
        << path.string() << "\n";
    if (g_interrupted.load()) {
      spdlog::error("interrupted; completed records were written to {}", path.string());
      return kExitInfrastructure;
    }
    if (!a.verify.empty()) {
      const auto reference = fs::path(a.verify) / path.filename();
      const bool same = fs::exists(reference) && comparable_trace(reference) == comparable_trace(path);
      out << "verify " << path.filename().string() << ": " << (same ? "identical" : "DIFFERENT") << "\n";
      mismatch = mismatch || !same;
    }
  }
  return mismatch ? kExitImperfect : kExitPerfect;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> traces;
  std::vector<std::string> formats{"text"};
  std::string out;
  ReportOptions options;
};

int cmd_report(const Flags& flags, ReportArgs a, std::ostream& out) {
  const auto settings = merged_settings(flags);
  a.options.seed = setting<std::uint64_t>(settings, "seed");
  std::vector<fs::path> files;
  for (const auto& t : a.traces) {
    if (fs::is_directory(t)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(t)) {
        if (entry.path().extension() == ".jsonl") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(t);
    }
  }
  if (files.empty()) throw Error(Errc::invalid_argument, "no trace files given");
  Report report;
  report.options = a.options;
  for (const auto& f : files) {
    const auto trace = load_traces(f);
    for (const auto& w : trace.warnings) spdlog::warn("{}", w);
    if (trace.records.empty()) throw Error(Errc::trace_parse_error, f.string() + ": trace holds no run records");
    report.configurations.push_back(analyze_trace(trace, f.string(), a.options));
  }
  for (const auto& name : a.formats) {
    const auto format = parse_report_format(name);
    if (a.out.empty()) {
      if (format == ReportFormat::text) {
        out << render_text(report);
      } else if (format == ReportFormat::structured) {
        out << to_json(report).dump(2) << "\n";
      } else {
        throw Error(Errc::invalid_argument, "plot-data needs --out");
      }
      continue;
    }
    for (const auto& path : write_report(report, format, a.out)) out << path.string() << "\n";
  }
  return kExitPerfect;
}

// --- convert-corpus ------------------------------------------------------

struct ConvertArgs {
  std::string dataset;
  std::string tests_dir;
  std::string out;
  std::string module_name = "solution";
};

int cmd_convert(const ConvertArgs& a, std::ostream& out) {
  const auto n = convert_corpus(a.dataset, a.tests_dir, a.out, a.module_name);
  out << "converted " << n << " problem(s) into " << a.out << "\n";
  return kExitPerfect;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative static-analysis-guided code refinement with an LLM", "qrefine"};
  app.require_subcommand(1);
  app.footer(
      "Defaults: at most 10 iterations per problem; 5 issues selected per iteration (menu: 1, 2, 3, 5, all, "
      "or any k >= 1).\nSeverity weights: security HIGH 30, MEDIUM 20, LOW 10, UNDEFINED 10; pylint C/E/W/R 3 "
      "each.\nExit status: 0 perfect (tests pass, total severity 0), 1 imperfect or mismatch, 2 infrastructure "
      "or configuration error.");
  Flags flags;

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Report issues, total severity and (with --tests) fitness of a file");
  analyze_cmd->add_option("file", analyze_args.file, "Python file to analyze")->required();
  analyze_cmd->add_option("--tests", analyze_args.tests, "Test suite to run against the file (needs --runner)");
  analyze_cmd->add_option("--module-name", analyze_args.module_name, "Module name the tests import")
      ->capture_default_str();
  analyze_cmd->add_flag("--json", analyze_args.json_output, "Print a JSON document instead of text");
  add_common(analyze_cmd, flags, false);

  CorpusArgs generate_args;
  auto* generate_cmd = app.add_subcommand("generate-initial", "Generate starting code for corpus problems");
  generate_cmd->add_option("--corpus", generate_args.corpus, "Corpus directory or manifest")->required();
  generate_cmd->add_option("--problem", generate_args.problems, "Problem id (repeatable; default all)");
  generate_cmd->add_option("--out", generate_args.out, "Directory for <id>.py files")->required();
  add_common(generate_cmd, flags, false);

  RefineArgs refine_args;
  auto* refine_cmd = app.add_subcommand("refine", "Run the refinement loop on one problem");
  refine_cmd->add_option("--corpus", refine_args.corpus, "Corpus directory or manifest")->required();
  refine_cmd->add_option("--problem", refine_args.problem, "Problem id")->required();
  refine_cmd->add_option("--code", refine_args.code, "Starting code (default: the problem's initial.py or a generated one)");
  refine_cmd->add_option("--output", refine_args.output, "Write the final code here");
  refine_cmd->add_option("--trace", refine_args.trace, "Write a one-record trace file here");
  add_common(refine_cmd, flags, false);

  BenchmarkArgs bench_args;
  auto* bench_cmd = app.add_subcommand("run-benchmark", "Refine every corpus problem; one trace per configuration");
  bench_cmd->add_option("--corpus", bench_args.corpus, "Corpus directory or manifest")->required();
  bench_cmd->add_option("--out", bench_args.out, "Directory for trace-select-<k>.jsonl files")->required();
  bench_cmd->add_flag("--fresh", bench_args.fresh, "Overwrite existing traces instead of resuming them");
  add_common(bench_cmd, flags, true);

  BenchmarkArgs replay_args;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a benchmark from an exchange cache");
  replay_cmd->add_option("--corpus", replay_args.corpus, "Corpus directory or manifest")->required();
  replay_cmd->add_option("--out", replay_args.out, "Directory for the replayed traces")->required();
  replay_cmd->add_flag("--fresh", replay_args.fresh, "Overwrite existing traces instead of resuming them");
  replay_cmd->add_option("--verify", replay_args.verify,
                         "Directory of original traces; exit 1 unless the replayed traces match them");
  add_common(replay_cmd, flags, true);

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Compute analytics from trace files");
  report_cmd->add_option("--traces", report_args.traces, "Trace files or directories of *.jsonl")->required();
  report_cmd->add_option("--format", report_args.formats, "text, structured or plot-data (repeatable; default text)");
  report_cmd->add_option("--out", report_args.out, "Output directory (default: text/structured to stdout)");
  report_cmd->add_option("--min-occurrences", report_args.options.min_occurrences,
                         "Initial occurrences needed for a resolution rate")
      ->capture_default_str();
  report_cmd->add_option("--permutations", report_args.options.permutations, "Permutation test resamples")
      ->capture_default_str();
  report_cmd->add_option("--top-k", report_args.options.top_k, "Introduced issue types listed per category")
      ->capture_default_str();
  report_cmd->add_option("--config", flags.config_file, "JSON settings file");
  report_cmd->add_option("--seed", flags.seed, "Permutation test seed (default 0)");
  report_cmd->add_flag("-v,--verbose", flags.verbose, "Log debug detail");
  report_cmd->add_flag("-q,--quiet", flags.quiet, "Only log warnings and errors");

  ConvertArgs convert_args;
  auto* convert_cmd = app.add_subcommand("convert-corpus", "Convert an upstream JSON Lines dataset into a corpus");
  convert_cmd->add_option("--dataset", convert_args.dataset, "JSON Lines file with ID and Prompt fields")->required();
  convert_cmd->add_option("--tests-dir", convert_args.tests_dir, "Directory of <id>_test.py / test_<id>.py files");
  convert_cmd->add_option("--out", convert_args.out, "Corpus directory to create")->required();
  convert_cmd->add_option("--module-name", convert_args.module_name, "Module name the tests import")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPerfect : kExitInfrastructure;
  }

  LogScope logging(err, log_level(flags));
  try {
    if (analyze_cmd->parsed()) return cmd_analyze(flags, analyze_args, out);
    if (generate_cmd->parsed()) return cmd_generate_initial(flags, generate_args, out);
    if (refine_cmd->parsed()) return cmd_refine(flags, refine_args, out);
    if (bench_cmd->parsed()) return cmd_run_benchmark(flags, bench_args, out, false);
    if (replay_cmd->parsed()) return cmd_run_benchmark(flags, replay_args, out, true);
    if (report_cmd->parsed()) return cmd_report(flags, report_args, out);
    if (convert_cmd->parsed()) return cmd_convert(convert_args, out);
  } catch (const Error& e) {
    err << "qrefine: " << e.what() << "\n";
    return kExitInfrastructure;
  } catch (const std::exception& e) {
    err << "qrefine: " << e.what() << "\n";
    return kExitInfrastructure;
  }
  return kExitInfrastructure;
}

}  // namespace qrefine::cli
