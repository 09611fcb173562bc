// Copyright 2026 The Scramble Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scramble/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "scramble/dpo_math.hpp"
#include "scramble/errors.hpp"
#include "scramble/eval_harness.hpp"
#include "scramble/feedback_loop.hpp"
#include "scramble/parallel.hpp"
#include "scramble/text.hpp"

namespace scramble {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted = true; }

std::string join_field(std::string_view prefix, std::string_view key) {
  return prefix.empty() ? std::string(key) : std::string(prefix) + "." + std::string(key);
}

bool looks_like_secret(std::string_view key) {
  const std::string k = text::to_lower_ascii(key);
  for (std::string_view s : {"token", "secret", "password", "api_key", "apikey"}) {
    if (k.find(s) != std::string::npos) return true;
  }
  return false;
}

void check_keys(const json& obj, std::string_view prefix, std::set<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw ConfigError(prefix.empty() ? "<root>" : std::string(prefix), "must be a JSON object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key)) continue;
    const std::string field = join_field(prefix, key);
    if (looks_like_secret(key)) {
      throw ConfigError(field, std::string("credentials are read from ") + kApiTokenEnv +
                                   ", not the config file");
    }
    throw ConfigError(field, "unknown key");
  }
}

template <typename T>
T get_as(const json& obj, std::string_view prefix, const char* key) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(join_field(prefix, key), "wrong type");
  }
}

std::int64_t get_int(const json& obj, std::string_view prefix, const char* key,
                     std::int64_t min_value) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(join_field(prefix, key), "expected an integer");
  const auto n = v.get<std::int64_t>();
  if (n < min_value) {
    throw ConfigError(join_field(prefix, key), "must be >= " + std::to_string(min_value));
  }
  return n;
}

std::vector<GenMethod> parse_methods(std::string_view list) {
  std::vector<GenMethod> out;
  std::string item;
  std::istringstream in{std::string(list)};
  while (std::getline(in, item, ',')) {
    item = text::trim(item);
    if (item.empty()) continue;
    const GenMethod m = parse_gen_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ConfigError("methods", "at least one method is required");
  return out;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) {
      out.close();
      fs::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

void write_json_file(const fs::path& path, const ordered_json& obj) {
  write_text_atomic(path, obj.dump(2) + "\n");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<ScoredCandidate> read_candidates(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<ScoredCandidate> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(candidate_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_candidates(const fs::path& path, std::span<const ScoredCandidate> cands) {
  std::string content;
  for (const auto& c : cands) content += candidate_to_json(c).dump() + "\n";
  write_text_atomic(path, content);
}

Corpus load_run_corpus(const RunConfig& cfg) {
  if (cfg.corpus_path.empty()) throw ConfigError("corpus.path", "required");
  Corpus corpus = load_corpus(cfg.corpus_path, cfg.corpus_format);
  if (cfg.sample && *cfg.sample < corpus.size()) {
    corpus = sample_corpus(corpus, *cfg.sample, cfg.seed);
  }
  return corpus;
}

std::string method_suffix(std::optional<GenMethod> method) {
  return method ? std::string(to_string(*method)) : std::string("pooled");
}

// Builds one generator per method; feedback_loop also needs a scorer, a
// distinctness judge and a lemmatizer.
class Generator {
 public:
  Generator(const RunConfig& cfg, GenMethod method)
      : method_(method), backend_(make_text_backend(cfg.backend)) {
    if (method != GenMethod::feedback_loop) return;
    scorer_ = std::make_unique<QualityScorer>(cfg.scorer);
    const HttpOptions http{cfg.backend.request_timeout, cfg.backend.max_retries};
    if (cfg.judge_url) {
      judge_ = std::make_unique<RemoteDistinctJudge>(*cfg.judge_url, http);
    } else {
      judge_ = std::make_unique<LlmDistinctJudge>(*backend_);
    }
    if (cfg.lemmatizer_url) {
      lemmatizer_ = std::make_unique<RemoteLemmatizer>(*cfg.lemmatizer_url, http);
    }
  }

  GenerationOutcome operator()(const CaptionRecord& record) {
    if (method_ != GenMethod::feedback_loop) return generate_negative(record, method_, *backend_);
    const Lemmatizer& lem = lemmatizer_ ? *lemmatizer_ : default_lemmatizer();
    FeedbackRun run = run_feedback_loop(record, *backend_, *scorer_, *judge_, lem);
    if (run.error) throw TransportError(*run.error);
    return to_outcome(run);
  }

  std::size_t backend_calls() const { return backend_->call_count(); }

 private:
  GenMethod method_;
  std::unique_ptr<TextBackend> backend_;
  std::unique_ptr<QualityScorer> scorer_;
  std::unique_ptr<DistinctJudge> judge_;
  std::unique_ptr<Lemmatizer> lemmatizer_;
};

}  // namespace

void RunConfig::finalize() {
  if (!backend.seed) backend.seed = seed;
  grid.seed = seed;
  if (!scorer.cache_path) scorer.cache_path = output_dir / "score_cache.jsonl";
}

void RunConfig::validate() const {
  if (methods.empty()) throw ConfigError("methods", "at least one method is required");
  if (output_dir.empty()) throw ConfigError("output_dir", "required");
  if (concurrency == 0) throw ConfigError("concurrency", "must be >= 1");
  if (sample && *sample == 0) throw ConfigError("corpus.sample", "must be >= 1");
  scorer.validate();
  grid.validate();
}

RunConfig run_config_from_json(const json& obj) {
  RunConfig cfg;
  check_keys(obj, "", {"corpus", "methods", "backend", "scorer", "grid", "feedback", "output_dir",
                       "seed", "concurrency"});
  if (obj.contains("corpus")) {
    const json& c = obj["corpus"];
    check_keys(c, "corpus", {"path", "format", "sample"});
    if (c.contains("path")) cfg.corpus_path = get_as<std::string>(c, "corpus", "path");
    if (c.contains("format")) {
      try {
        cfg.corpus_format = parse_corpus_format(get_as<std::string>(c, "corpus", "format"));
      } catch (const ConfigError& e) {
        throw ConfigError("corpus.format", e.what());
      }
    }
    if (c.contains("sample")) cfg.sample = static_cast<std::size_t>(get_int(c, "corpus", "sample", 1));
  }
  if (obj.contains("methods")) {
    const json& m = obj["methods"];
    if (!m.is_array() || m.empty()) throw ConfigError("methods", "expected a non-empty array");
    cfg.methods.clear();
    for (const auto& item : m) {
      if (!item.is_string()) throw ConfigError("methods", "expected strings");
      const GenMethod method = parse_gen_method(item.get<std::string>());
      if (std::find(cfg.methods.begin(), cfg.methods.end(), method) == cfg.methods.end()) {
        cfg.methods.push_back(method);
      }
    }
  }
  if (obj.contains("backend")) {
    const json& b = obj["backend"];
    check_keys(b, "backend", {"endpoint_url", "temperature", "top_p", "max_new_tokens",
                              "request_timeout_ms", "max_retries", "seed", "replay_path"});
    auto& be = cfg.backend;
    if (b.contains("endpoint_url")) be.endpoint_url = get_as<std::string>(b, "backend", "endpoint_url");
    if (b.contains("temperature")) be.temperature = get_as<double>(b, "backend", "temperature");
    if (b.contains("top_p")) be.top_p = get_as<double>(b, "backend", "top_p");
    if (b.contains("max_new_tokens")) {
      be.max_new_tokens = static_cast<int>(get_int(b, "backend", "max_new_tokens", 1));
    }
    if (b.contains("request_timeout_ms")) {
      be.request_timeout = std::chrono::milliseconds(get_int(b, "backend", "request_timeout_ms", 1));
    }
    if (b.contains("max_retries")) be.max_retries = static_cast<int>(get_int(b, "backend", "max_retries", 0));
    if (b.contains("seed")) be.seed = static_cast<std::uint64_t>(get_int(b, "backend", "seed", 0));
    if (b.contains("replay_path")) be.replay_path = get_as<std::string>(b, "backend", "replay_path");
  }
  if (obj.contains("scorer")) {
    const json& s = obj["scorer"];
    check_keys(s, "scorer", {"mode", "endpoint_url", "cache_path", "request_timeout_ms",
                             "max_retries", "batch_size"});
    auto& sc = cfg.scorer;
    if (s.contains("mode")) sc.mode = parse_scorer_mode(get_as<std::string>(s, "scorer", "mode"));
    if (s.contains("endpoint_url")) sc.endpoint_url = get_as<std::string>(s, "scorer", "endpoint_url");
    if (s.contains("cache_path")) sc.cache_path = get_as<std::string>(s, "scorer", "cache_path");
    if (s.contains("request_timeout_ms")) {
      sc.request_timeout = std::chrono::milliseconds(get_int(s, "scorer", "request_timeout_ms", 1));
    }
    if (s.contains("max_retries")) sc.max_retries = static_cast<int>(get_int(s, "scorer", "max_retries", 0));
    if (s.contains("batch_size")) sc.batch_size = static_cast<std::size_t>(get_int(s, "scorer", "batch_size", 1));
  }
  if (obj.contains("grid")) {
    const json& g = obj["grid"];
    check_keys(g, "grid", {"k", "pooled"});
    if (g.contains("k")) cfg.grid.k = static_cast<std::size_t>(get_int(g, "grid", "k", 1));
    if (g.contains("pooled")) cfg.pooled = get_as<bool>(g, "grid", "pooled");
  }
  if (obj.contains("feedback")) {
    const json& f = obj["feedback"];
    check_keys(f, "feedback", {"judge_url", "lemmatizer_url"});
    if (f.contains("judge_url")) cfg.judge_url = get_as<std::string>(f, "feedback", "judge_url");
    if (f.contains("lemmatizer_url")) {
      cfg.lemmatizer_url = get_as<std::string>(f, "feedback", "lemmatizer_url");
    }
  }
  if (obj.contains("output_dir")) cfg.output_dir = get_as<std::string>(obj, "", "output_dir");
  if (obj.contains("seed")) cfg.seed = static_cast<std::uint64_t>(get_int(obj, "", "seed", 0));
  if (obj.contains("concurrency")) {
    cfg.concurrency = static_cast<std::size_t>(get_int(obj, "", "concurrency", 1));
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }
  return run_config_from_json(obj);
}

fs::path outcomes_path(const RunConfig& cfg, GenMethod method) {
  return cfg.output_dir / ("outcomes." + std::string(to_string(method)) + ".jsonl");
}
fs::path generate_summary_path(const RunConfig& cfg, GenMethod method) {
  return cfg.output_dir / ("generate_summary." + std::string(to_string(method)) + ".json");
}
fs::path kept_path(const RunConfig& cfg, std::optional<GenMethod> method) {
  return cfg.output_dir / ("kept." + method_suffix(method) + ".jsonl");
}
fs::path refinement_path(const RunConfig& cfg, std::optional<GenMethod> method) {
  return cfg.output_dir / ("refinement." + method_suffix(method) + ".json");
}
fs::path preferences_path(const RunConfig& cfg) { return cfg.output_dir / "preferences.jsonl"; }
fs::path stats_path(const RunConfig& cfg) { return cfg.output_dir / "stats.json"; }

std::vector<GenerationOutcome> read_outcomes(const fs::path& path) {
  std::string content;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }
  std::vector<GenerationOutcome> out;
  std::size_t pos = 0;
  for (std::size_t lineno = 1; pos < content.size(); ++lineno) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      // Unterminated trailing line from an interrupted write.
      std::cerr << "warning: " << path.string() << ": dropping torn line " << lineno << "\n";
      fs::resize_file(path, pos);
      break;
    }
    const std::string_view line(content.data() + pos, nl - pos);
    if (!text::trim(line).empty()) {
      try {
        out.push_back(outcome_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    pos = nl + 1;
  }
  return out;
}

ordered_json summary_to_json(const GenerateSummary& s) {
  ordered_json obj;
  obj["method"] = std::string(to_string(s.method));
  obj["records"] = s.records;
  obj["new_outcomes"] = s.new_outcomes;
  obj["total_outcomes"] = s.total_outcomes;
  obj["abstained"] = s.abstained;
  obj["backend_calls"] = s.backend_calls;
  obj["interrupted"] = s.interrupted;
  obj["error"] = s.error ? ordered_json(*s.error) : ordered_json(nullptr);
  return obj;
}

std::vector<GenerateSummary> cmd_generate(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.corpus_path.empty()) throw ConfigError("corpus.path", "required");
  cfg.backend.validate();
  const Corpus corpus = load_run_corpus(cfg);
  fs::create_directories(cfg.output_dir);

  std::vector<GenerateSummary> summaries;
  for (GenMethod method : cfg.methods) {
    GenerateSummary summary;
    summary.method = method;
    summary.records = corpus.size();

    const fs::path path = outcomes_path(cfg, method);
    std::set<std::string> done;
    if (fs::exists(path)) {
      for (const auto& o : read_outcomes(path)) {
        done.insert(o.source.record_id);
        ++summary.total_outcomes;
        summary.abstained += o.abstained;
      }
    }
    std::vector<const CaptionRecord*> pending;
    for (const auto& r : corpus.records) {
      if (!done.count(r.record_id)) pending.push_back(&r);
    }

    Generator generate(cfg, method);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot write " + path.string());

    const std::size_t chunk = std::max<std::size_t>(cfg.concurrency * 4, 1);
    for (std::size_t start = 0; start < pending.size(); start += chunk) {
      if (g_interrupted) {
        summary.interrupted = true;
        break;
      }
      const std::size_t n = std::min(chunk, pending.size() - start);
      std::vector<std::optional<GenerationOutcome>> results(n);
      std::vector<std::optional<std::string>> failures(n);
      parallel_for(n, cfg.concurrency, [&](std::size_t i) {
        const CaptionRecord& record = *pending[start + i];
        try {
          results[i] = generate(record);
        } catch (const TransportError& e) {
          failures[i] = "record " + record.record_id + ": " + e.what();
        }
      });
      for (std::size_t i = 0; i < n; ++i) {
        if (!results[i]) continue;
        out << outcome_to_json(*results[i]).dump() << '\n';
        ++summary.new_outcomes;
        ++summary.total_outcomes;
        summary.abstained += results[i]->abstained;
      }
      out.flush();
      for (const auto& f : failures) {
        if (f) {
          summary.error = *f;
          break;
        }
      }
      if (summary.error) break;
    }
    out.close();
    summary.backend_calls = generate.backend_calls();
    write_json_file(generate_summary_path(cfg, method), summary_to_json(summary));
    summaries.push_back(summary);
    std::cerr << to_string(method) << ": " << summary.new_outcomes << " new, "
              << summary.total_outcomes << " total, " << summary.abstained << " abstained, "
              << summary.backend_calls << " backend calls\n";
    if (summary.error) throw TransportError(*summary.error);
    if (summary.interrupted) break;
  }
  return summaries;
}

std::vector<RefinementReport> cmd_filter(const RunConfig& cfg) {
  cfg.validate();
  QualityScorer scorer(cfg.scorer);
  std::vector<std::vector<ScoredCandidate>> per_method;
  for (GenMethod method : cfg.methods) {
    const fs::path path = outcomes_path(cfg, method);
    if (!fs::exists(path)) {
      throw DomainError("no outcomes for " + std::string(to_string(method)) + " at " +
                        path.string() + "; run generate first");
    }
    std::vector<GenerationOutcome> outcomes;
    for (auto& o : read_outcomes(path)) {
      if (!o.abstained) outcomes.push_back(std::move(o));
    }
    per_method.push_back(score_candidates(outcomes, scorer));
  }

  std::vector<RefinementReport> reports;
  auto run_one = [&](std::span<const ScoredCandidate> cands, std::optional<GenMethod> method) {
    RefinementResult result = refine(cands, cfg.grid);
    write_candidates(kept_path(cfg, method), result.kept);
    write_json_file(refinement_path(cfg, method), report_to_json(result.report));
    std::cerr << method_suffix(method) << ": kept " << result.report.kept_count << " of "
              << result.report.input_count << "\n";
    reports.push_back(std::move(result.report));
  };
  if (cfg.pooled) {
    std::vector<ScoredCandidate> all;
    for (auto& v : per_method) all.insert(all.end(), v.begin(), v.end());
    run_one(all, std::nullopt);
  } else {
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) run_one(per_method[i], cfg.methods[i]);
  }
  return reports;
}

namespace {

std::vector<std::optional<GenMethod>> refinement_units(const RunConfig& cfg) {
  if (cfg.pooled) return {std::nullopt};
  return {cfg.methods.begin(), cfg.methods.end()};
}

}  // namespace

AssembleResult cmd_emit(const RunConfig& cfg) {
  cfg.validate();
  std::vector<ScoredCandidate> kept;
  for (auto unit : refinement_units(cfg)) {
    const fs::path path = kept_path(cfg, unit);
    if (!fs::exists(path)) {
      throw DomainError("no kept candidates at " + path.string() + "; run filter first");
    }
    auto part = read_candidates(path);
    kept.insert(kept.end(), part.begin(), part.end());
  }
  AssembleResult result = assemble(kept);
  emit_jsonl(result.examples, preferences_path(cfg));
  std::cerr << "emitted " << result.examples.size() << " preference pairs, dropped "
            << result.dropped << "\n";
  return result;
}

PipelineStats cmd_stats(const RunConfig& cfg) {
  cfg.validate();
  const Corpus corpus = load_run_corpus(cfg);
  std::map<GenMethod, std::size_t> generated;
  for (GenMethod method : cfg.methods) {
    const fs::path path = outcomes_path(cfg, method);
    if (!fs::exists(path)) {
      throw DomainError("no outcomes for " + std::string(to_string(method)) + " at " +
                        path.string() + "; run generate first");
    }
    auto& n = generated[method];
    for (const auto& o : read_outcomes(path)) n += o.abstained ? 0 : 1;
  }
  std::vector<RefinementReport> reports;
  for (auto unit : refinement_units(cfg)) {
    const fs::path path = refinement_path(cfg, unit);
    if (!fs::exists(path)) {
      throw DomainError("no refinement report at " + path.string() + "; run filter first");
    }
    reports.push_back(report_from_json(read_json_file(path)));
  }
  PipelineStats stats = compute_stats(corpus.size(), generated, reports);
  if (fs::exists(preferences_path(cfg))) {
    stats.final = read_preferences_jsonl(preferences_path(cfg)).size();
  }
  write_json_file(stats_path(cfg), stats_to_json(stats));
  return stats;
}

namespace {

// Flag values that override the config file when given.
struct RunFlags {
  std::string config;
  std::string corpus;
  std::string corpus_format;
  std::size_t sample = 0;
  std::string methods;
  std::string backend_url;
  std::string replay;
  double temperature = 0;
  double top_p = 0;
  int max_new_tokens = 0;
  long timeout_ms = 0;
  int max_retries = 0;
  std::string scorer_mode;
  std::string scorer_url;
  std::string score_cache;
  std::size_t grid_k = 0;
  bool pooled = false;
  std::string judge_url;
  std::string lemmatizer_url;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t concurrency = 0;
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_run_flags(CLI::App& sub, RunFlags& f) {
  auto add = [&](const std::string& name, auto& target, const std::string& help) {
    f.opts[name] = sub.add_option("--" + name, target, help);
  };
  add("config", f.config, "JSON run configuration");
  add("corpus", f.corpus, "caption corpus path");
  add("corpus-format", f.corpus_format, "caption_jsonl or coco_captions");
  add("sample", f.sample, "sample this many records (seeded)");
  add("methods", f.methods, "comma-separated generation methods");
  add("backend-url", f.backend_url, "text generation endpoint");
  add("replay", f.replay, "replay JSONL used instead of the generation endpoint");
  add("temperature", f.temperature, "sampling temperature");
  add("top-p", f.top_p, "nucleus sampling threshold");
  add("max-new-tokens", f.max_new_tokens, "completion length cap");
  add("timeout-ms", f.timeout_ms, "per-request timeout");
  add("max-retries", f.max_retries, "retry budget for transient HTTP failures");
  add("scorer-mode", f.scorer_mode, "mock or remote");
  add("scorer-url", f.scorer_url, "scoring endpoint");
  add("score-cache", f.score_cache, "persistent score cache (JSONL)");
  add("grid-k", f.grid_k, "refinement grid resolution");
  f.opts["pooled"] = sub.add_flag("--pooled", f.pooled, "refine all methods as one pool");
  add("judge-url", f.judge_url, "distinctness judge endpoint (feedback_loop)");
  add("lemmatizer-url", f.lemmatizer_url, "lemmatizer endpoint (feedback_loop)");
  add("out", f.out, "output directory");
  add("seed", f.seed, "seed for every stochastic stage");
  add("concurrency", f.concurrency, "in-flight request cap");
}

RunConfig resolve_config(const RunFlags& f) {
  RunConfig cfg = f.given("config") ? load_run_config(f.config) : RunConfig{};
  if (f.given("corpus")) cfg.corpus_path = f.corpus;
  if (f.given("corpus-format")) cfg.corpus_format = parse_corpus_format(f.corpus_format);
  if (f.given("sample")) cfg.sample = f.sample;
  if (f.given("methods")) cfg.methods = parse_methods(f.methods);
  if (f.given("backend-url")) cfg.backend.endpoint_url = f.backend_url;
  if (f.given("replay")) cfg.backend.replay_path = f.replay;
  if (f.given("temperature")) cfg.backend.temperature = f.temperature;
  if (f.given("top-p")) cfg.backend.top_p = f.top_p;
  if (f.given("max-new-tokens")) cfg.backend.max_new_tokens = f.max_new_tokens;
  if (f.given("timeout-ms")) {
    cfg.backend.request_timeout = cfg.scorer.request_timeout = std::chrono::milliseconds(f.timeout_ms);
  }
  if (f.given("max-retries")) cfg.backend.max_retries = cfg.scorer.max_retries = f.max_retries;
  if (f.given("scorer-mode")) cfg.scorer.mode = parse_scorer_mode(f.scorer_mode);
  if (f.given("scorer-url")) cfg.scorer.endpoint_url = f.scorer_url;
  if (f.given("score-cache")) cfg.scorer.cache_path = f.score_cache;
  if (f.given("grid-k")) cfg.grid.k = f.grid_k;
  if (f.given("pooled")) cfg.pooled = f.pooled;
  if (f.given("judge-url")) cfg.judge_url = f.judge_url;
  if (f.given("lemmatizer-url")) cfg.lemmatizer_url = f.lemmatizer_url;
  if (f.given("out")) cfg.output_dir = f.out;
  if (f.given("seed")) cfg.seed = f.seed;
  if (f.given("concurrency")) cfg.concurrency = f.concurrency;
  cfg.finalize();
  return cfg;
}

struct EvalFlags {
  std::string benchmark;
  std::string kind;
  std::string endpoint;
  std::string mock_table;
  std::string mock_answers;
  std::string out;
  std::size_t concurrency = 8;
  long timeout_ms = 60'000;
  int max_retries = 3;
};

int run_eval(const EvalFlags& f) {
  const HttpOptions http{std::chrono::milliseconds(f.timeout_ms), f.max_retries};
  const eval::EvalOptions options{f.concurrency};
  if (f.concurrency == 0) throw ConfigError("concurrency", "must be >= 1");
  ordered_json report;
  if (f.kind == "match") {
    std::unique_ptr<eval::AffinityClient> client;
    if (!f.endpoint.empty()) {
      client = std::make_unique<eval::RemoteAffinityClient>(f.endpoint, http);
    } else if (!f.mock_table.empty()) {
      client = std::make_unique<eval::MockAffinityClient>(eval::MockAffinityClient::from_file(f.mock_table));
    } else {
      throw ConfigError("endpoint", "either --endpoint or --mock-table is required");
    }
    const auto benchmark = eval::load_match_benchmark(f.benchmark);
    const auto result = eval::eval_matching(benchmark, *client, options);
    report = eval::report_to_json(result);
  } else if (f.kind == "two_choice") {
    std::unique_ptr<eval::AnswerClient> client;
    if (!f.endpoint.empty()) {
      client = std::make_unique<eval::RemoteAnswerClient>(f.endpoint, http);
    } else if (!f.mock_answers.empty()) {
      client = std::make_unique<eval::MockAnswerClient>(eval::MockAnswerClient::from_file(f.mock_answers));
    } else {
      throw ConfigError("endpoint", "either --endpoint or --mock-answers is required");
    }
    const auto benchmark = eval::load_two_choice_benchmark(f.benchmark);
    const auto result = eval::eval_two_choice(benchmark, *client, options);
    report = eval::report_to_json(result);
  } else {
    throw ConfigError("kind", "expected 'match' or 'two_choice', got '" + f.kind + "'");
  }
  if (!f.out.empty()) write_json_file(f.out, report);
  std::cout << report["summary"].dump(2) << "\n";
  return 0;
}

int run_dpo_check(std::uint64_t seed, std::size_t trials) {
  bool ok = true;
  for (const auto& check : dpo::run_invariant_suite(seed, trials)) {
    std::cout << (check.passed ? "ok   " : "FAIL ") << check.name;
    if (!check.detail.empty()) std::cout << "  (" << check.detail << ")";
    std::cout << "\n";
    ok = ok && check.passed;
  }
  std::cout << (ok ? "all invariants passed" : "invariant check failed") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Synthetic hard-negative caption preference data pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "scramble 0.1.0");

  RunFlags gen_flags, filter_flags, emit_flags, stats_flags;
  auto* gen = app.add_subcommand("generate", "generate negative captions per method");
  auto* filter = app.add_subcommand("filter", "score candidates and balance score gaps");
  auto* emit = app.add_subcommand("emit", "write the preference dataset");
  auto* stats = app.add_subcommand("stats", "report per-stage counts");
  add_run_flags(*gen, gen_flags);
  add_run_flags(*filter, filter_flags);
  add_run_flags(*emit, emit_flags);
  add_run_flags(*stats, stats_flags);

  EvalFlags eval_flags;
  auto* ev = app.add_subcommand("eval", "evaluate affinities or two-choice answers on a benchmark");
  ev->add_option("--benchmark", eval_flags.benchmark, "benchmark JSONL")->required();
  ev->add_option("--kind", eval_flags.kind, "match or two_choice")->required();
  ev->add_option("--endpoint", eval_flags.endpoint, "model service base URL");
  ev->add_option("--mock-table", eval_flags.mock_table, "affinity table JSONL (match)");
  ev->add_option("--mock-answers", eval_flags.mock_answers, "answer table JSONL (two_choice)");
  ev->add_option("--out", eval_flags.out, "report JSON path");
  ev->add_option("--concurrency", eval_flags.concurrency, "in-flight request cap");
  ev->add_option("--timeout-ms", eval_flags.timeout_ms, "per-request timeout");
  ev->add_option("--max-retries", eval_flags.max_retries, "retry budget");

  std::uint64_t dpo_seed = 0;
  std::size_t dpo_trials = 1000;
  auto* dpo = app.add_subcommand("dpo-check", "run the preference-loss invariant suite");
  dpo->add_option("--seed", dpo_seed, "random input seed");
  dpo->add_option("--trials", dpo_trials, "random inputs per property");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      const RunConfig cfg = resolve_config(gen_flags);
      g_interrupted = false;
      auto previous = std::signal(SIGINT, on_sigint);
      std::vector<GenerateSummary> summaries;
      try {
        summaries = cmd_generate(cfg);
      } catch (...) {
        std::signal(SIGINT, previous);
        throw;
      }
      std::signal(SIGINT, previous);
      for (const auto& s : summaries) {
        if (s.interrupted) {
          std::cerr << "interrupted; partial outputs flushed\n";
          return 130;
        }
      }
      return 0;
    }
    if (filter->parsed()) {
      cmd_filter(resolve_config(filter_flags));
      return 0;
    }
    if (emit->parsed()) {
      const auto result = cmd_emit(resolve_config(emit_flags));
      std::cout << result.examples.size() << "\n";
      return 0;
    }
    if (stats->parsed()) {
      const auto s = cmd_stats(resolve_config(stats_flags));
      std::cout << stats_to_json(s).dump(2) << "\n";
      return 0;
    }
    if (ev->parsed()) return run_eval(eval_flags);
    if (dpo->parsed()) return run_dpo_check(dpo_seed, dpo_trials);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace scramble
