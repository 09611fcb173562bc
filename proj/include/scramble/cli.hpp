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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scramble/adversarial_refine.hpp"
#include "scramble/corpus.hpp"
#include "scramble/llm_gen.hpp"
#include "scramble/pref_dataset.hpp"
#include "scramble/scoring.hpp"

namespace scramble {

// Declarative run configuration. JSON schema (all keys optional):
//
//   {
//     "corpus":   {"path": str, "format": "caption_jsonl" | "coco_captions", "sample": int},
//     "methods":  ["swap_objects", "swap_attributes", "chain_of_thought", "feedback_loop"],
//     "backend":  {"endpoint_url": str, "temperature": num, "top_p": num,
//                  "max_new_tokens": int, "request_timeout_ms": int, "max_retries": int,
//                  "seed": int, "replay_path": str},
//     "scorer":   {"mode": "mock" | "remote", "endpoint_url": str, "cache_path": str,
//                  "request_timeout_ms": int, "max_retries": int, "batch_size": int},
//     "grid":     {"k": int, "pooled": bool},
//     "feedback": {"judge_url": str, "lemmatizer_url": str},
//     "output_dir": str,
//     "seed": int,
//     "concurrency": int
//   }
//
// Relative paths resolve against the current directory. The backend token is
// read from SCRAMBLE_API_TOKEN only.
struct RunConfig {
  std::filesystem::path corpus_path;
  CorpusFormat corpus_format = CorpusFormat::caption_jsonl;
  std::optional<std::size_t> sample;
  std::vector<GenMethod> methods{GenMethod::swap_objects};
  BackendConfig backend;
  ScorerHandle scorer;
  GridConfig grid;
  bool pooled = false;
  std::optional<std::string> judge_url;
  std::optional<std::string> lemmatizer_url;
  std::filesystem::path output_dir = "scramble_out";
  std::uint64_t seed = 0;
  std::size_t concurrency = 8;

  // Fills the seed into stages that have none of their own and defaults the
  // score cache into output_dir.
  void finalize();
  // Checks shared by every stage; generate also requires a corpus and a
  // usable backend.
  void validate() const;
};

// ConfigError naming the offending field on unknown keys or bad types.
RunConfig run_config_from_json(const nlohmann::json& obj);
RunConfig load_run_config(const std::filesystem::path& path);

// Output layout under output_dir.
std::filesystem::path outcomes_path(const RunConfig& cfg, GenMethod method);
std::filesystem::path generate_summary_path(const RunConfig& cfg, GenMethod method);
std::filesystem::path kept_path(const RunConfig& cfg, std::optional<GenMethod> method);
std::filesystem::path refinement_path(const RunConfig& cfg, std::optional<GenMethod> method);
std::filesystem::path preferences_path(const RunConfig& cfg);
std::filesystem::path stats_path(const RunConfig& cfg);

// Reads an outcomes file, truncating a torn trailing line in place.
std::vector<GenerationOutcome> read_outcomes(const std::filesystem::path& path);

struct GenerateSummary {
  GenMethod method = GenMethod::swap_objects;
  std::size_t records = 0;    // corpus size for this run
  std::size_t new_outcomes = 0;
  std::size_t total_outcomes = 0;
  std::size_t abstained = 0;  // over total_outcomes
  std::size_t backend_calls = 0;
  bool interrupted = false;
  std::optional<std::string> error;
};

nlohmann::ordered_json summary_to_json(const GenerateSummary& s);

// Each stage throws on failure after writing whatever it completed.
std::vector<GenerateSummary> cmd_generate(const RunConfig& cfg);
std::vector<RefinementReport> cmd_filter(const RunConfig& cfg);
AssembleResult cmd_emit(const RunConfig& cfg);
PipelineStats cmd_stats(const RunConfig& cfg);

// Exit codes: 0 ok, 1 domain/data error, 2 usage, 3 transport, 130 interrupted.
int run_cli(int argc, char** argv);

}  // namespace scramble
