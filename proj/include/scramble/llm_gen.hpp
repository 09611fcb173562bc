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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scramble/corpus.hpp"
#include "scramble/http_client.hpp"

namespace scramble {

enum class GenMethod {
  swap_objects,
  swap_attributes,
  chain_of_thought,
  // Produced by the feedback loop; listed here so outcomes carry provenance.
  feedback_loop,
};

std::string_view to_string(GenMethod method);
GenMethod parse_gen_method(std::string_view name);

struct BackendConfig {
  std::string endpoint_url;
  double temperature = 0.2;
  double top_p = 0.9;
  int max_new_tokens = 512;
  std::chrono::milliseconds request_timeout{60'000};
  int max_retries = 3;
  std::optional<std::uint64_t> seed;
  // When set, completions are replayed from this transcript map instead of
  // calling endpoint_url.
  std::optional<std::filesystem::path> replay_path;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// "Prompt in, completion out". Chat-role formatting belongs to the service.
class TextBackend {
 public:
  virtual ~TextBackend() = default;
  // Throws TransportError when the backend cannot be reached.
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::size_t call_count() const noexcept = 0;
};

// POST {endpoint_url}/v1/generate
//   {"prompt", "temperature", "top_p", "max_new_tokens", "seed"} -> {"text"}
class HttpTextBackend final : public TextBackend {
 public:
  explicit HttpTextBackend(const BackendConfig& config);
  std::string complete(const std::string& prompt) override;
  std::size_t call_count() const noexcept override { return calls_; }

 private:
  BackendConfig config_;
  JsonHttpClient client_;
  std::atomic<std::size_t> calls_{0};
};

// Key used by replay files: lowercase hex SHA-256 of the prompt bytes.
std::string prompt_hash(std::string_view prompt);

// Offline backend answering from a {"prompt_hash", "text"} JSONL map.
// Unknown prompts get `fallback`, which defaults to a declared abstention.
class ReplayTextBackend final : public TextBackend {
 public:
  static constexpr std::string_view kDefaultFallback = "Output: NA";

  explicit ReplayTextBackend(std::map<std::string, std::string> by_hash,
                             std::string fallback = std::string(kDefaultFallback));
  static std::unique_ptr<ReplayTextBackend> from_file(const std::filesystem::path& path);

  std::string complete(const std::string& prompt) override;
  std::size_t call_count() const noexcept override { return calls_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  std::map<std::string, std::string> by_hash_;
  std::string fallback_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> misses_{0};
};

std::unique_ptr<TextBackend> make_text_backend(const BackendConfig& config);

// Appends one {"prompt_hash", "text"} line to a replay file.
void append_replay_entry(const std::filesystem::path& path,
                         std::string_view prompt, std::string_view text);

// Verbatim generation prompt with the caption substituted. Defined for
// swap_objects, swap_attributes and chain_of_thought; feedback_loop prompts
// come from feedback_initial_prompt(). Throws DomainError otherwise.
std::string build_prompt(std::string_view caption, GenMethod method);
inline std::string build_prompt(const CaptionRecord& record, GenMethod method) {
  return build_prompt(record.caption, method);
}

// What a parser extracted from one completion.
struct ParsedCompletion {
  std::optional<std::string> negative_caption;
  std::optional<std::string> parse_note;

  bool abstained() const noexcept { return !negative_caption.has_value(); }
};

// Swap transcripts: "Yes.\nSwappable noun phrases: ...\nOutput: <caption>".
// Abstains on a leading "No" or an "NA" output; otherwise takes the line after
// the last "Output:" marker.
ParsedCompletion parse_swap_response(std::string_view transcript);

// Chain-of-thought transcripts: takes the line after the last
// case-insensitive "Final Output Caption:" marker (a space before the colon
// is tolerated), trimmed of whitespace and surrounding quotes.
ParsedCompletion parse_cot_response(std::string_view transcript);

struct GenerationOutcome {
  CaptionRecord source;
  GenMethod method = GenMethod::swap_objects;
  std::optional<std::string> negative_caption;
  bool abstained = true;
  std::string raw_transcript;
  std::optional<std::string> parse_note;
};

// Builds the outcome for one parsed completion, applying the equality guard:
// a negative that normalizes to the positive is turned into an abstention.
GenerationOutcome make_outcome(const CaptionRecord& source, GenMethod method,
                               std::string transcript, ParsedCompletion parsed);

// build_prompt -> backend -> parser. TransportError propagates so the caller
// can skip the record; parse failures become abstentions.
GenerationOutcome generate_negative(const CaptionRecord& record, GenMethod method,
                                    TextBackend& backend);
GenerationOutcome generate_negative(const CaptionRecord& record, GenMethod method,
                                    const BackendConfig& backend);

nlohmann::ordered_json outcome_to_json(const GenerationOutcome& outcome);
GenerationOutcome outcome_from_json(const nlohmann::json& obj);

}  // namespace scramble
