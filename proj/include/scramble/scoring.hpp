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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scramble/http_client.hpp"
#include "scramble/llm_gen.hpp"

namespace scramble {

inline constexpr std::string_view kGrammarScorer = "grammar";
inline constexpr std::string_view kPlausibilityScorer = "plausibility";

struct QualityScores {
  double grammar = 0;
  double plausibility = 0;

  friend bool operator==(const QualityScores&, const QualityScores&) = default;
};

enum class ScorerMode { remote, mock };

ScorerMode parse_scorer_mode(std::string_view name);
std::string_view to_string(ScorerMode mode);

struct ScorerHandle {
  ScorerMode mode = ScorerMode::mock;
  std::optional<std::string> endpoint_url;
  std::optional<std::filesystem::path> cache_path;
  std::chrono::milliseconds request_timeout{60'000};
  int max_retries = 3;
  std::size_t batch_size = 64;

  void validate() const;
};

// Deterministic stand-in score in [0, 1]: the first 8 bytes of
// SHA-256("<scorer_name>|<text>") read big-endian, divided by 2^64.
double mock_score(std::string_view scorer_name, std::string_view text);

// Append-only JSONL {"scorer", "text_sha256", "score"}; when a key appears
// more than once the last line wins. Safe for concurrent readers with a
// single process appending.
class ScoreCache {
 public:
  ScoreCache() = default;  // in-memory only
  explicit ScoreCache(std::filesystem::path path);

  std::optional<double> lookup(std::string_view scorer, std::string_view text) const;
  void store(std::string_view scorer, std::string_view text, double score);
  std::size_t size() const;

 private:
  static std::string key(std::string_view scorer, std::string_view text_sha256);

  std::optional<std::filesystem::path> path_;
  mutable std::mutex mutex_;
  std::map<std::string, double> entries_;
};

// Grammar and plausibility scorer behind a cache. Remote mode POSTs
// {"texts": [...]} to {endpoint}/v1/score/<scorer> in batches and expects
// {"scores": [...]}; mock mode uses mock_score(). Both consult the cache
// first and store misses.
class QualityScorer {
 public:
  explicit QualityScorer(ScorerHandle handle);

  QualityScores score(std::string_view text);
  std::vector<QualityScores> score_all(std::span<const std::string> texts);

  // Lookups that reached the remote service (0 in mock mode).
  std::size_t network_calls() const noexcept { return network_calls_; }
  const ScorerHandle& handle() const noexcept { return handle_; }

 private:
  std::vector<double> fetch(std::string_view scorer, std::span<const std::string> texts);

  ScorerHandle handle_;
  std::unique_ptr<ScoreCache> cache_;
  std::unique_ptr<JsonHttpClient> client_;
  std::atomic<std::size_t> network_calls_{0};
};

inline QualityScores score_caption(std::string_view text, QualityScorer& scorer) {
  return scorer.score(text);
}

struct ScoredCandidate {
  std::string record_id;
  std::string image_ref;
  std::string positive;
  std::string negative;
  GenMethod method = GenMethod::swap_objects;
  QualityScores pos_scores;
  QualityScores neg_scores;
  double g1 = 0;  // pos grammar - neg grammar
  double g2 = 0;  // pos plausibility - neg plausibility

  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

ScoredCandidate make_scored_candidate(const GenerationOutcome& outcome,
                                      QualityScores pos, QualityScores neg);

// Scores positives and negatives of non-abstained outcomes and fills the
// gaps. Output order matches input order. Scoring failures are rethrown with
// the offending record_id prepended.
std::vector<ScoredCandidate> score_candidates(std::span<const GenerationOutcome> outcomes,
                                              QualityScorer& scorer);

nlohmann::ordered_json candidate_to_json(const ScoredCandidate& c);
ScoredCandidate candidate_from_json(const nlohmann::json& obj);

}  // namespace scramble
