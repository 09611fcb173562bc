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

#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scramble/corpus.hpp"
#include "scramble/http_client.hpp"
#include "scramble/llm_gen.hpp"
#include "scramble/scoring.hpp"

namespace scramble {

using WordSet = std::set<std::string>;

class Lemmatizer {
 public:
  virtual ~Lemmatizer() = default;
  // Maps lowercase, punctuation-free tokens to lemmas, order-aligned.
  virtual std::vector<std::string> lemmatize(std::span<const std::string> tokens) const = 0;
};

class IdentityLemmatizer final : public Lemmatizer {
 public:
  std::vector<std::string> lemmatize(std::span<const std::string> tokens) const override;
};

// Lookup of irregular forms, then the first matching suffix rule
// (plural -s/-es/-ies, gerund -ing, past -ed) with undoubling of a final
// double consonant. Small and deterministic; not a linguistic lemmatizer.
class SuffixRuleLemmatizer final : public Lemmatizer {
 public:
  std::vector<std::string> lemmatize(std::span<const std::string> tokens) const override;
  static std::string lemma(std::string_view token);
};

// POST {endpoint}/v1/lemmatize {"texts": [...]} -> {"lemmas": [...]}, where
// each lemmas entry is a string or a list of strings.
class RemoteLemmatizer final : public Lemmatizer {
 public:
  RemoteLemmatizer(std::string endpoint_url, HttpOptions options);
  std::vector<std::string> lemmatize(std::span<const std::string> tokens) const override;

 private:
  JsonHttpClient client_;
};

const Lemmatizer& default_lemmatizer();

// Lowercases, strips punctuation, splits on whitespace and lemmatizes.
WordSet lemma_word_set(std::string_view text, const Lemmatizer& lemmatizer = default_lemmatizer());

// Jaccard index |a ∩ b| / |a ∪ b|; 1 when both are empty.
double word_similarity(const WordSet& a, const WordSet& b);

struct FeedbackIteration {
  int index = 0;  // 1-based
  std::string candidate;
  double grammar = 0;
  double plausibility = 0;
  bool distinct = false;
  WordSet extra_lemmas;    // in the candidate, not in the source
  WordSet missing_lemmas;  // in the source, not in the candidate
};

inline constexpr int kFeedbackIterations = 5;

struct FeedbackRun {
  CaptionRecord source;
  std::vector<FeedbackIteration> iterations;
  std::optional<FeedbackIteration> selected;
  // Whole conversation, including the feedback on the last candidate.
  std::string transcript;
  // Set when a backend became unreachable partway through.
  std::optional<std::string> error;
  bool abstained_early = false;
};

// Opening message of a feedback conversation, ending with the input caption.
std::string feedback_initial_prompt(std::string_view caption);

// Feedback on the first candidate ("Your grammar score is 0.99.").
std::string build_first_feedback_message(const FeedbackIteration& current, bool ask_retry = true);

// Feedback on later candidates, phrased as improved/degraded relative to
// `previous`. Scores are printed with 2 decimals but compared at full
// precision; a score counts as improved only when strictly higher. Word
// lines are omitted when their set is empty.
std::string build_feedback_message(const FeedbackIteration& previous,
                                   const FeedbackIteration& current, bool ask_retry = true);

class DistinctJudge {
 public:
  virtual ~DistinctJudge() = default;
  virtual bool is_distinct(std::string_view original, std::string_view candidate) = 0;
};

std::string distinct_judge_prompt(std::string_view original, std::string_view candidate);

// "yes"/"no" from the first alphabetic token; nullopt for anything else.
std::optional<bool> parse_judge_answer(std::string_view answer);

// Asks a text backend the judge prompt. Unparseable answers count as not
// distinct.
class LlmDistinctJudge final : public DistinctJudge {
 public:
  explicit LlmDistinctJudge(TextBackend& backend) : backend_(backend) {}
  bool is_distinct(std::string_view original, std::string_view candidate) override;

 private:
  TextBackend& backend_;
};

// POST {endpoint}/v1/judge/distinct {"original", "candidate"} -> {"distinct"}
class RemoteDistinctJudge final : public DistinctJudge {
 public:
  RemoteDistinctJudge(std::string endpoint_url, HttpOptions options);
  bool is_distinct(std::string_view original, std::string_view candidate) override;

 private:
  JsonHttpClient client_;
};

// Among distinct iterations, the one maximizing
// (plausibility + grammar + word_similarity(source, candidate)) / 3, later
// iterations winning ties. nullopt when nothing is distinct.
std::optional<FeedbackIteration> select_candidate(std::span<const FeedbackIteration> iterations,
                                                  std::string_view source_caption,
                                                  const Lemmatizer& lemmatizer = default_lemmatizer());

double selection_score(const FeedbackIteration& it, std::string_view source_caption,
                       const Lemmatizer& lemmatizer = default_lemmatizer());

// Generate -> score -> feedback for up to kFeedbackIterations rounds in one
// growing conversation. An "NA" (or unparseable) candidate ends the run.
// At most kFeedbackIterations calls are made to `backend`.
FeedbackRun run_feedback_loop(const CaptionRecord& record, TextBackend& backend,
                              QualityScorer& scorer, DistinctJudge& judge,
                              const Lemmatizer& lemmatizer = default_lemmatizer());

// Outcome tagged feedback_loop carrying the selected candidate.
GenerationOutcome to_outcome(const FeedbackRun& run);

}  // namespace scramble
