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

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scramble/http_client.hpp"

namespace scramble::eval {

// Two images, two captions; caption c is the true description of image c.
struct MatchExample {
  std::string example_id;
  std::array<std::string, 2> image_refs;
  std::array<std::string, 2> captions;
  std::optional<std::string> tag;
};

// s[c][i]: affinity of caption c with image i.
struct AffinityMatrix {
  std::array<std::array<double, 2>, 2> s{};
};

struct MatchScores {
  bool text_correct = false;
  bool image_correct = false;
  bool group_correct = false;

  friend bool operator==(const MatchScores&, const MatchScores&) = default;
};

enum class Choice { A, B };

struct TwoChoiceExample {
  std::string example_id;
  std::string image_ref;
  std::string question;
  std::string option_a;
  std::string option_b;
  Choice answer = Choice::A;
};

// Image-caption affinity source (VQAScore).
class AffinityClient {
 public:
  virtual ~AffinityClient() = default;
  virtual double affinity(const std::string& image_ref, const std::string& caption) = 0;
};

// POST {endpoint}/v1/vqascore {"image_ref", "caption"} -> {"score"}. The
// service asks vqascore_question(caption) and reports the probability that
// the answer's first token is a "Yes" variant.
class RemoteAffinityClient final : public AffinityClient {
 public:
  RemoteAffinityClient(std::string endpoint_url, HttpOptions options);
  double affinity(const std::string& image_ref, const std::string& caption) override;

 private:
  JsonHttpClient client_;
};

// Table lookup with a hash fallback: first 8 bytes of
// SHA-256("vqascore|<image_ref>|<caption>") big-endian over 2^64.
class MockAffinityClient final : public AffinityClient {
 public:
  MockAffinityClient() = default;
  explicit MockAffinityClient(std::map<std::pair<std::string, std::string>, double> table);
  // JSONL of {"image_ref", "caption", "score"}.
  static MockAffinityClient from_file(const std::filesystem::path& path);

  double affinity(const std::string& image_ref, const std::string& caption) override;

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
};

double mock_affinity(std::string_view image_ref, std::string_view caption);

// Free-form answers for two-choice questions.
class AnswerClient {
 public:
  virtual ~AnswerClient() = default;
  virtual std::string answer(const std::string& image_ref, const std::string& prompt) = 0;
};

// POST {endpoint}/v1/answer {"image_ref", "prompt"} -> {"text"}
class RemoteAnswerClient final : public AnswerClient {
 public:
  RemoteAnswerClient(std::string endpoint_url, HttpOptions options);
  std::string answer(const std::string& image_ref, const std::string& prompt) override;

 private:
  JsonHttpClient client_;
};

// Answers by image_ref from a table, `fallback` otherwise.
class MockAnswerClient final : public AnswerClient {
 public:
  explicit MockAnswerClient(std::map<std::string, std::string> by_image = {},
                            std::string fallback = "A");
  // JSONL of {"image_ref", "text"}.
  static MockAnswerClient from_file(const std::filesystem::path& path);
  std::string answer(const std::string& image_ref, const std::string& prompt) override;

 private:
  std::map<std::string, std::string> by_image_;
  std::string fallback_;
};

std::string vqascore_question(std::string_view caption);

// Affinity in [0, 1]; DomainError when the client reports anything else.
double vqascore(const std::string& image_ref, const std::string& caption, AffinityClient& client);

// Strict inequalities; ties fail.
MatchScores match_scores(const AffinityMatrix& m);

struct EvalOptions {
  std::size_t concurrency = 8;
};

struct MatchRow {
  std::string example_id;
  std::optional<std::string> tag;
  std::optional<AffinityMatrix> affinities;
  MatchScores scores;
  std::optional<std::string> error;
};

struct MatchSummary {
  double text_acc = 0;
  double image_acc = 0;
  double group_acc = 0;
  std::size_t evaluated = 0;
  std::size_t errored = 0;
};

struct MatchReport {
  std::vector<MatchRow> rows;
  MatchSummary summary;
  std::size_t affinity_calls = 0;  // after caching
};

// Four affinities per example, cached per (image, caption). Examples whose
// affinities fail are reported with an error and left out of the means.
MatchReport eval_matching(std::span<const MatchExample> benchmark, AffinityClient& client,
                          const EvalOptions& options = {});

std::string two_choice_prompt(const TwoChoiceExample& ex);

// Uppercased first alphabetic character, if any.
std::optional<char> extract_choice_letter(std::string_view response);

struct TwoChoiceRow {
  std::string example_id;
  std::string response;
  std::optional<char> letter;
  bool correct = false;
  bool format_failure = false;
  std::optional<std::string> error;
};

struct TwoChoiceSummary {
  double accuracy = 0;
  std::size_t evaluated = 0;
  std::size_t format_failures = 0;
  std::size_t errored = 0;
};

struct TwoChoiceReport {
  std::vector<TwoChoiceRow> rows;
  TwoChoiceSummary summary;
};

TwoChoiceReport eval_two_choice(std::span<const TwoChoiceExample> benchmark, AnswerClient& client,
                                const EvalOptions& options = {});

// Loaders accept the canonical JSONL shapes ({"example_id", "image_refs",
// "captions", "tag"} / {"example_id", "image_ref", "question", "option_a",
// "option_b", "answer"}) and the Winoground-style flat keys
// {"id", "image_0", "image_1", "caption_0", "caption_1", "tag"}.
std::vector<MatchExample> load_match_benchmark(const std::filesystem::path& path);
std::vector<TwoChoiceExample> load_two_choice_benchmark(const std::filesystem::path& path);

nlohmann::ordered_json report_to_json(const MatchReport& report);
nlohmann::ordered_json report_to_json(const TwoChoiceReport& report);

}  // namespace scramble::eval
