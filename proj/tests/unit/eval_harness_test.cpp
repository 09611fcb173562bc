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

#include <gtest/gtest.h>

#include <random>

#include "scramble/errors.hpp"
#include "scramble/eval_harness.hpp"
#include "unit/test_support.hpp"

namespace scramble::eval {
namespace {

using nlohmann::json;
using scramble::testing::data_path;
using scramble::testing::LocalServer;
using scramble::testing::read_file;

AffinityMatrix matrix(double s00, double s01, double s10, double s11) {
  AffinityMatrix m;
  m.s = {{{s00, s01}, {s10, s11}}};
  return m;
}

class FunctionAffinity final : public AffinityClient {
 public:
  explicit FunctionAffinity(std::function<double(const std::string&, const std::string&)> fn)
      : fn_(std::move(fn)) {}
  double affinity(const std::string& i, const std::string& c) override {
    ++calls;
    return fn_(i, c);
  }
  std::atomic<int> calls{0};

 private:
  std::function<double(const std::string&, const std::string&)> fn_;
};

std::vector<MatchExample> synthetic(std::size_t n) {
  std::vector<MatchExample> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::string id = std::to_string(k);
    out[k].example_id = id;
    out[k].image_refs = {"i0_" + id, "i1_" + id};
    out[k].captions = {"c0_" + id, "c1_" + id};
  }
  return out;
}

bool true_pair(const std::string& image, const std::string& caption) {
  return image.substr(1, 1) == caption.substr(1, 1);
}

TEST(MatchScores, StrictInequalities) {
  EXPECT_EQ(match_scores(matrix(1, 0, 0, 1)), (MatchScores{true, true, true}));
  EXPECT_EQ(match_scores(matrix(0, 1, 1, 0)), (MatchScores{false, false, false}));
  // Text correct only: each image prefers its caption, but caption 0 prefers image 1.
  EXPECT_EQ(match_scores(matrix(0.6, 0.7, 0.5, 0.8)), (MatchScores{true, false, false}));
  EXPECT_EQ(match_scores(matrix(0.5, 0.5, 0.5, 0.5)), (MatchScores{false, false, false}));
}

TEST(MatchScores, GroupNeverExceedsTextOrImage) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 0; n < 1000; ++n) {
    const auto s = match_scores(matrix(u(gen), u(gen), u(gen), u(gen)));
    EXPECT_LE(s.group_correct, s.text_correct);
    EXPECT_LE(s.group_correct, s.image_correct);
  }
}

TEST(EvalMatching, OracleAndInvertedAndCaching) {
  const auto bench = synthetic(40);
  FunctionAffinity oracle([](const std::string& i, const std::string& c) { return true_pair(i, c) ? 1.0 : 0.0; });
  const auto r = eval_matching(bench, oracle, {4});
  EXPECT_EQ(r.summary.text_acc, 1.0);
  EXPECT_EQ(r.summary.image_acc, 1.0);
  EXPECT_EQ(r.summary.group_acc, 1.0);
  EXPECT_EQ(r.summary.evaluated, 40u);
  EXPECT_EQ(r.affinity_calls, 160u);
  FunctionAffinity inverted([](const std::string& i, const std::string& c) { return true_pair(i, c) ? 0.0 : 1.0; });
  const auto inv = eval_matching(bench, inverted);
  EXPECT_EQ(inv.summary.text_acc, 0.0);
  EXPECT_EQ(inv.summary.group_acc, 0.0);

  std::vector<MatchExample> repeated(5, bench[0]);
  FunctionAffinity counting([](const std::string&, const std::string&) { return 0.5; });
  eval_matching(repeated, counting, {1});
  EXPECT_EQ(counting.calls.load(), 4);
}

TEST(EvalMatching, ErroredExamplesExcludedFromMeans) {
  const auto bench = synthetic(4);
  FunctionAffinity flaky([](const std::string& i, const std::string& c) {
    if (i == "i0_2") throw TransportError("down");
    if (i == "i1_3") return 1.5;
    return true_pair(i, c) ? 1.0 : 0.0;
  });
  const auto r = eval_matching(bench, flaky, {2});
  EXPECT_EQ(r.summary.evaluated, 2u);
  EXPECT_EQ(r.summary.errored, 2u);
  EXPECT_EQ(r.summary.group_acc, 1.0);
  ASSERT_TRUE(r.rows[2].error);
  EXPECT_NE(r.rows[2].error->find("2"), std::string::npos);
  EXPECT_TRUE(r.rows[3].error);
  EXPECT_FALSE(r.rows[0].error);
}

TEST(EvalMatching, ConcurrencyDoesNotChangeResults) {
  const auto bench = synthetic(200);
  MockAffinityClient mock;
  const auto a = report_to_json(eval_matching(bench, mock, {1}));
  const auto b = report_to_json(eval_matching(bench, mock, {8}));
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Affinity, MockMatchesOracleAndTable) {
  const auto oracle = json::parse(read_file(data_path("fixtures/mock_scores_oracle.json")));
  for (const auto& row : oracle["affinity"]) {
    EXPECT_EQ(mock_affinity(row["image_ref"].get<std::string>(), row["caption"].get<std::string>()),
              row["score"].get<double>());
  }
  auto table = MockAffinityClient::from_file(data_path("fixtures/match_oracle_table.jsonl"));
  EXPECT_EQ(table.affinity("ex_0_img_0.png", "an old person kisses a young person"), 1.0);
  EXPECT_EQ(table.affinity("ex_0_img_0.png", "a young person kisses an old person"), 0.0);
  EXPECT_EQ(vqascore_question("a dog on a couch"), "Does this image show a dog on a couch?");
}

TEST(Affinity, RemoteWireFormat) {
  LocalServer srv;
  json seen;
  srv.server().Post("/v1/vqascore", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"score": 0.75})", "application/json");
  });
  srv.server().Post("/v1/answer", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"text": "B"})", "application/json");
  });
  srv.start();
  const HttpOptions opts{std::chrono::milliseconds(2000), 0, std::chrono::milliseconds(1)};
  RemoteAffinityClient aff(srv.url(), opts);
  EXPECT_EQ(vqascore("img.png", "a cat", aff), 0.75);
  EXPECT_EQ(seen, (json{{"image_ref", "img.png"}, {"caption", "a cat"}}));
  RemoteAnswerClient ans(srv.url(), opts);
  EXPECT_EQ(ans.answer("img.png", "Q?"), "B");
  EXPECT_EQ(seen, (json{{"image_ref", "img.png"}, {"prompt", "Q?"}}));
}

TEST(TwoChoice, PromptAndLetterExtraction) {
  TwoChoiceExample ex{"q", "img", "Which caption matches?", "a dog", "a cat", Choice::A};
  EXPECT_EQ(two_choice_prompt(ex),
            "Which caption matches?\nA. a dog\nB. a cat\nAnswer with the letter of the correct option.");
  EXPECT_EQ(extract_choice_letter("  (b)"), std::optional<char>('B'));
  EXPECT_EQ(extract_choice_letter("The answer is B"), std::optional<char>('T'));
  EXPECT_FALSE(extract_choice_letter("42."));
}

TEST(TwoChoice, AlwaysAOnBalancedBenchmark) {
  std::vector<TwoChoiceExample> bench;
  for (int n = 0; n < 10; ++n) {
    bench.push_back({std::to_string(n), "img" + std::to_string(n), "Q", "x", "y", n % 2 ? Choice::B : Choice::A});
  }
  MockAnswerClient always_a;
  const auto r = eval_two_choice(bench, always_a);
  EXPECT_DOUBLE_EQ(r.summary.accuracy, 0.5);
  EXPECT_EQ(r.summary.format_failures, 0u);
}

TEST(TwoChoice, FixtureWithFormatFailure) {
  const auto bench = load_two_choice_benchmark(data_path("fixtures/two_choice_small.jsonl"));
  auto answers = MockAnswerClient::from_file(data_path("fixtures/two_choice_answers.jsonl"));
  const auto r = eval_two_choice(bench, answers);
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_TRUE(r.rows[0].correct);
  EXPECT_TRUE(r.rows[1].correct);
  EXPECT_FALSE(r.rows[2].correct);
  EXPECT_TRUE(r.rows[2].format_failure);
  EXPECT_FALSE(r.rows[3].correct);
  EXPECT_FALSE(r.rows[3].format_failure);
  EXPECT_DOUBLE_EQ(r.summary.accuracy, 0.5);
  EXPECT_EQ(r.summary.format_failures, 1u);
}

TEST(Loaders, BothMatchShapes) {
  const auto bench = load_match_benchmark(data_path("fixtures/match_small.jsonl"));
  ASSERT_EQ(bench.size(), 4u);
  EXPECT_EQ(bench[0].example_id, "wg0");
  EXPECT_EQ(bench[0].image_refs[1], "ex_0_img_1.png");
  EXPECT_EQ(bench[2].captions[1], "a blue cube and a red ball");
  EXPECT_EQ(bench[3].tag, std::optional<std::string>("Relation"));
  auto table = MockAffinityClient::from_file(data_path("fixtures/match_oracle_table.jsonl"));
  EXPECT_EQ(eval_matching(bench, table).summary.group_acc, 1.0);
}

TEST(Loaders, RejectInvalidRows) {
  scramble::testing::TempDir tmp;
  scramble::testing::write_file(tmp / "m.jsonl",
                                R"({"id": 1, "image_0": "a", "image_1": "b", "caption_0": "x", "caption_1": "x"})");
  EXPECT_THROW(load_match_benchmark(tmp / "m.jsonl"), ParseError);
  scramble::testing::write_file(
      tmp / "t.jsonl",
      R"({"example_id": "q", "image_ref": "a", "question": "Q", "option_a": "x", "option_b": "y", "answer": "C"})");
  EXPECT_THROW(load_two_choice_benchmark(tmp / "t.jsonl"), ParseError);
}

TEST(Report, JsonShape) {
  const auto bench = load_match_benchmark(data_path("fixtures/match_small.jsonl"));
  auto table = MockAffinityClient::from_file(data_path("fixtures/match_oracle_table.jsonl"));
  const auto obj = report_to_json(eval_matching(bench, table));
  EXPECT_EQ(obj["kind"], "match");
  EXPECT_EQ(obj["summary"]["group_acc"], 1.0);
  EXPECT_EQ(obj["examples"].size(), 4u);
  EXPECT_EQ(obj["examples"][0]["affinities"][0][0], 1.0);
}

}  // namespace
}  // namespace scramble::eval
