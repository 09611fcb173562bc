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

#include <sys/wait.h>

#include <cstdlib>

#include "scramble/cli.hpp"
#include "scramble/errors.hpp"
#include "unit/stub_pipeline.hpp"
#include "unit/test_support.hpp"

namespace scramble {
namespace {

using nlohmann::json;
using testing::data_path;
using testing::LocalServer;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "scramble");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

json read_json(const std::filesystem::path& p) { return json::parse(read_file(p)); }

class StubRun : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = load_corpus(data_path("fixtures/e2e_captions.jsonl"), CorpusFormat::caption_jsonl);
    corpus_.records.resize(10);
    write_caption_jsonl(corpus_, tmp_ / "corpus.jsonl");
    testing::write_stub_replay(corpus_, {GenMethod::swap_objects, GenMethod::chain_of_thought},
                               tmp_ / "replay.jsonl");
  }

  std::vector<std::string> base(const std::string& cmd, const std::string& methods = "swap_objects") {
    return {cmd, "--corpus", (tmp_ / "corpus.jsonl").string(), "--replay", (tmp_ / "replay.jsonl").string(),
            "--methods", methods, "--out", (tmp_ / "out").string(), "--seed", "7", "--grid-k", "4"};
  }

  TempDir tmp_;
  Corpus corpus_;
};

TEST_F(StubRun, GenerateWritesOneLinePerCaptionAndResumes) {
  ASSERT_EQ(run(base("generate")), 0);
  EXPECT_EQ(count_lines(tmp_ / "out/outcomes.swap_objects.jsonl"), 10u);
  auto summary = read_json(tmp_ / "out/generate_summary.swap_objects.json");
  EXPECT_EQ(summary["backend_calls"], 10);
  EXPECT_EQ(summary["abstained"], 1);

  ASSERT_EQ(run(base("generate")), 0);
  summary = read_json(tmp_ / "out/generate_summary.swap_objects.json");
  EXPECT_EQ(summary["backend_calls"], 0);
  EXPECT_EQ(summary["new_outcomes"], 0);
  EXPECT_EQ(count_lines(tmp_ / "out/outcomes.swap_objects.jsonl"), 10u);
}

TEST_F(StubRun, TornTrailingLineIsRegenerated) {
  ASSERT_EQ(run(base("generate")), 0);
  const auto path = tmp_ / "out/outcomes.swap_objects.jsonl";
  const std::string full = read_file(path);
  write_file(path, full.substr(0, full.size() - 20));
  ASSERT_EQ(run(base("generate")), 0);
  EXPECT_EQ(read_json(tmp_ / "out/generate_summary.swap_objects.json")["backend_calls"], 1);
  EXPECT_EQ(read_file(path), full);
}

TEST_F(StubRun, TwoMethodsTwoFiles) {
  ASSERT_EQ(run(base("generate", "swap_objects,chain_of_thought")), 0);
  EXPECT_EQ(count_lines(tmp_ / "out/outcomes.swap_objects.jsonl"), 10u);
  EXPECT_EQ(count_lines(tmp_ / "out/outcomes.chain_of_thought.jsonl"), 10u);
}

TEST_F(StubRun, FullPipelineAndStats) {
  const std::string methods = "swap_objects,chain_of_thought";
  ASSERT_EQ(run(base("generate", methods)), 0);
  ASSERT_EQ(run(base("filter", methods)), 0);
  ASSERT_EQ(run(base("emit", methods)), 0);
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run(base("stats", methods)), 0);
  const json printed = json::parse(::testing::internal::GetCapturedStdout());
  const json stats = read_json(tmp_ / "out/stats.json");
  EXPECT_EQ(printed, stats);
  EXPECT_EQ(stats["start"], 10);
  EXPECT_EQ(stats["initial_generation"]["swap_objects"], 9);
  EXPECT_EQ(stats["initial_generation"]["chain_of_thought"], 9);
  std::size_t post = 0;
  for (const auto& [m, n] : stats["post_filtering"].items()) {
    EXPECT_LE(n.get<std::size_t>(), stats["initial_generation"][m].get<std::size_t>());
    post += n.get<std::size_t>();
  }
  EXPECT_LE(stats["final"].get<std::size_t>(), post);
  EXPECT_EQ(stats["final"].get<std::size_t>(), count_lines(tmp_ / "out/preferences.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(tmp_ / "out/refinement.swap_objects.json"));
  EXPECT_TRUE(std::filesystem::exists(tmp_ / "out/score_cache.jsonl"));
}

TEST_F(StubRun, LaterStagesNeedNoCorpusOrBackend) {
  ASSERT_EQ(run(base("generate")), 0);
  const std::string out = (tmp_ / "out").string();
  EXPECT_EQ(run({"filter", "--out", out, "--seed", "7", "--grid-k", "4"}), 0);
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"emit", "--out", out}), 0);
  ::testing::internal::GetCapturedStdout();
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"stats", "--out", out}), 2);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("corpus.path"), std::string::npos);
}

TEST_F(StubRun, PooledRefinement) {
  auto args = base("generate", "swap_objects,chain_of_thought");
  ASSERT_EQ(run(args), 0);
  args[0] = "filter";
  args.push_back("--pooled");
  ASSERT_EQ(run(args), 0);
  EXPECT_TRUE(std::filesystem::exists(tmp_ / "out/kept.pooled.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(tmp_ / "out/refinement.pooled.json"));
  EXPECT_FALSE(std::filesystem::exists(tmp_ / "out/kept.swap_objects.jsonl"));
  args[0] = "emit";
  EXPECT_EQ(run(args), 0);
}

TEST_F(StubRun, FilterBeforeGenerateFails) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run(base("filter")), 1);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("run generate first"), std::string::npos);
}

TEST_F(StubRun, ConfigFileWithFlagOverrides) {
  write_file(tmp_ / "run.json", json{{"corpus", {{"path", (tmp_ / "corpus.jsonl").string()}, {"sample", 4}}},
                                     {"methods", {"chain_of_thought"}},
                                     {"backend", {{"replay_path", (tmp_ / "replay.jsonl").string()}}},
                                     {"output_dir", (tmp_ / "cfg_out").string()},
                                     {"seed", 3}}
                                    .dump());
  ASSERT_EQ(run({"generate", "--config", (tmp_ / "run.json").string(), "--methods", "swap_objects"}), 0);
  EXPECT_EQ(count_lines(tmp_ / "cfg_out/outcomes.swap_objects.jsonl"), 4u);
  EXPECT_FALSE(std::filesystem::exists(tmp_ / "cfg_out/outcomes.chain_of_thought.jsonl"));
}

TEST(CliConfig, UnknownKeysAndSecretsAreUsageErrors) {
  try {
    run_config_from_json(json{{"backend", {{"endpoint", "http://x"}}}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "backend.endpoint");
  }
  try {
    run_config_from_json(json{{"backend", {{"api_token", "abc"}}}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "backend.api_token");
    EXPECT_NE(std::string(e.what()).find("SCRAMBLE_API_TOKEN"), std::string::npos);
  }
  EXPECT_THROW(run_config_from_json(json{{"grid", {{"k", -2}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"methods", {"swap_everything"}}}), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"seed", "seven"}}), ConfigError);
}

TEST(CliConfig, SeedPropagates) {
  RunConfig cfg = run_config_from_json(json{{"seed", 42}, {"output_dir", "o"}});
  cfg.finalize();
  EXPECT_EQ(cfg.backend.seed, std::optional<std::uint64_t>(42));
  EXPECT_EQ(cfg.grid.seed, 42u);
  EXPECT_EQ(cfg.scorer.cache_path, std::optional<std::filesystem::path>("o/score_cache.jsonl"));
  RunConfig own = run_config_from_json(json{{"seed", 42}, {"backend", {{"seed", 5}}}});
  own.finalize();
  EXPECT_EQ(own.backend.seed, std::optional<std::uint64_t>(5));
}

TEST(CliExit, UsageErrorsExitTwo) {
  TempDir tmp;
  write_file(tmp / "bad.json", R"({"corpus": {"path": "x"}, "colour": 1})");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"generate", "--config", (tmp / "bad.json").string()}), 2);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("colour"), std::string::npos);
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"generate", "--no-such-flag"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"eval", "--benchmark", "b.jsonl", "--kind", "ranking", "--mock-table", "t"}), 2);
  ::testing::internal::GetCapturedStderr();
}

TEST(CliExit, BackendDownExitsThreeAfterWritingSummary) {
  TempDir tmp;
  int port = 0;
  {
    LocalServer srv;
    srv.start();
    port = std::stoi(srv.url().substr(srv.url().rfind(':') + 1));
  }
  ::testing::internal::CaptureStderr();
  const int code = run({"generate", "--corpus", data_path("fixtures/captions_dup.jsonl").string(), "--backend-url",
                        "http://127.0.0.1:" + std::to_string(port), "--max-retries", "0", "--out",
                        (tmp / "out").string()});
  ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, 3);
  const json summary = read_json(tmp / "out/generate_summary.swap_objects.json");
  EXPECT_FALSE(summary["error"].is_null());
  EXPECT_EQ(summary["new_outcomes"], 0);
}

TEST(CliExit, BackendFailingMidwayKeepsEarlierOutcomes) {
  TempDir tmp;
  LocalServer srv;
  std::atomic<int> calls{0};
  srv.server().Post("/v1/generate", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls > 2) {
      res.status = 400;
      return;
    }
    res.set_content(R"({"text": "Yes.\nOutput: A different scene entirely."})", "application/json");
  });
  srv.start();
  const auto corpus = data_path("fixtures/e2e_captions.jsonl").string();
  ::testing::internal::CaptureStderr();
  const int code = run({"generate", "--corpus", corpus, "--backend-url", srv.url(), "--max-retries", "0",
                        "--concurrency", "1", "--out", (tmp / "out").string()});
  ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, 3);
  EXPECT_EQ(count_lines(tmp / "out/outcomes.swap_objects.jsonl"), 2u);
}

TEST(CliFeedback, HorseConversationThroughGenerate) {
  TempDir tmp;
  write_file(tmp / "corpus.jsonl",
             R"({"record_id": "horse", "image_ref": "horse.jpg", "caption": "A white horse pulling a cart down a street."})"
             "\n");
  std::filesystem::copy_file(data_path("fixtures/feedback_scores.jsonl"), tmp / "scores.jsonl");
  ASSERT_EQ(run({"generate", "--corpus", (tmp / "corpus.jsonl").string(), "--methods", "feedback_loop", "--replay",
                 data_path("fixtures/feedback_replay.jsonl").string(), "--score-cache", (tmp / "scores.jsonl").string(),
                 "--out", (tmp / "out").string()}),
            0);
  std::ifstream in(tmp / "out/outcomes.feedback_loop.jsonl");
  std::string line;
  std::getline(in, line);
  const json o = json::parse(line);
  EXPECT_EQ(o["negative_caption"], "A cart is being pushed by a white horse up a street.");
  EXPECT_EQ(o["raw_transcript"], read_file(data_path("golden/feedback_transcript.sorted.txt")));
  EXPECT_EQ(read_json(tmp / "out/generate_summary.feedback_loop.json")["backend_calls"], 10);
}

TEST(CliEval, OracleMockGivesPerfectGroupScore) {
  TempDir tmp;
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run({"eval", "--benchmark", data_path("fixtures/match_small.jsonl").string(), "--kind", "match",
                 "--mock-table", data_path("fixtures/match_oracle_table.jsonl").string(), "--out",
                 (tmp / "report.json").string()}),
            0);
  ::testing::internal::GetCapturedStdout();
  const json report = read_json(tmp / "report.json");
  EXPECT_EQ(report["summary"]["group_acc"], 1.0);
  EXPECT_EQ(report["examples"].size(), 4u);
}

TEST(CliEval, TwoChoiceWithMockAnswers) {
  TempDir tmp;
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run({"eval", "--benchmark", data_path("fixtures/two_choice_small.jsonl").string(), "--kind",
                 "two_choice", "--mock-answers", data_path("fixtures/two_choice_answers.jsonl").string(), "--out",
                 (tmp / "report.json").string()}),
            0);
  ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(read_json(tmp / "report.json")["summary"]["format_failures"], 1);
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliBinary, DpoCheck) {
  TempDir tmp;
  const auto out = tmp / "stdout.txt";
  EXPECT_EQ(shell(std::string(SCRAMBLE_CLI_PATH) + " dpo-check --seed 1 > " + out.string()), 0);
  EXPECT_NE(read_file(out).find("all invariants passed"), std::string::npos);
}

TEST(CliBinary, InterruptFlushesPartialOutput) {
  TempDir tmp;
  LocalServer srv;
  srv.server().Post("/v1/generate", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    res.set_content(R"({"text": "Yes.\nOutput: A different scene entirely."})", "application/json");
  });
  srv.start();
  const std::string cmd = "timeout --preserve-status -s INT 1 " + std::string(SCRAMBLE_CLI_PATH) +
                          " generate --corpus " + data_path("fixtures/e2e_captions.jsonl").string() +
                          " --backend-url " + srv.url() + " --concurrency 1 --out " + (tmp / "out").string() +
                          " 2> " + (tmp / "stderr.txt").string();
  EXPECT_EQ(shell(cmd), 130);
  const json summary = read_json(tmp / "out/generate_summary.swap_objects.json");
  EXPECT_TRUE(summary["interrupted"].get<bool>());
  const std::size_t lines = count_lines(tmp / "out/outcomes.swap_objects.jsonl");
  EXPECT_GT(lines, 0u);
  EXPECT_LT(lines, 50u);
  EXPECT_EQ(summary["total_outcomes"].get<std::size_t>(), lines);
}

}  // namespace
}  // namespace scramble
