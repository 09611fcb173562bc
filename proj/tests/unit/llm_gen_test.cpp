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

#include "scramble/errors.hpp"
#include "scramble/llm_gen.hpp"
#include "unit/test_support.hpp"

namespace scramble {
namespace {

using nlohmann::json;
using testing::data_path;
using testing::LocalServer;
using testing::read_file;
using testing::TempDir;

const CaptionRecord kCake{"139#0", "000000000139.jpg",
                          "A woman cutting into a cake with a man standing behind her."};
const CaptionRecord kHydrant{"h1", "hydrant.jpg",
                             "A red fire hydrant, a yellow balloon, and some rocks."};
const CaptionRecord kHorse{"horse", "horse.jpg", "A white horse pulling a cart down a street."};
const CaptionRecord kBird{"bird", "bird.jpg", "a pink bird with a white beak"};

TEST(Prompts, MatchTranscribedGoldens) {
  EXPECT_EQ(build_prompt(kCake, GenMethod::swap_objects),
            read_file(data_path("golden/prompt_swap_objects.txt")));
  EXPECT_EQ(build_prompt(kHydrant, GenMethod::swap_attributes),
            read_file(data_path("golden/prompt_swap_attributes.txt")));
  EXPECT_EQ(build_prompt(kHorse, GenMethod::chain_of_thought),
            read_file(data_path("golden/prompt_chain_of_thought.txt")));
}

TEST(Prompts, CaptionAppearsOnceAtTheInputSlot) {
  for (GenMethod m : {GenMethod::swap_objects, GenMethod::swap_attributes, GenMethod::chain_of_thought}) {
    const std::string p = build_prompt("ZZZ unique caption ZZZ", m);
    EXPECT_EQ(p.find("ZZZ unique caption ZZZ"), p.rfind("ZZZ unique caption ZZZ"));
  }
  EXPECT_THROW(build_prompt(kCake, GenMethod::feedback_loop), DomainError);
}

TEST(Prompts, ChainOfThoughtCarriesAllFiveExamples) {
  const std::string p = build_prompt(kHorse, GenMethod::chain_of_thought);
  std::size_t count = 0;
  for (auto pos = p.find("Final Output Caption:"); pos != std::string::npos;
       pos = p.find("Final Output Caption:", pos + 1)) {
    ++count;
  }
  EXPECT_EQ(count, 5u);
}

TEST(Parse, SwapObjectsTranscript) {
  const auto parsed = parse_swap_response(read_file(data_path("fixtures/transcripts/swap_objects_cake.txt")));
  ASSERT_TRUE(parsed.negative_caption);
  EXPECT_EQ(*parsed.negative_caption, "A man cutting into a cake with a woman standing behind him.");
}

TEST(Parse, SwapAttributesTranscript) {
  const auto parsed =
      parse_swap_response(read_file(data_path("fixtures/transcripts/swap_attributes_hydrant.txt")));
  ASSERT_TRUE(parsed.negative_caption);
  EXPECT_EQ(*parsed.negative_caption, "A yellow fire hydrant, a red balloon, and some rocks.");
}

TEST(Parse, SwapAbstentions) {
  EXPECT_TRUE(parse_swap_response("No\nSwappable attributes: NA\nOutput: NA").abstained());
  EXPECT_FALSE(parse_swap_response("No\nSwappable attributes: NA\nOutput: NA").parse_note);
  EXPECT_TRUE(parse_swap_response("Yes.\nOutput: n/a").abstained());
  EXPECT_TRUE(parse_swap_response("no.").abstained());
  const auto garbled = parse_swap_response("Sure! Here you go.");
  EXPECT_TRUE(garbled.abstained());
  ASSERT_TRUE(garbled.parse_note);
}

TEST(Parse, SwapTakesLastMarkerAndStripsQuotes) {
  const auto parsed = parse_swap_response("Yes.\nOutput: first\nOutput: \"A cat on a mat.\"  \nmore");
  ASSERT_TRUE(parsed.negative_caption);
  EXPECT_EQ(*parsed.negative_caption, "A cat on a mat.");
}

TEST(Parse, ChainOfThoughtBird) {
  const auto parsed = parse_cot_response(read_file(data_path("fixtures/transcripts/cot_bird.txt")));
  ASSERT_TRUE(parsed.negative_caption);
  EXPECT_EQ(*parsed.negative_caption, "a white bird with a pink beak");
}

TEST(Parse, ChainOfThoughtHorse) {
  const auto parsed = parse_cot_response(read_file(data_path("fixtures/transcripts/cot_horse.txt")));
  ASSERT_TRUE(parsed.negative_caption);
  EXPECT_EQ(*parsed.negative_caption, "A white horse pushing a cart down a street.");
}

TEST(Parse, ChainOfThoughtVariants) {
  EXPECT_EQ(parse_cot_response("reasoning\nfinal output caption:\n\n  A dog.\n").negative_caption,
            std::optional<std::string>("A dog."));
  EXPECT_TRUE(parse_cot_response("Final Output Caption: NA").abstained());
  EXPECT_TRUE(parse_cot_response("Final Output Caption: 'NA'").abstained());
  const auto none = parse_cot_response("I cannot do this.");
  EXPECT_TRUE(none.abstained());
  EXPECT_TRUE(none.parse_note);
}

TEST(Outcome, EqualityGuardTurnsIntoAbstention) {
  ParsedCompletion same;
  same.negative_caption = "a woman cutting into a cake, with a man standing behind her";
  const auto o = make_outcome(kCake, GenMethod::swap_objects, "t", same);
  EXPECT_TRUE(o.abstained);
  EXPECT_FALSE(o.negative_caption);
  EXPECT_TRUE(o.parse_note);

  ParsedCompletion punct;
  punct.negative_caption = "...";
  EXPECT_TRUE(make_outcome(kCake, GenMethod::swap_objects, "t", punct).abstained);
}

TEST(Outcome, JsonRoundTrip) {
  ParsedCompletion p;
  p.negative_caption = "A man cutting into a cake with a woman standing behind him.";
  const auto o = make_outcome(kCake, GenMethod::swap_objects, "raw", p);
  const auto obj = outcome_to_json(o);
  const auto back = outcome_from_json(json::parse(obj.dump()));
  EXPECT_EQ(back.source, o.source);
  EXPECT_EQ(back.method, o.method);
  EXPECT_EQ(back.negative_caption, o.negative_caption);
  EXPECT_EQ(back.abstained, o.abstained);
  EXPECT_EQ(back.raw_transcript, "raw");
  // Key order is part of the file format.
  std::vector<std::string> keys;
  for (const auto& [k, v] : obj.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"record_id", "image_ref", "caption", "method", "abstained",
                                            "negative_caption", "parse_note", "raw_transcript"}));
  json bad = json::parse(obj.dump());
  bad["abstained"] = true;
  EXPECT_THROW(outcome_from_json(bad), ParseError);
}

TEST(Replay, LooksUpByPromptHashWithAbstainingFallback) {
  TempDir tmp;
  const std::string prompt = build_prompt(kCake, GenMethod::swap_objects);
  append_replay_entry(tmp / "replay.jsonl", prompt,
                      read_file(data_path("fixtures/transcripts/swap_objects_cake.txt")));
  auto backend = ReplayTextBackend::from_file(tmp / "replay.jsonl");
  const auto o = generate_negative(kCake, GenMethod::swap_objects, *backend);
  EXPECT_EQ(o.negative_caption, std::optional<std::string>(
                                    "A man cutting into a cake with a woman standing behind him."));
  const auto miss = generate_negative(kHydrant, GenMethod::swap_attributes, *backend);
  EXPECT_TRUE(miss.abstained);
  EXPECT_EQ(miss.raw_transcript, "Output: NA");
  EXPECT_EQ(backend->call_count(), 2u);
  EXPECT_EQ(backend->misses(), 1u);
  EXPECT_EQ(prompt_hash("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Replay, MalformedReplayLine) {
  TempDir tmp;
  testing::write_file(tmp / "r.jsonl", "{\"prompt_hash\": \"x\", \"text\": \"y\"}\n{oops\n");
  EXPECT_THROW(ReplayTextBackend::from_file(tmp / "r.jsonl"), ParseError);
}

TEST(HttpBackend, WireFormat) {
  LocalServer srv;
  json seen;
  srv.server().Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(json{{"text", "Yes.\nOutput: A man cutting into a cake."}}.dump(), "application/json");
  });
  srv.start();
  BackendConfig cfg;
  cfg.endpoint_url = srv.url();
  cfg.seed = 5;
  cfg.max_new_tokens = 64;
  const auto o = generate_negative(kCake, GenMethod::swap_objects, cfg);
  EXPECT_EQ(o.negative_caption, std::optional<std::string>("A man cutting into a cake."));
  EXPECT_EQ(seen.at("prompt"), build_prompt(kCake, GenMethod::swap_objects));
  EXPECT_DOUBLE_EQ(seen.at("temperature").get<double>(), 0.2);
  EXPECT_DOUBLE_EQ(seen.at("top_p").get<double>(), 0.9);
  EXPECT_EQ(seen.at("max_new_tokens"), 64);
  EXPECT_EQ(seen.at("seed"), 5);
  EXPECT_EQ(seen.size(), 5u);
}

TEST(HttpBackend, MissingTextFieldIsTransportError) {
  LocalServer srv;
  srv.server().Post("/v1/generate", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"completion": "x"})", "application/json");
  });
  srv.start();
  BackendConfig cfg;
  cfg.endpoint_url = srv.url();
  cfg.max_retries = 0;
  HttpTextBackend backend(cfg);
  EXPECT_THROW(backend.complete("p"), TransportError);
}

TEST(BackendConfig, ValidationNamesField) {
  BackendConfig cfg;
  cfg.endpoint_url = "http://localhost:1";
  cfg.temperature = -1;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "backend.temperature");
  }
  BackendConfig none;
  EXPECT_THROW(none.validate(), ConfigError);
  none.replay_path = "r.jsonl";
  EXPECT_NO_THROW(none.validate());
}

TEST(Methods, NamesRoundTrip) {
  for (GenMethod m : {GenMethod::swap_objects, GenMethod::swap_attributes, GenMethod::chain_of_thought,
                      GenMethod::feedback_loop}) {
    EXPECT_EQ(parse_gen_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_gen_method("swap"), ConfigError);
}

}  // namespace
}  // namespace scramble
