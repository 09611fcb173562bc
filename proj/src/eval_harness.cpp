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

#include "scramble/eval_harness.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>

#include "scramble/errors.hpp"
#include "scramble/parallel.hpp"
#include "scramble/text.hpp"

namespace scramble::eval {
namespace {

using nlohmann::json;

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ": line " + std::to_string(lineno);
    try {
      fn(json::parse(line), where);
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
}

std::string id_field(const json& obj) {
  const json& id = obj.contains("example_id") ? obj.at("example_id") : obj.at("id");
  return id.is_string() ? id.get<std::string>() : id.dump();
}

}  // namespace

RemoteAffinityClient::RemoteAffinityClient(std::string endpoint_url, HttpOptions options)
    : client_(std::move(endpoint_url), options) {}

double RemoteAffinityClient::affinity(const std::string& image_ref, const std::string& caption) {
  const json reply =
      client_.post("/v1/vqascore", json{{"image_ref", image_ref}, {"caption", caption}});
  if (!reply.contains("score") || !reply["score"].is_number()) {
    throw TransportError(client_.base_url() + "/v1/vqascore: reply lacks numeric 'score'");
  }
  return reply["score"].get<double>();
}

MockAffinityClient::MockAffinityClient(std::map<std::pair<std::string, std::string>, double> table)
    : table_(std::move(table)) {}

MockAffinityClient MockAffinityClient::from_file(const std::filesystem::path& path) {
  std::map<std::pair<std::string, std::string>, double> table;
  for_each_jsonl(path, [&](const json& obj, const std::string&) {
    table[{obj.at("image_ref").get<std::string>(), obj.at("caption").get<std::string>()}] =
        obj.at("score").get<double>();
  });
  return MockAffinityClient(std::move(table));
}

double mock_affinity(std::string_view image_ref, std::string_view caption) {
  std::string material = "vqascore|";
  material.append(image_ref).append("|").append(caption);
  const auto digest = text::sha256(material);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[i];
  return std::ldexp(static_cast<double>(v), -64);
}

double MockAffinityClient::affinity(const std::string& image_ref, const std::string& caption) {
  if (auto it = table_.find({image_ref, caption}); it != table_.end()) return it->second;
  return mock_affinity(image_ref, caption);
}

RemoteAnswerClient::RemoteAnswerClient(std::string endpoint_url, HttpOptions options)
    : client_(std::move(endpoint_url), options) {}

std::string RemoteAnswerClient::answer(const std::string& image_ref, const std::string& prompt) {
  const json reply = client_.post("/v1/answer", json{{"image_ref", image_ref}, {"prompt", prompt}});
  if (!reply.contains("text") || !reply["text"].is_string()) {
    throw TransportError(client_.base_url() + "/v1/answer: reply lacks string 'text'");
  }
  return reply["text"].get<std::string>();
}

MockAnswerClient::MockAnswerClient(std::map<std::string, std::string> by_image, std::string fallback)
    : by_image_(std::move(by_image)), fallback_(std::move(fallback)) {}

MockAnswerClient MockAnswerClient::from_file(const std::filesystem::path& path) {
  std::map<std::string, std::string> table;
  for_each_jsonl(path, [&](const json& obj, const std::string&) {
    table[obj.at("image_ref").get<std::string>()] = obj.at("text").get<std::string>();
  });
  return MockAnswerClient(std::move(table));
}

std::string MockAnswerClient::answer(const std::string& image_ref, const std::string&) {
  auto it = by_image_.find(image_ref);
  return it == by_image_.end() ? fallback_ : it->second;
}

std::string vqascore_question(std::string_view caption) {
  std::string q = "Does this image show ";
  q.append(caption);
  q.push_back('?');
  return q;
}

double vqascore(const std::string& image_ref, const std::string& caption, AffinityClient& client) {
  const double v = client.affinity(image_ref, caption);
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError("affinity " + std::to_string(v) + " outside [0, 1] for (" + image_ref +
                      ", " + caption + ")");
  }
  return v;
}

MatchScores match_scores(const AffinityMatrix& m) {
  const auto& s = m.s;
  MatchScores out;
  out.text_correct = s[0][0] > s[1][0] && s[1][1] > s[0][1];
  out.image_correct = s[0][0] > s[0][1] && s[1][1] > s[1][0];
  out.group_correct = out.text_correct && out.image_correct;
  return out;
}

MatchReport eval_matching(std::span<const MatchExample> benchmark, AffinityClient& client,
                          const EvalOptions& options) {
  if (benchmark.empty()) throw DomainError("empty matching benchmark");

  std::mutex cache_mutex;
  std::map<std::pair<std::string, std::string>, double> cache;
  std::atomic<std::size_t> calls{0};
  auto cached = [&](const std::string& image, const std::string& caption) {
    {
      std::lock_guard lock(cache_mutex);
      if (auto it = cache.find({image, caption}); it != cache.end()) return it->second;
    }
    ++calls;
    const double v = vqascore(image, caption, client);
    std::lock_guard lock(cache_mutex);
    cache.emplace(std::make_pair(image, caption), v);
    return v;
  };

  MatchReport report;
  report.rows.resize(benchmark.size());
  parallel_for(benchmark.size(), options.concurrency, [&](std::size_t n) {
    const MatchExample& ex = benchmark[n];
    MatchRow& row = report.rows[n];
    row.example_id = ex.example_id;
    row.tag = ex.tag;
    try {
      AffinityMatrix m;
      for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 2; ++i) m.s[c][i] = cached(ex.image_refs[i], ex.captions[c]);
      }
      row.affinities = m;
      row.scores = match_scores(m);
    } catch (const Error& e) {
      row.error = "example " + ex.example_id + ": " + e.what();
    }
  });

  std::size_t text = 0, image = 0, group = 0;
  for (const auto& row : report.rows) {
    if (row.error) {
      ++report.summary.errored;
      continue;
    }
    ++report.summary.evaluated;
    text += row.scores.text_correct;
    image += row.scores.image_correct;
    group += row.scores.group_correct;
  }
  if (report.summary.evaluated > 0) {
    const double n = static_cast<double>(report.summary.evaluated);
    report.summary.text_acc = static_cast<double>(text) / n;
    report.summary.image_acc = static_cast<double>(image) / n;
    report.summary.group_acc = static_cast<double>(group) / n;
  }
  report.affinity_calls = calls;
  return report;
}

std::string two_choice_prompt(const TwoChoiceExample& ex) {
  return ex.question + "\nA. " + ex.option_a + "\nB. " + ex.option_b +
         "\nAnswer with the letter of the correct option.";
}

std::optional<char> extract_choice_letter(std::string_view response) {
  for (char c : response) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return std::nullopt;
}

TwoChoiceReport eval_two_choice(std::span<const TwoChoiceExample> benchmark, AnswerClient& client,
                                const EvalOptions& options) {
  if (benchmark.empty()) throw DomainError("empty two-choice benchmark");
  TwoChoiceReport report;
  report.rows.resize(benchmark.size());
  parallel_for(benchmark.size(), options.concurrency, [&](std::size_t n) {
    const TwoChoiceExample& ex = benchmark[n];
    TwoChoiceRow& row = report.rows[n];
    row.example_id = ex.example_id;
    try {
      row.response = client.answer(ex.image_ref, two_choice_prompt(ex));
    } catch (const Error& e) {
      row.error = "example " + ex.example_id + ": " + e.what();
      return;
    }
    row.letter = extract_choice_letter(row.response);
    if (!row.letter || (*row.letter != 'A' && *row.letter != 'B')) {
      row.format_failure = true;
      return;
    }
    row.correct = (*row.letter == 'A') == (ex.answer == Choice::A);
  });

  std::size_t correct = 0;
  for (const auto& row : report.rows) {
    if (row.error) {
      ++report.summary.errored;
      continue;
    }
    ++report.summary.evaluated;
    correct += row.correct;
    report.summary.format_failures += row.format_failure;
  }
  if (report.summary.evaluated > 0) {
    report.summary.accuracy =
        static_cast<double>(correct) / static_cast<double>(report.summary.evaluated);
  }
  return report;
}

std::vector<MatchExample> load_match_benchmark(const std::filesystem::path& path) {
  std::vector<MatchExample> out;
  for_each_jsonl(path, [&](const json& obj, const std::string& where) {
    MatchExample ex;
    ex.example_id = id_field(obj);
    if (obj.contains("captions")) {
      const auto& caps = obj.at("captions");
      const auto& imgs = obj.at("image_refs");
      if (caps.size() != 2 || imgs.size() != 2) {
        throw ParseError(where + ": 'captions' and 'image_refs' need exactly 2 entries");
      }
      for (int n = 0; n < 2; ++n) {
        ex.captions[n] = caps[n].get<std::string>();
        ex.image_refs[n] = imgs[n].get<std::string>();
      }
    } else {
      for (int n = 0; n < 2; ++n) {
        const std::string suffix = "_" + std::to_string(n);
        ex.captions[n] = obj.at("caption" + suffix).get<std::string>();
        ex.image_refs[n] = obj.at("image" + suffix).get<std::string>();
      }
    }
    if (auto it = obj.find("tag"); it != obj.end() && it->is_string()) {
      ex.tag = it->get<std::string>();
    }
    if (text::trim(ex.captions[0]).empty() || text::trim(ex.captions[1]).empty() ||
        ex.captions[0] == ex.captions[1]) {
      throw ParseError(where + ": captions must be non-empty and distinct");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<TwoChoiceExample> load_two_choice_benchmark(const std::filesystem::path& path) {
  std::vector<TwoChoiceExample> out;
  for_each_jsonl(path, [&](const json& obj, const std::string& where) {
    TwoChoiceExample ex;
    ex.example_id = id_field(obj);
    ex.image_ref = obj.at("image_ref").get<std::string>();
    ex.question = obj.at("question").get<std::string>();
    ex.option_a = obj.at("option_a").get<std::string>();
    ex.option_b = obj.at("option_b").get<std::string>();
    const std::string answer = text::to_lower_ascii(text::trim(obj.at("answer").get<std::string>()));
    if (answer == "a") {
      ex.answer = Choice::A;
    } else if (answer == "b") {
      ex.answer = Choice::B;
    } else {
      throw ParseError(where + ": answer must be 'A' or 'B'");
    }
    if (ex.option_a == ex.option_b) throw ParseError(where + ": options must be distinct");
    out.push_back(std::move(ex));
  });
  return out;
}

nlohmann::ordered_json report_to_json(const MatchReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["example_id"] = row.example_id;
    r["tag"] = row.tag ? nlohmann::ordered_json(*row.tag) : nlohmann::ordered_json(nullptr);
    if (row.affinities) {
      const auto& s = row.affinities->s;
      r["affinities"] = {{s[0][0], s[0][1]}, {s[1][0], s[1][1]}};
    } else {
      r["affinities"] = nullptr;
    }
    r["text_correct"] = row.scores.text_correct;
    r["image_correct"] = row.scores.image_correct;
    r["group_correct"] = row.scores.group_correct;
    r["error"] = row.error ? nlohmann::ordered_json(*row.error) : nlohmann::ordered_json(nullptr);
    rows.push_back(std::move(r));
  }
  nlohmann::ordered_json obj;
  obj["kind"] = "match";
  obj["summary"] = {{"text_acc", report.summary.text_acc},
                    {"image_acc", report.summary.image_acc},
                    {"group_acc", report.summary.group_acc},
                    {"evaluated", report.summary.evaluated},
                    {"errored", report.summary.errored}};
  obj["examples"] = std::move(rows);
  return obj;
}

nlohmann::ordered_json report_to_json(const TwoChoiceReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["example_id"] = row.example_id;
    r["response"] = row.response;
    r["letter"] = row.letter ? nlohmann::ordered_json(std::string(1, *row.letter))
                             : nlohmann::ordered_json(nullptr);
    r["correct"] = row.correct;
    r["format_failure"] = row.format_failure;
    r["error"] = row.error ? nlohmann::ordered_json(*row.error) : nlohmann::ordered_json(nullptr);
    rows.push_back(std::move(r));
  }
  nlohmann::ordered_json obj;
  obj["kind"] = "two_choice";
  obj["summary"] = {{"accuracy", report.summary.accuracy},
                    {"evaluated", report.summary.evaluated},
                    {"format_failures", report.summary.format_failures},
                    {"errored", report.summary.errored}};
  obj["examples"] = std::move(rows);
  return obj;
}

}  // namespace scramble::eval
