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

#include "scramble/scoring.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "scramble/errors.hpp"
#include "scramble/text.hpp"

namespace scramble {
namespace {

using nlohmann::json;

void check_unit_interval(double v, std::string_view what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(what) + " score " + std::to_string(v) +
                      " outside [0, 1]");
  }
}

template <typename Fn>
auto with_record_context(const std::string& record_id, Fn&& fn) {
  try {
    return fn();
  } catch (const TransportError& e) {
    throw TransportError("record " + record_id + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError("record " + record_id + ": " + e.what());
  }
}

}  // namespace

ScorerMode parse_scorer_mode(std::string_view name) {
  if (name == "remote") return ScorerMode::remote;
  if (name == "mock") return ScorerMode::mock;
  throw ConfigError("scorer.mode", "expected 'remote' or 'mock', got '" +
                                       std::string(name) + "'");
}

std::string_view to_string(ScorerMode mode) {
  return mode == ScorerMode::remote ? "remote" : "mock";
}

void ScorerHandle::validate() const {
  if (mode == ScorerMode::remote && (!endpoint_url || endpoint_url->empty())) {
    throw ConfigError("scorer.endpoint_url", "required in remote mode");
  }
  if (batch_size == 0) throw ConfigError("scorer.batch_size", "must be > 0");
  if (max_retries < 0) throw ConfigError("scorer.max_retries", "must be >= 0");
}

double mock_score(std::string_view scorer_name, std::string_view text) {
  std::string material;
  material.reserve(scorer_name.size() + 1 + text.size());
  material.append(scorer_name).append("|").append(text);
  const auto digest = text::sha256(material);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[i];
  return std::ldexp(static_cast<double>(v), -64);
}

ScoreCache::ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      const json obj = json::parse(line);
      entries_[key(obj.at("scorer").get<std::string>(),
                   obj.at("text_sha256").get<std::string>())] = obj.at("score").get<double>();
    } catch (const json::exception&) {
      // Torn trailing line from an interrupted append.
    }
  }
}

std::string ScoreCache::key(std::string_view scorer, std::string_view text_sha256) {
  std::string k(scorer);
  k.push_back('|');
  k.append(text_sha256);
  return k;
}

std::optional<double> ScoreCache::lookup(std::string_view scorer,
                                         std::string_view text) const {
  const std::string k = key(scorer, text::sha256_hex(text));
  std::lock_guard lock(mutex_);
  auto it = entries_.find(k);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::store(std::string_view scorer, std::string_view text, double score) {
  const std::string digest = text::sha256_hex(text);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.insert_or_assign(key(scorer, digest), score);
  (void)it;
  (void)inserted;
  if (!path_) return;
  nlohmann::ordered_json obj;
  obj["scorer"] = std::string(scorer);
  obj["text_sha256"] = digest;
  obj["score"] = score;
  std::ofstream out(*path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to score cache " + path_->string());
  out << obj.dump() << '\n';
}

std::size_t ScoreCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

QualityScorer::QualityScorer(ScorerHandle handle) : handle_(std::move(handle)) {
  handle_.validate();
  cache_ = handle_.cache_path ? std::make_unique<ScoreCache>(*handle_.cache_path)
                              : std::make_unique<ScoreCache>();
  if (handle_.mode == ScorerMode::remote) {
    client_ = std::make_unique<JsonHttpClient>(
        *handle_.endpoint_url,
        HttpOptions{handle_.request_timeout, handle_.max_retries, std::chrono::milliseconds(200)});
  }
}

std::vector<double> QualityScorer::fetch(std::string_view scorer,
                                         std::span<const std::string> texts) {
  std::vector<double> out(texts.size());
  std::vector<std::size_t> missing;
  for (std::size_t n = 0; n < texts.size(); ++n) {
    if (auto hit = cache_->lookup(scorer, texts[n])) {
      out[n] = *hit;
    } else {
      missing.push_back(n);
    }
  }
  if (handle_.mode == ScorerMode::mock) {
    for (std::size_t n : missing) {
      out[n] = mock_score(scorer, texts[n]);
      cache_->store(scorer, texts[n], out[n]);
    }
    return out;
  }

  // Remote: dedupe, then batch.
  std::vector<std::string> unique;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t n : missing) {
    if (slot.emplace(texts[n], unique.size()).second) unique.push_back(texts[n]);
  }
  std::vector<double> fetched(unique.size());
  const std::string path = "/v1/score/" + std::string(scorer);
  for (std::size_t begin = 0; begin < unique.size(); begin += handle_.batch_size) {
    const std::size_t end = std::min(unique.size(), begin + handle_.batch_size);
    json body{{"texts", json::array()}};
    for (std::size_t n = begin; n < end; ++n) body["texts"].push_back(unique[n]);
    ++network_calls_;
    const json reply = client_->post(path, body);
    if (!reply.contains("scores") || !reply["scores"].is_array() ||
        reply["scores"].size() != end - begin) {
      throw TransportError(client_->base_url() + path +
                           ": reply 'scores' missing or misaligned");
    }
    for (std::size_t n = begin; n < end; ++n) {
      const double v = reply["scores"][n - begin].get<double>();
      check_unit_interval(v, scorer);
      fetched[n] = v;
      cache_->store(scorer, unique[n], v);
    }
  }
  for (std::size_t n : missing) out[n] = fetched[slot.at(texts[n])];
  return out;
}

QualityScores QualityScorer::score(std::string_view text) {
  const std::string t(text);
  return score_all(std::span<const std::string>(&t, 1)).front();
}

std::vector<QualityScores> QualityScorer::score_all(std::span<const std::string> texts) {
  const auto grammar = fetch(kGrammarScorer, texts);
  const auto plausibility = fetch(kPlausibilityScorer, texts);
  std::vector<QualityScores> out(texts.size());
  for (std::size_t n = 0; n < texts.size(); ++n) {
    check_unit_interval(grammar[n], kGrammarScorer);
    check_unit_interval(plausibility[n], kPlausibilityScorer);
    out[n] = QualityScores{grammar[n], plausibility[n]};
  }
  return out;
}

ScoredCandidate make_scored_candidate(const GenerationOutcome& o, QualityScores pos,
                                      QualityScores neg) {
  ScoredCandidate c;
  c.record_id = o.source.record_id;
  c.image_ref = o.source.image_ref;
  c.positive = o.source.caption;
  c.negative = o.negative_caption.value_or(o.source.caption);
  c.method = o.method;
  c.pos_scores = pos;
  c.neg_scores = neg;
  c.g1 = pos.grammar - neg.grammar;
  c.g2 = pos.plausibility - neg.plausibility;
  return c;
}

std::vector<ScoredCandidate> score_candidates(std::span<const GenerationOutcome> outcomes,
                                              QualityScorer& scorer) {
  std::vector<std::string> texts;
  texts.reserve(outcomes.size() * 2);
  for (const auto& o : outcomes) {
    if (o.abstained || !o.negative_caption) {
      throw DomainError("record " + o.source.record_id +
                        ": cannot score an abstained outcome");
    }
    texts.push_back(o.source.caption);
    texts.push_back(*o.negative_caption);
  }

  std::vector<QualityScores> scores;
  try {
    scores = scorer.score_all(texts);
  } catch (const Error&) {
    // Re-score record by record to name the offender; cached texts are free.
    for (const auto& o : outcomes) {
      with_record_context(o.source.record_id, [&] {
        scorer.score(o.source.caption);
        scorer.score(*o.negative_caption);
        return 0;
      });
    }
    throw;
  }

  std::vector<ScoredCandidate> out;
  out.reserve(outcomes.size());
  for (std::size_t n = 0; n < outcomes.size(); ++n) {
    out.push_back(make_scored_candidate(outcomes[n], scores[2 * n], scores[2 * n + 1]));
  }
  return out;
}

nlohmann::ordered_json candidate_to_json(const ScoredCandidate& c) {
  nlohmann::ordered_json obj;
  obj["record_id"] = c.record_id;
  obj["image_ref"] = c.image_ref;
  obj["positive"] = c.positive;
  obj["negative"] = c.negative;
  obj["method"] = std::string(to_string(c.method));
  obj["pos_scores"] = {{"grammar", c.pos_scores.grammar},
                       {"plausibility", c.pos_scores.plausibility}};
  obj["neg_scores"] = {{"grammar", c.neg_scores.grammar},
                       {"plausibility", c.neg_scores.plausibility}};
  obj["g1"] = c.g1;
  obj["g2"] = c.g2;
  return obj;
}

ScoredCandidate candidate_from_json(const json& obj) {
  ScoredCandidate c;
  c.record_id = obj.at("record_id").get<std::string>();
  c.image_ref = obj.at("image_ref").get<std::string>();
  c.positive = obj.at("positive").get<std::string>();
  c.negative = obj.at("negative").get<std::string>();
  c.method = parse_gen_method(obj.at("method").get<std::string>());
  c.pos_scores = {obj.at("pos_scores").at("grammar").get<double>(),
                  obj.at("pos_scores").at("plausibility").get<double>()};
  c.neg_scores = {obj.at("neg_scores").at("grammar").get<double>(),
                  obj.at("neg_scores").at("plausibility").get<double>()};
  c.g1 = obj.at("g1").get<double>();
  c.g2 = obj.at("g2").get<double>();
  return c;
}

}  // namespace scramble
