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

#include "scramble/pref_dataset.hpp"

#include <fstream>
#include <system_error>

#include "scramble/errors.hpp"
#include "scramble/text.hpp"

namespace scramble {

AssembleResult assemble(std::span<const ScoredCandidate> kept) {
  AssembleResult out;
  out.examples.reserve(kept.size());
  for (const auto& c : kept) {
    if (text::collapse_whitespace(c.positive) == text::collapse_whitespace(c.negative)) {
      ++out.dropped;
      continue;
    }
    PreferenceExample ex;
    ex.record_id = c.record_id;
    ex.image_ref = c.image_ref;
    ex.chosen = c.positive;
    ex.rejected = c.negative;
    ex.method = c.method;
    ex.g1 = c.g1;
    ex.g2 = c.g2;
    out.examples.push_back(std::move(ex));
  }
  return out;
}

std::size_t emit_jsonl(std::span<const PreferenceExample> examples,
                       const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  std::size_t written = 0;
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    for (const auto& ex : examples) {
      nlohmann::ordered_json obj;
      obj["record_id"] = ex.record_id;
      obj["image_ref"] = ex.image_ref;
      obj["prompt"] = ex.prompt;
      obj["chosen"] = ex.chosen;
      obj["rejected"] = ex.rejected;
      obj["method"] = std::string(to_string(ex.method));
      obj["g1"] = ex.g1;
      obj["g2"] = ex.g2;
      out << obj.dump() << '\n';
      if (!out) break;
      ++written;
    }
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed: " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path.string());
  }
  return written;
}

std::vector<PreferenceExample> read_preferences_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<PreferenceExample> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (text::trim(line).empty()) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      PreferenceExample ex;
      ex.record_id = obj.at("record_id").get<std::string>();
      ex.image_ref = obj.at("image_ref").get<std::string>();
      ex.prompt = obj.at("prompt").get<std::string>();
      ex.chosen = obj.at("chosen").get<std::string>();
      ex.rejected = obj.at("rejected").get<std::string>();
      ex.method = parse_gen_method(obj.at("method").get<std::string>());
      ex.g1 = obj.at("g1").get<double>();
      ex.g2 = obj.at("g2").get<double>();
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

PipelineStats compute_stats(std::size_t start, const std::map<GenMethod, std::size_t>& generated,
                            std::span<const RefinementReport> reports) {
  PipelineStats stats;
  stats.start = start;
  stats.generated_per_method = generated;
  for (const auto& [method, count] : generated) stats.post_filter_per_method[method] = 0;
  for (const auto& r : reports) {
    for (const auto& [method, count] : r.kept_per_method) {
      stats.post_filter_per_method[method] += count;
    }
  }
  for (const auto& [method, count] : stats.post_filter_per_method) stats.final += count;
  return stats;
}

PipelineStats compute_stats(const Corpus& corpus,
                            const std::map<GenMethod, std::vector<GenerationOutcome>>& outcomes,
                            std::span<const RefinementReport> reports) {
  std::map<GenMethod, std::size_t> generated;
  for (const auto& [method, list] : outcomes) {
    auto& n = generated[method];
    for (const auto& o : list) n += o.abstained ? 0 : 1;
  }
  return compute_stats(corpus.size(), generated, reports);
}

nlohmann::ordered_json stats_to_json(const PipelineStats& stats) {
  auto per_method = [](const std::map<GenMethod, std::size_t>& m) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (const auto& [method, count] : m) obj[std::string(to_string(method))] = count;
    return obj;
  };
  nlohmann::ordered_json obj;
  obj["start"] = stats.start;
  obj["initial_generation"] = per_method(stats.generated_per_method);
  obj["post_filtering"] = per_method(stats.post_filter_per_method);
  obj["final"] = stats.final;
  return obj;
}

}  // namespace scramble
