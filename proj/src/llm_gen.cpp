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

#include "scramble/llm_gen.hpp"

#include <cctype>
#include <fstream>
#include <mutex>

#include "scramble/errors.hpp"
#include "scramble/text.hpp"

namespace scramble {
namespace {

using nlohmann::json;

std::string_view line_at(std::string_view s, std::size_t pos) {
  auto end = s.find('\n', pos);
  return s.substr(pos, end == std::string_view::npos ? s.size() - pos : end - pos);
}

std::string strip_quotes(std::string value) {
  auto is_quote = [](char c) { return c == '"' || c == '\'' || c == '`'; };
  while (value.size() >= 2 && is_quote(value.front()) && value.front() == value.back()) {
    value = text::trim(std::string_view(value).substr(1, value.size() - 2));
  }
  return value;
}

bool is_declared_na(std::string_view value) {
  std::string v = text::to_lower_ascii(text::trim(value));
  while (!v.empty() && (v.back() == '.' || v.back() == '\'' || v.back() == '"')) v.pop_back();
  while (!v.empty() && (v.front() == '\'' || v.front() == '"')) v.erase(v.begin());
  return v == "na" || v == "n/a";
}

// Lowercased first run of ASCII letters, or empty.
std::string first_word(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && !std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
  std::size_t j = i;
  while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
  return text::to_lower_ascii(s.substr(i, j - i));
}

ParsedCompletion from_value(std::string value, std::string_view marker) {
  ParsedCompletion parsed;
  value = strip_quotes(text::trim(value));
  if (is_declared_na(value)) return parsed;
  if (value.empty()) {
    parsed.parse_note = "empty value after '" + std::string(marker) + "'";
    return parsed;
  }
  parsed.negative_caption = std::move(value);
  return parsed;
}

// Offset just past the last case-insensitive "final output caption" followed
// by optional blanks and ':'.
std::optional<std::size_t> last_cot_marker(std::string_view t) {
  static constexpr std::string_view kPhrase = "final output caption";
  const std::string lower = text::to_lower_ascii(t);
  std::optional<std::size_t> found;
  for (auto pos = lower.find(kPhrase); pos != std::string::npos;
       pos = lower.find(kPhrase, pos + 1)) {
    std::size_t q = pos + kPhrase.size();
    while (q < lower.size() && (lower[q] == ' ' || lower[q] == '\t')) ++q;
    if (q < lower.size() && lower[q] == ':') found = q + 1;
  }
  return found;
}

}  // namespace

std::string_view to_string(GenMethod method) {
  switch (method) {
    case GenMethod::swap_objects: return "swap_objects";
    case GenMethod::swap_attributes: return "swap_attributes";
    case GenMethod::chain_of_thought: return "chain_of_thought";
    case GenMethod::feedback_loop: return "feedback_loop";
  }
  return "unknown";
}

GenMethod parse_gen_method(std::string_view name) {
  for (auto m : {GenMethod::swap_objects, GenMethod::swap_attributes,
                 GenMethod::chain_of_thought, GenMethod::feedback_loop}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("methods", "unknown generation method '" + std::string(name) + "'");
}

void BackendConfig::validate() const {
  if (!(temperature >= 0)) throw ConfigError("backend.temperature", "must be >= 0");
  if (!(top_p > 0 && top_p <= 1)) throw ConfigError("backend.top_p", "must be in (0, 1]");
  if (max_new_tokens <= 0) throw ConfigError("backend.max_new_tokens", "must be > 0");
  if (max_retries < 0) throw ConfigError("backend.max_retries", "must be >= 0");
  if (request_timeout.count() <= 0) {
    throw ConfigError("backend.request_timeout_ms", "must be > 0");
  }
  if (!replay_path && endpoint_url.empty()) {
    throw ConfigError("backend.endpoint_url", "required unless replay_path is set");
  }
}

HttpTextBackend::HttpTextBackend(const BackendConfig& config)
    : config_(config),
      client_(config.endpoint_url,
              HttpOptions{config.request_timeout, config.max_retries, std::chrono::milliseconds(200)}) {}

std::string HttpTextBackend::complete(const std::string& prompt) {
  ++calls_;
  json body{{"prompt", prompt},
            {"temperature", config_.temperature},
            {"top_p", config_.top_p},
            {"max_new_tokens", config_.max_new_tokens},
            {"seed", config_.seed ? json(*config_.seed) : json(nullptr)}};
  const json reply = client_.post("/v1/generate", body);
  if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
    throw TransportError(client_.base_url() + "/v1/generate: reply lacks string 'text'");
  }
  return reply["text"].get<std::string>();
}

std::string prompt_hash(std::string_view prompt) { return text::sha256_hex(prompt); }

ReplayTextBackend::ReplayTextBackend(std::map<std::string, std::string> by_hash,
                                     std::string fallback)
    : by_hash_(std::move(by_hash)), fallback_(std::move(fallback)) {}

std::unique_ptr<ReplayTextBackend> ReplayTextBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open replay file " + path.string());
  std::map<std::string, std::string> entries;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (text::trim(line).empty()) continue;
    try {
      const json obj = json::parse(line);
      entries[obj.at("prompt_hash").get<std::string>()] = obj.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return std::make_unique<ReplayTextBackend>(std::move(entries));
}

std::string ReplayTextBackend::complete(const std::string& prompt) {
  ++calls_;
  auto it = by_hash_.find(prompt_hash(prompt));
  if (it == by_hash_.end()) {
    ++misses_;
    return fallback_;
  }
  return it->second;
}

std::unique_ptr<TextBackend> make_text_backend(const BackendConfig& config) {
  config.validate();
  if (config.replay_path) {
    return ReplayTextBackend::from_file(*config.replay_path);
  }
  return std::make_unique<HttpTextBackend>(config);
}

void append_replay_entry(const std::filesystem::path& path, std::string_view prompt,
                         std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot write " + path.string());
  nlohmann::ordered_json obj;
  obj["prompt_hash"] = prompt_hash(prompt);
  obj["text"] = std::string(text);
  out << obj.dump() << '\n';
}

ParsedCompletion parse_swap_response(std::string_view transcript) {
  static constexpr std::string_view kMarker = "Output:";
  const bool declined = first_word(transcript) == "no";
  const auto pos = transcript.rfind(kMarker);
  if (declined) return {};
  if (pos == std::string_view::npos) {
    return ParsedCompletion{std::nullopt, "no 'Output:' marker and no abstention"};
  }
  return from_value(std::string(line_at(transcript, pos + kMarker.size())), kMarker);
}

ParsedCompletion parse_cot_response(std::string_view transcript) {
  const auto pos = last_cot_marker(transcript);
  if (!pos) {
    return ParsedCompletion{std::nullopt, "no 'Final Output Caption:' marker"};
  }
  std::string value = text::trim(line_at(transcript, *pos));
  if (value.empty()) {
    // Caption on the following line.
    std::size_t next = transcript.find('\n', *pos);
    while (value.empty() && next != std::string_view::npos) {
      value = text::trim(line_at(transcript, next + 1));
      next = transcript.find('\n', next + 1);
    }
  }
  return from_value(std::move(value), "Final Output Caption:");
}

GenerationOutcome make_outcome(const CaptionRecord& source, GenMethod method,
                               std::string transcript, ParsedCompletion parsed) {
  GenerationOutcome out;
  out.source = source;
  out.method = method;
  out.raw_transcript = std::move(transcript);
  out.parse_note = std::move(parsed.parse_note);
  if (parsed.negative_caption) {
    const std::string neg = text::normalize_for_comparison(*parsed.negative_caption);
    if (neg.empty()) {
      out.parse_note = "negative caption is empty after normalization";
    } else if (neg == text::normalize_for_comparison(source.caption)) {
      out.parse_note = "negative caption equals the positive after normalization";
    } else {
      out.negative_caption = std::move(parsed.negative_caption);
    }
  }
  out.abstained = !out.negative_caption.has_value();
  return out;
}

GenerationOutcome generate_negative(const CaptionRecord& record, GenMethod method,
                                    TextBackend& backend) {
  const std::string prompt = build_prompt(record, method);
  std::string transcript = backend.complete(prompt);
  ParsedCompletion parsed = method == GenMethod::chain_of_thought
                                ? parse_cot_response(transcript)
                                : parse_swap_response(transcript);
  return make_outcome(record, method, std::move(transcript), std::move(parsed));
}

GenerationOutcome generate_negative(const CaptionRecord& record, GenMethod method,
                                    const BackendConfig& backend) {
  auto client = make_text_backend(backend);
  return generate_negative(record, method, *client);
}

nlohmann::ordered_json outcome_to_json(const GenerationOutcome& o) {
  nlohmann::ordered_json obj;
  obj["record_id"] = o.source.record_id;
  obj["image_ref"] = o.source.image_ref;
  obj["caption"] = o.source.caption;
  obj["method"] = std::string(to_string(o.method));
  obj["abstained"] = o.abstained;
  obj["negative_caption"] = o.negative_caption ? nlohmann::ordered_json(*o.negative_caption)
                                               : nlohmann::ordered_json(nullptr);
  obj["parse_note"] = o.parse_note ? nlohmann::ordered_json(*o.parse_note)
                                   : nlohmann::ordered_json(nullptr);
  obj["raw_transcript"] = o.raw_transcript;
  return obj;
}

GenerationOutcome outcome_from_json(const json& obj) {
  GenerationOutcome o;
  o.source.record_id = obj.at("record_id").get<std::string>();
  o.source.image_ref = obj.at("image_ref").get<std::string>();
  o.source.caption = obj.at("caption").get<std::string>();
  o.method = parse_gen_method(obj.at("method").get<std::string>());
  if (const auto& neg = obj.at("negative_caption"); !neg.is_null()) {
    o.negative_caption = neg.get<std::string>();
  }
  if (auto it = obj.find("parse_note"); it != obj.end() && !it->is_null()) {
    o.parse_note = it->get<std::string>();
  }
  o.raw_transcript = obj.value("raw_transcript", std::string());
  o.abstained = !o.negative_caption.has_value();
  if (obj.value("abstained", o.abstained) != o.abstained) {
    throw ParseError("outcome " + o.source.record_id +
                     ": 'abstained' disagrees with 'negative_caption'");
  }
  return o;
}

}  // namespace scramble
