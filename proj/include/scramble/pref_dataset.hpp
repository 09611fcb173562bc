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

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scramble/adversarial_refine.hpp"
#include "scramble/corpus.hpp"
#include "scramble/llm_gen.hpp"
#include "scramble/scoring.hpp"

namespace scramble {

// Text prompt paired with the image in every preference example. The
// trailing space is part of the string.
inline constexpr std::string_view kCaptionPrompt = "caption : ";

struct PreferenceExample {
  std::string record_id;
  std::string image_ref;
  std::string prompt{kCaptionPrompt};
  std::string chosen;
  std::string rejected;
  GenMethod method = GenMethod::swap_objects;
  double g1 = 0;
  double g2 = 0;

  friend bool operator==(const PreferenceExample&, const PreferenceExample&) = default;
};

struct AssembleResult {
  std::vector<PreferenceExample> examples;
  // Candidates whose chosen and rejected captions matched after whitespace
  // normalization.
  std::size_t dropped = 0;
};

AssembleResult assemble(std::span<const ScoredCandidate> kept);

// Writes one object per line with keys in the order record_id, image_ref,
// prompt, chosen, rejected, method, g1, g2. Writes go to a sibling temporary
// file renamed into place, so a failed write leaves no partial output.
std::size_t emit_jsonl(std::span<const PreferenceExample> examples,
                       const std::filesystem::path& path);

std::vector<PreferenceExample> read_preferences_jsonl(const std::filesystem::path& path);

struct PipelineStats {
  std::size_t start = 0;
  std::map<GenMethod, std::size_t> generated_per_method;
  std::map<GenMethod, std::size_t> post_filter_per_method;
  std::size_t final = 0;
};

// start = corpus size; generated = non-abstained outcomes per method;
// post-filter = kept counts summed over the reports (per-method or pooled).
PipelineStats compute_stats(const Corpus& corpus,
                            const std::map<GenMethod, std::vector<GenerationOutcome>>& outcomes,
                            std::span<const RefinementReport> reports);

PipelineStats compute_stats(std::size_t start,
                            const std::map<GenMethod, std::size_t>& generated,
                            std::span<const RefinementReport> reports);

nlohmann::ordered_json stats_to_json(const PipelineStats& stats);

}  // namespace scramble
