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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace scramble {

// One positive image-caption pair. image_ref is opaque here: it is handed to
// model services untouched and never opened.
struct CaptionRecord {
  std::string record_id;
  std::string image_ref;
  std::string caption;

  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

// Immutable after load; safe to share read-only between workers.
struct Corpus {
  std::vector<CaptionRecord> records;
  std::string source_name;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

enum class CorpusFormat {
  coco_captions,  // {"images": [{id, file_name}], "annotations": [{image_id, caption}]}
  caption_jsonl,  // one {"record_id", "image_ref", "caption"} per line
};

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format);

// Loads a corpus. COCO annotations become records with id
// "<image_id>#<n>", n counting that image's annotations in file order from 0.
// Captions are trimmed; exact duplicate (image_ref, caption) pairs keep only
// the first occurrence.
//
// Throws ParseError (naming the line or byte offset) on malformed input and
// EmptyCorpusError when nothing survives.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

// Uniform sample of n records without replacement, stable for a fixed seed;
// the result keeps the input's relative order. Throws RangeError when
// n > corpus.size().
Corpus sample_corpus(const Corpus& corpus, std::size_t n, std::uint64_t seed);

// Writes caption JSONL readable by load_corpus(..., caption_jsonl).
void write_caption_jsonl(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace scramble
