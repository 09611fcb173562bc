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

#include "scramble/corpus.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "json.hpp"
#include "scramble/errors.hpp"
#include "scramble/rng.hpp"
#include "scramble/text.hpp"

namespace scramble {
namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string id_to_string(const json& id) {
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<long long>());
  throw ParseError("image id must be a string or integer");
}

// Appends unless the (image_ref, caption) pair has been seen already.
class DedupSink {
 public:
  explicit DedupSink(Corpus& corpus) : corpus_(corpus) {}

  void add(CaptionRecord record) {
    if (!seen_.emplace(record.image_ref, record.caption).second) return;
    corpus_.records.push_back(std::move(record));
  }

 private:
  Corpus& corpus_;
  std::set<std::pair<std::string, std::string>> seen_;
};

std::string require_caption(const json& value, const std::string& where) {
  if (!value.is_string()) throw ParseError(where + ": caption must be a string");
  std::string caption = text::trim(value.get<std::string>());
  if (caption.empty()) throw ParseError(where + ": empty caption");
  return caption;
}

Corpus load_coco(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": offset " + std::to_string(e.byte) +
                     ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("images") ||
      !doc.contains("annotations") || !doc["images"].is_array() ||
      !doc["annotations"].is_array()) {
    throw ParseError(path.string() +
                     ": expected arrays 'images' and 'annotations'");
  }

  std::map<std::string, std::string> file_names;
  for (std::size_t n = 0; n < doc["images"].size(); ++n) {
    const json& img = doc["images"][n];
    const std::string where = path.string() + ": images[" + std::to_string(n) + "]";
    if (!img.is_object() || !img.contains("id") || !img.contains("file_name") ||
        !img["file_name"].is_string()) {
      throw ParseError(where + ": needs 'id' and string 'file_name'");
    }
    file_names[id_to_string(img["id"])] = img["file_name"].get<std::string>();
  }

  Corpus corpus;
  corpus.source_name = path.filename().string();
  DedupSink sink(corpus);
  std::map<std::string, std::size_t> per_image_count;
  for (std::size_t n = 0; n < doc["annotations"].size(); ++n) {
    const json& ann = doc["annotations"][n];
    const std::string where =
        path.string() + ": annotations[" + std::to_string(n) + "]";
    if (!ann.is_object() || !ann.contains("image_id") || !ann.contains("caption")) {
      throw ParseError(where + ": needs 'image_id' and 'caption'");
    }
    const std::string image_id = id_to_string(ann["image_id"]);
    auto it = file_names.find(image_id);
    if (it == file_names.end()) {
      throw ParseError(where + ": unknown image_id " + image_id);
    }
    const std::size_t index = per_image_count[image_id]++;
    sink.add(CaptionRecord{image_id + "#" + std::to_string(index), it->second,
                           require_caption(ann["caption"], where)});
  }
  return corpus;
}

Corpus load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Corpus corpus;
  corpus.source_name = path.filename().string();
  DedupSink sink(corpus);
  std::unordered_set<std::string> ids;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string where = path.string() + ": line " + std::to_string(lineno);
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!obj.is_object()) throw ParseError(where + ": expected a JSON object");
    for (const char* key : {"record_id", "image_ref", "caption"}) {
      if (!obj.contains(key) || !obj[key].is_string()) {
        throw ParseError(where + ": missing string field '" + key + "'");
      }
    }
    CaptionRecord record{obj["record_id"].get<std::string>(),
                         obj["image_ref"].get<std::string>(),
                         require_caption(obj["caption"], where)};
    if (!ids.insert(record.record_id).second) {
      throw ParseError(where + ": duplicate record_id '" + record.record_id + "'");
    }
    sink.add(std::move(record));
  }
  return corpus;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "coco_captions") return CorpusFormat::coco_captions;
  if (name == "caption_jsonl") return CorpusFormat::caption_jsonl;
  throw ConfigError("corpus_format", "unknown format '" + std::string(name) + "'");
}

std::string_view to_string(CorpusFormat format) {
  return format == CorpusFormat::coco_captions ? "coco_captions" : "caption_jsonl";
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  Corpus corpus = format == CorpusFormat::coco_captions ? load_coco(path)
                                                        : load_jsonl(path);
  if (corpus.empty()) throw EmptyCorpusError(path.string());
  return corpus;
}

Corpus sample_corpus(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  if (n > corpus.size()) {
    throw RangeError("sample size " + std::to_string(n) + " exceeds corpus size " +
                     std::to_string(corpus.size()));
  }
  SplitMix64 rng(seed);
  Corpus out;
  out.source_name = corpus.source_name;
  out.records.reserve(n);
  for (std::size_t pos : sample_positions(corpus.size(), n, rng)) {
    out.records.push_back(corpus.records[pos]);
  }
  return out;
}

void write_caption_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : corpus.records) {
    nlohmann::ordered_json obj;
    obj["record_id"] = r.record_id;
    obj["image_ref"] = r.image_ref;
    obj["caption"] = r.caption;
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace scramble
