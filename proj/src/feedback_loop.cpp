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

#include "scramble/feedback_loop.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <iterator>
#include <map>

#include "scramble/errors.hpp"
#include "scramble/text.hpp"

namespace scramble {
namespace {

using nlohmann::json;

// Irregular forms looked up before any suffix rule.
const std::map<std::string_view, std::string_view>& irregular_forms() {
  static const std::map<std::string_view, std::string_view> kForms = {
      {"am", "be"},       {"are", "be"},       {"been", "be"},     {"being", "be"},
      {"is", "be"},       {"was", "be"},       {"were", "be"},     {"has", "have"},
      {"had", "have"},    {"having", "have"},  {"does", "do"},     {"did", "do"},
      {"done", "do"},     {"doing", "do"},     {"men", "man"},     {"women", "woman"},
      {"children", "child"}, {"people", "person"}, {"feet", "foot"}, {"teeth", "tooth"},
      {"mice", "mouse"},  {"geese", "goose"},  {"ran", "run"},     {"sat", "sit"},
      {"stood", "stand"}, {"held", "hold"},    {"went", "go"},     {"gone", "go"},
      {"lying", "lie"},   {"lay", "lie"},      {"ate", "eat"},     {"flew", "fly"},
      {"took", "take"},   {"made", "make"},    {"rode", "ride"},   {"sitting", "sit"},
      {"ridden", "ride"}, {"leaves", "leaf"},  {"knives", "knife"}, {"wolves", "wolf"},
  };
  return kForms;
}

// Words that look inflected but are not.
const std::set<std::string_view>& invariant_words() {
  static const std::set<std::string_view> kWords = {
      "this",  "his",     "its",    "bus",     "gas",      "yes",      "thus",
      "plus",  "us",      "news",   "series",  "species",  "lens",     "always",
      "thing", "something", "nothing", "anything", "everything", "ring", "king",
      "wing",  "spring",  "string", "sing",    "bring",    "ceiling",  "morning",
      "evening", "wedding", "clothing", "during", "pudding", "bed",    "red",
      "shed",  "sled",    "hundred", "sacred", "naked",    "whereas",  "pants",
      "glasses", "scissors", "jeans", "shorts", "skis",
  };
  return kWords;
}

bool has_vowel(std::string_view s) {
  return s.find_first_of("aeiouy") != std::string_view::npos;
}

bool is_consonant(char c) { return std::isalpha(static_cast<unsigned char>(c)) && !std::strchr("aeiou", c); }

// "runn" -> "run", but "pull", "press", "buzz", "stuff" stay.
std::string undouble(std::string stem) {
  const std::size_t n = stem.size();
  if (n >= 3 && stem[n - 1] == stem[n - 2] && is_consonant(stem[n - 1]) &&
      !std::strchr("lszf", stem[n - 1])) {
    stem.pop_back();
  }
  return stem;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

struct PluralRule {
  std::string_view suffix;
  std::string_view replacement;
  std::size_t min_stem;
};

constexpr PluralRule kPluralRules[] = {
    {"ies", "y", 2}, {"sses", "ss", 1}, {"shes", "sh", 1}, {"ches", "ch", 1},
    {"xes", "x", 1}, {"zzes", "zz", 1},
};

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string format_words(const WordSet& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ", ";
    out += "'" + w + "'";
  }
  return out;
}

void append_common_tail(std::string& msg, const FeedbackIteration& cur, bool ask_retry) {
  msg += "Is the output caption visually different from the original caption? : ";
  msg += cur.distinct ? "Yes" : "No";
  msg += "\n";
  if (!cur.extra_lemmas.empty()) {
    msg += "Your output caption has extra words (lemmatized): " + format_words(cur.extra_lemmas) + ".\n";
  }
  if (!cur.missing_lemmas.empty()) {
    msg += "Your output caption has missing words (lemmatized): " + format_words(cur.missing_lemmas) + ".\n";
  }
  if (ask_retry) msg += "Can you please try again?\n";
  msg.pop_back();
}

std::string trend_line(std::string_view what, double previous, double current) {
  return "Your " + std::string(what) + " score " +
         (current > previous ? "improved to " : "degraded to ") + format_score(current) + ".\n";
}

}  // namespace

std::vector<std::string> IdentityLemmatizer::lemmatize(std::span<const std::string> tokens) const {
  return {tokens.begin(), tokens.end()};
}

std::string SuffixRuleLemmatizer::lemma(std::string_view token) {
  const std::string t(token);
  if (auto it = irregular_forms().find(t); it != irregular_forms().end()) {
    return std::string(it->second);
  }
  if (invariant_words().contains(t)) return t;

  for (const auto& rule : kPluralRules) {
    if (ends_with(t, rule.suffix) && t.size() - rule.suffix.size() >= rule.min_stem) {
      return t.substr(0, t.size() - rule.suffix.size()) + std::string(rule.replacement);
    }
  }
  if (ends_with(t, "s") && t.size() >= 4 && !ends_with(t, "ss") && !ends_with(t, "us") &&
      !ends_with(t, "is")) {
    return t.substr(0, t.size() - 1);
  }
  if (ends_with(t, "ing") && t.size() >= 6) {
    const std::string stem = t.substr(0, t.size() - 3);
    if (has_vowel(stem)) return undouble(stem);
  }
  if (ends_with(t, "ed") && t.size() >= 5 && !ends_with(t, "eed")) {
    const std::string stem = t.substr(0, t.size() - 2);
    if (has_vowel(stem)) return undouble(stem);
  }
  return t;
}

std::vector<std::string> SuffixRuleLemmatizer::lemmatize(std::span<const std::string> tokens) const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lemma(t));
  return out;
}

RemoteLemmatizer::RemoteLemmatizer(std::string endpoint_url, HttpOptions options)
    : client_(std::move(endpoint_url), options) {}

std::vector<std::string> RemoteLemmatizer::lemmatize(std::span<const std::string> tokens) const {
  if (tokens.empty()) return {};
  json body{{"texts", json::array()}};
  for (const auto& t : tokens) body["texts"].push_back(t);
  const json reply = client_.post("/v1/lemmatize", body);
  if (!reply.contains("lemmas") || !reply["lemmas"].is_array() ||
      reply["lemmas"].size() != tokens.size()) {
    throw TransportError(client_.base_url() + "/v1/lemmatize: reply 'lemmas' missing or misaligned");
  }
  std::vector<std::string> out;
  for (const auto& entry : reply["lemmas"]) {
    if (entry.is_string()) {
      out.push_back(entry.get<std::string>());
    } else if (entry.is_array()) {
      for (const auto& e : entry) out.push_back(e.get<std::string>());
    } else {
      throw TransportError(client_.base_url() + "/v1/lemmatize: malformed lemma entry");
    }
  }
  return out;
}

const Lemmatizer& default_lemmatizer() {
  static const SuffixRuleLemmatizer kDefault;
  return kDefault;
}

WordSet lemma_word_set(std::string_view text, const Lemmatizer& lemmatizer) {
  const auto tokens = text::split_whitespace(text::normalize_for_comparison(text));
  WordSet out;
  for (auto& lemma : lemmatizer.lemmatize(tokens)) {
    if (!lemma.empty()) out.insert(std::move(lemma));
  }
  return out;
}

double word_similarity(const WordSet& a, const WordSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& w : a) common += b.count(w);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::string feedback_initial_prompt(std::string_view caption) {
  std::string out =
      "Given an input caption describing a scene, your task is to rearrange words in it to make a "
      "new caption. The new caption must meet the following three requirements:\n"
      "\n"
      "1. It must describe a scene with visual differences compared to the scene described by the "
      "input caption.\n"
      "2. It must be fluent and grammatically correct.\n"
      "3. It must make logical sense.\n"
      "\n"
      "Note that you can choose to abstain and output 'NA' if it is not possible to generate a "
      "negative caption for the given input.\n"
      "\n"
      "To help with your task, I will rate your output based on grammar (0-1), plausibility (0-1), "
      "and whether there are visual differences between the original caption and your output "
      "(Yes/No).\n"
      "\n"
      "In your output, please follow the format\n"
      "\n"
      "Final Output Caption: <caption>.\n"
      "\n"
      "Input: ";
  out.append(caption);
  out.push_back('\n');
  return out;
}

std::string build_first_feedback_message(const FeedbackIteration& cur, bool ask_retry) {
  std::string msg = "FEEDBACK:\n";
  msg += "Your grammar score is " + format_score(cur.grammar) + ".\n";
  msg += "Your plausibility score is " + format_score(cur.plausibility) + ".\n";
  append_common_tail(msg, cur, ask_retry);
  return msg;
}

std::string build_feedback_message(const FeedbackIteration& prev, const FeedbackIteration& cur,
                                   bool ask_retry) {
  std::string msg = "FEEDBACK:\n";
  msg += trend_line("grammar", prev.grammar, cur.grammar);
  msg += trend_line("plausibility", prev.plausibility, cur.plausibility);
  append_common_tail(msg, cur, ask_retry);
  return msg;
}

std::string distinct_judge_prompt(std::string_view original, std::string_view candidate) {
  std::string out = "You will be shown two captions, each describing a scene.\n\n";
  out += "Original caption: ";
  out.append(original);
  out += "\nNew caption: ";
  out.append(candidate);
  out +=
      "\n\nWould an image matching the new caption look visually different from an image "
      "matching the original caption? Answer with one word: Yes or No.\nAnswer:";
  return out;
}

std::optional<bool> parse_judge_answer(std::string_view answer) {
  std::size_t i = 0;
  while (i < answer.size() && !std::isalpha(static_cast<unsigned char>(answer[i]))) ++i;
  std::size_t j = i;
  while (j < answer.size() && std::isalpha(static_cast<unsigned char>(answer[j]))) ++j;
  const std::string word = text::to_lower_ascii(answer.substr(i, j - i));
  if (word == "yes") return true;
  if (word == "no") return false;
  return std::nullopt;
}

bool LlmDistinctJudge::is_distinct(std::string_view original, std::string_view candidate) {
  return parse_judge_answer(backend_.complete(distinct_judge_prompt(original, candidate)))
      .value_or(false);
}

RemoteDistinctJudge::RemoteDistinctJudge(std::string endpoint_url, HttpOptions options)
    : client_(std::move(endpoint_url), options) {}

bool RemoteDistinctJudge::is_distinct(std::string_view original, std::string_view candidate) {
  const json reply = client_.post(
      "/v1/judge/distinct", json{{"original", original}, {"candidate", candidate}});
  if (!reply.contains("distinct") || !reply["distinct"].is_boolean()) {
    throw TransportError(client_.base_url() + "/v1/judge/distinct: reply lacks boolean 'distinct'");
  }
  return reply["distinct"].get<bool>();
}

double selection_score(const FeedbackIteration& it, std::string_view source_caption,
                       const Lemmatizer& lemmatizer) {
  const double similarity = word_similarity(lemma_word_set(source_caption, lemmatizer),
                                            lemma_word_set(it.candidate, lemmatizer));
  return (it.plausibility + it.grammar + similarity) / 3.0;
}

std::optional<FeedbackIteration> select_candidate(std::span<const FeedbackIteration> iterations,
                                                  std::string_view source_caption,
                                                  const Lemmatizer& lemmatizer) {
  std::optional<FeedbackIteration> best;
  double best_score = 0;
  for (const auto& it : iterations) {
    if (!it.distinct) continue;
    const double s = selection_score(it, source_caption, lemmatizer);
    if (!best || s > best_score || (s == best_score && it.index > best->index)) {
      best = it;
      best_score = s;
    }
  }
  return best;
}

FeedbackRun run_feedback_loop(const CaptionRecord& record, TextBackend& backend,
                              QualityScorer& scorer, DistinctJudge& judge,
                              const Lemmatizer& lemmatizer) {
  FeedbackRun run;
  run.source = record;
  run.transcript = feedback_initial_prompt(record.caption);
  const WordSet source_words = lemma_word_set(record.caption, lemmatizer);
  const std::string source_norm = text::normalize_for_comparison(record.caption);

  std::string pending_feedback;
  for (int index = 1; index <= kFeedbackIterations; ++index) {
    if (!pending_feedback.empty()) {
      run.transcript += pending_feedback + "Can you please try again?\n\n";
      pending_feedback.clear();
    }
    std::string completion;
    try {
      completion = text::trim(backend.complete(run.transcript));
    } catch (const TransportError& e) {
      run.error = e.what();
      break;
    }
    run.transcript += completion + "\n\n";

    ParsedCompletion parsed = parse_cot_response(completion);
    if (parsed.abstained()) {
      run.abstained_early = true;
      break;
    }

    FeedbackIteration it;
    it.index = index;
    it.candidate = *parsed.negative_caption;
    try {
      const QualityScores scores = scorer.score(it.candidate);
      it.grammar = scores.grammar;
      it.plausibility = scores.plausibility;
      it.distinct = judge.is_distinct(record.caption, it.candidate) &&
                    text::normalize_for_comparison(it.candidate) != source_norm;
    } catch (const TransportError& e) {
      run.error = e.what();
      break;
    }
    const WordSet words = lemma_word_set(it.candidate, lemmatizer);
    std::set_difference(words.begin(), words.end(), source_words.begin(), source_words.end(),
                        std::inserter(it.extra_lemmas, it.extra_lemmas.end()));
    std::set_difference(source_words.begin(), source_words.end(), words.begin(), words.end(),
                        std::inserter(it.missing_lemmas, it.missing_lemmas.end()));

    // The closer is appended only if another round follows.
    std::string message = run.iterations.empty()
                              ? build_first_feedback_message(it, false)
                              : build_feedback_message(run.iterations.back(), it, false);
    pending_feedback = message + "\n";
    run.iterations.push_back(std::move(it));
  }
  if (!pending_feedback.empty()) run.transcript += pending_feedback;

  run.selected = select_candidate(run.iterations, record.caption, lemmatizer);
  return run;
}

GenerationOutcome to_outcome(const FeedbackRun& run) {
  ParsedCompletion parsed;
  if (run.selected) {
    parsed.negative_caption = run.selected->candidate;
  } else if (run.error) {
    parsed.parse_note = "aborted: " + *run.error;
  } else if (!run.abstained_early || !run.iterations.empty()) {
    parsed.parse_note = "no distinct candidate";
  }
  return make_outcome(run.source, GenMethod::feedback_loop, run.transcript, std::move(parsed));
}

}  // namespace scramble
