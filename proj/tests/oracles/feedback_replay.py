#!/usr/bin/env python3
# Copyright 2026 The Scramble Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Builds the replay and score-cache fixtures for the horse/cart feedback
conversation from its golden transcript.

Each backend call sees the conversation up to (not including) the next
"Final Output Caption:" line; lemma lists are rewritten in sorted order.
The distinctness judge shares the backend, so its prompts are included too.

usage: feedback_replay.py <golden transcript> <replay out> <score cache out>
"""
import hashlib
import json
import re
import sys

SOURCE = "A white horse pulling a cart down a street."
JUDGE = ["No", "No", "Yes", "Yes", "Yes"]
# Displayed at two decimals; the hidden digits decide improved/degraded.
GRAMMAR = [0.9912, 0.9880, 0.9810, 0.9878, 0.9901]
PLAUSIBILITY = [0.56, 0.88, 0.24, 0.34, 0.45]


def sha(s):
    return hashlib.sha256(s.encode("utf-8")).hexdigest()


def sort_lemmas(line):
    m = re.match(r"^(Your output caption has (?:extra|missing) words \(lemmatized\): )(.*)\.$", line)
    if not m:
        return line
    words = sorted(w.strip().strip("'") for w in m.group(2).split(","))
    return m.group(1) + ", ".join(f"'{w}'" for w in words) + "."


def judge_prompt(original, candidate):
    return ("You will be shown two captions, each describing a scene.\n\n"
            f"Original caption: {original}\nNew caption: {candidate}\n\n"
            "Would an image matching the new caption look visually different from an image "
            "matching the original caption? Answer with one word: Yes or No.\nAnswer:")


def main(golden, replay_out, cache_out):
    text = open(golden, encoding="utf-8").read()
    lines = [sort_lemmas(l) for l in text.split("\n")]
    text = "\n".join(lines)
    marker = "Final Output Caption: "
    entries, candidates = [], []
    pos = text.index("\nInput: ")
    while True:
        i = text.find("\n" + marker, pos)
        if i < 0:
            break
        start = i + 1
        end = text.index("\n", start)
        completion = text[start:end]
        entries.append({"prompt_hash": sha(text[:start]), "text": completion})
        candidates.append(completion[len(marker):])
        pos = end
    assert len(candidates) == 5, candidates
    for cand, answer in zip(candidates, JUDGE):
        entries.append({"prompt_hash": sha(judge_prompt(SOURCE, cand)), "text": answer})
    with open(replay_out, "w", encoding="utf-8") as f:
        for e in entries:
            f.write(json.dumps(e) + "\n")
    with open(cache_out, "w", encoding="utf-8") as f:
        for cand, g, p in zip(candidates, GRAMMAR, PLAUSIBILITY):
            f.write(json.dumps({"scorer": "grammar", "text_sha256": sha(cand), "score": g}) + "\n")
            f.write(json.dumps({"scorer": "plausibility", "text_sha256": sha(cand), "score": p}) + "\n")
    with open(golden + ".sorted", "w", encoding="utf-8") as f:
        f.write(text)


if __name__ == "__main__":
    main(*sys.argv[1:4])
