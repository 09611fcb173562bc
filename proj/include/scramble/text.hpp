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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace scramble::text {

// Strips leading and trailing ASCII whitespace.
std::string trim(std::string_view s);

std::string to_lower_ascii(std::string_view s);

// Collapses every run of whitespace to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Lowercase, drop ASCII punctuation, collapse whitespace. Two captions that
// normalize to the same string are treated as the same caption.
std::string normalize_for_comparison(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

std::array<std::uint8_t, 32> sha256(std::string_view data);
std::string sha256_hex(std::string_view data);

}  // namespace scramble::text
