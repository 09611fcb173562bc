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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scramble/scoring.hpp"

namespace scramble {

struct GridConfig {
  std::size_t k = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

// i indexes the grammar-gap axis, j the plausibility-gap axis.
struct GridCellIndex {
  std::size_t i = 0;
  std::size_t j = 0;

  friend auto operator<=>(const GridCellIndex&, const GridCellIndex&) = default;
};

// Mirror cell through the origin: (k-1-i, k-1-j). An involution.
constexpr GridCellIndex symmetric_of(GridCellIndex c, std::size_t k) {
  return {k - 1 - c.i, k - 1 - c.j};
}

// Cell holding the gap point. Cells are half-open [lo, hi) except the last
// on each axis, which also takes the value 1. Throws RangeError for values
// outside [-1, 1] or NaN.
GridCellIndex cell_of(double g1, double g2, const GridConfig& cfg);

struct RefinementReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t input_count = 0;
  std::size_t kept_count = 0;
  std::map<GridCellIndex, std::size_t> per_cell_input;
  std::map<GridCellIndex, std::size_t> per_cell_kept;  // non-empty cells only
  std::map<GenMethod, std::size_t> kept_per_method;
};

// Balances a set of gap points cell pair by cell pair. For each pair of
// distinct mirror cells the smaller keeps every member and the larger keeps a
// uniform sample of the same size; with odd k the centre cell keeps all of
// its members. Returns the kept positions in ascending order.
//
// Pairs are visited in increasing row-major index of their lower cell, and
// only pairs needing a sample draw from the generator, so results depend on
// the input order and seed alone.
std::vector<std::size_t> balanced_positions(std::span<const std::pair<double, double>> gaps,
                                            const GridConfig& cfg,
                                            RefinementReport* report = nullptr);

struct RefinementResult {
  std::vector<ScoredCandidate> kept;
  RefinementReport report;
};

RefinementResult refine(std::span<const ScoredCandidate> candidates, const GridConfig& cfg);

nlohmann::ordered_json report_to_json(const RefinementReport& report);
RefinementReport report_from_json(const nlohmann::json& obj);

}  // namespace scramble
