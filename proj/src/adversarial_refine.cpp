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

#include "scramble/adversarial_refine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scramble/errors.hpp"
#include "scramble/rng.hpp"

namespace scramble {
namespace {

std::size_t axis_cell(double g, std::size_t k, const char* axis) {
  if (!(g >= -1.0 && g <= 1.0)) {
    throw RangeError(std::string(axis) + " gap " + std::to_string(g) + " outside [-1, 1]");
  }
  const auto cell = static_cast<std::size_t>(std::floor((g + 1.0) * static_cast<double>(k) / 2.0));
  return std::min(cell, k - 1);
}

}  // namespace

void GridConfig::validate() const {
  if (k < 1) throw ConfigError("grid.k", "must be >= 1");
}

GridCellIndex cell_of(double g1, double g2, const GridConfig& cfg) {
  cfg.validate();
  return {axis_cell(g1, cfg.k, "grammar"), axis_cell(g2, cfg.k, "plausibility")};
}

std::vector<std::size_t> balanced_positions(std::span<const std::pair<double, double>> gaps,
                                            const GridConfig& cfg, RefinementReport* report) {
  cfg.validate();
  const std::size_t k = cfg.k;
  std::vector<std::vector<std::size_t>> members(k * k);
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    const auto c = cell_of(gaps[n].first, gaps[n].second, cfg);
    members[c.i * k + c.j].push_back(n);
  }

  SplitMix64 rng(cfg.seed);
  std::vector<std::size_t> kept;
  std::vector<std::size_t> kept_in_cell(k * k, 0);
  for (std::size_t lin = 0; lin < k * k; ++lin) {
    const GridCellIndex cell{lin / k, lin % k};
    const GridCellIndex mirror = symmetric_of(cell, k);
    const std::size_t mirror_lin = mirror.i * k + mirror.j;
    if (mirror_lin < lin) continue;  // pair already handled
    const auto& a = members[lin];
    if (mirror_lin == lin) {
      kept.insert(kept.end(), a.begin(), a.end());
      kept_in_cell[lin] = a.size();
      continue;
    }
    const auto& b = members[mirror_lin];
    const auto& smaller = a.size() <= b.size() ? a : b;
    const auto& larger = a.size() <= b.size() ? b : a;
    kept.insert(kept.end(), smaller.begin(), smaller.end());
    if (larger.size() == smaller.size()) {
      kept.insert(kept.end(), larger.begin(), larger.end());
    } else if (!smaller.empty()) {
      for (std::size_t pos : sample_positions(larger.size(), smaller.size(), rng)) {
        kept.push_back(larger[pos]);
      }
    }
    kept_in_cell[lin] = smaller.size();
    kept_in_cell[mirror_lin] = smaller.size();
  }
  std::sort(kept.begin(), kept.end());

  if (report) {
    report->k = k;
    report->seed = cfg.seed;
    report->input_count = gaps.size();
    report->kept_count = kept.size();
    report->per_cell_input.clear();
    report->per_cell_kept.clear();
    for (std::size_t lin = 0; lin < k * k; ++lin) {
      const GridCellIndex cell{lin / k, lin % k};
      if (!members[lin].empty()) report->per_cell_input[cell] = members[lin].size();
      if (kept_in_cell[lin] > 0) report->per_cell_kept[cell] = kept_in_cell[lin];
    }
  }
  return kept;
}

RefinementResult refine(std::span<const ScoredCandidate> candidates, const GridConfig& cfg) {
  std::vector<std::pair<double, double>> gaps;
  gaps.reserve(candidates.size());
  for (const auto& c : candidates) gaps.emplace_back(c.g1, c.g2);

  RefinementResult result;
  const auto positions = balanced_positions(gaps, cfg, &result.report);
  result.kept.reserve(positions.size());
  for (std::size_t pos : positions) {
    result.kept.push_back(candidates[pos]);
    ++result.report.kept_per_method[candidates[pos].method];
  }
  return result;
}

nlohmann::ordered_json report_to_json(const RefinementReport& r) {
  auto cells = [](const std::map<GridCellIndex, std::size_t>& m) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [cell, count] : m) {
      arr.push_back({{"i", cell.i}, {"j", cell.j}, {"count", count}});
    }
    return arr;
  };
  nlohmann::ordered_json obj;
  obj["k"] = r.k;
  obj["seed"] = r.seed;
  obj["input_count"] = r.input_count;
  obj["kept_count"] = r.kept_count;
  nlohmann::ordered_json per_method = nlohmann::ordered_json::object();
  for (const auto& [method, count] : r.kept_per_method) {
    per_method[std::string(to_string(method))] = count;
  }
  obj["kept_per_method"] = per_method;
  obj["per_cell_input"] = cells(r.per_cell_input);
  obj["per_cell_kept"] = cells(r.per_cell_kept);
  return obj;
}

RefinementReport report_from_json(const nlohmann::json& obj) {
  RefinementReport r;
  r.k = obj.at("k").get<std::size_t>();
  r.seed = obj.at("seed").get<std::uint64_t>();
  r.input_count = obj.at("input_count").get<std::size_t>();
  r.kept_count = obj.at("kept_count").get<std::size_t>();
  for (const auto& [name, count] : obj.at("kept_per_method").items()) {
    r.kept_per_method[parse_gen_method(name)] = count.get<std::size_t>();
  }
  auto read_cells = [](const nlohmann::json& arr, std::map<GridCellIndex, std::size_t>& out) {
    for (const auto& e : arr) {
      out[{e.at("i").get<std::size_t>(), e.at("j").get<std::size_t>()}] =
          e.at("count").get<std::size_t>();
    }
  };
  read_cells(obj.at("per_cell_input"), r.per_cell_input);
  read_cells(obj.at("per_cell_kept"), r.per_cell_kept);
  return r;
}

}  // namespace scramble
