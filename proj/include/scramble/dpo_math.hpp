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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scramble::dpo {

// Sequence-level log-probabilities of the chosen (preferred) and rejected
// captions under the tuned policy and the frozen reference model.
struct DpoInputs {
  double logp_policy_chosen = 0;
  double logp_ref_chosen = 0;
  double logp_policy_rejected = 0;
  double logp_ref_rejected = 0;
};

struct DpoConfig {
  double beta = 0.1;
  double label_smoothing = 0.0;  // in [0, 0.5)

  void validate() const;  // throws DomainError
};

// Numerically stable log(1 + e^x).
double softplus(double x);
double sigmoid(double x);

// beta * [(policy_chosen - ref_chosen) - (policy_rejected - ref_rejected)].
double dpo_margin(const DpoInputs& in, const DpoConfig& cfg = {});

// -(1 - eps) log sigma(m) - eps log sigma(-m), written with softplus so that
// |m| in the hundreds stays finite. eps may be anywhere in [0, 1] here; the
// [0, 0.5) restriction applies to DpoConfig.
double dpo_loss_from_margin(double margin, double label_smoothing = 0.0);

// d loss / d margin = -(1 - eps) sigma(-m) + eps sigma(m).
double dpo_loss_grad_margin(double margin, double label_smoothing = 0.0);

double dpo_loss(const DpoInputs& in, const DpoConfig& cfg = {});

// Mean loss over a batch. Throws DomainError on an empty batch.
double dpo_batch_loss(std::span<const DpoInputs> batch, const DpoConfig& cfg = {});

// Share of examples with positive margin; exact ties count one half.
double implicit_reward_accuracy(std::span<const DpoInputs> batch, const DpoConfig& cfg = {});

struct InvariantCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Randomized self-check of the identities above (zero-margin value,
// finite-difference gradient agreement, stability at |m| = 700, monotonicity,
// label-smoothing mirror identity, beta linearity, tie rule). Backs the
// `dpo-check` subcommand.
std::vector<InvariantCheck> run_invariant_suite(std::uint64_t seed, std::size_t trials = 1000);

}  // namespace scramble::dpo
