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

#include "scramble/dpo_math.hpp"

#include <cmath>
#include <sstream>

#include "scramble/errors.hpp"
#include "scramble/rng.hpp"

namespace scramble::dpo {
namespace {

void require_finite(const DpoInputs& in) {
  for (double v : {in.logp_policy_chosen, in.logp_ref_chosen, in.logp_policy_rejected,
                   in.logp_ref_rejected}) {
    if (!std::isfinite(v)) throw DomainError("DPO inputs must be finite");
  }
}

double uniform(SplitMix64& rng, double lo, double hi) {
  const double u = std::ldexp(static_cast<double>(rng.next() >> 11), -53);
  return lo + (hi - lo) * u;
}

}  // namespace

void DpoConfig::validate() const {
  if (!(beta > 0) || !std::isfinite(beta)) throw DomainError("beta must be > 0");
  if (!(label_smoothing >= 0 && label_smoothing < 0.5)) {
    throw DomainError("label_smoothing must be in [0, 0.5)");
  }
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dpo_margin(const DpoInputs& in, const DpoConfig& cfg) {
  cfg.validate();
  require_finite(in);
  return cfg.beta * ((in.logp_policy_chosen - in.logp_ref_chosen) -
                     (in.logp_policy_rejected - in.logp_ref_rejected));
}

double dpo_loss_from_margin(double m, double eps) {
  if (!std::isfinite(m)) throw DomainError("margin must be finite");
  // -log sigma(m) = softplus(-m)
  return (1.0 - eps) * softplus(-m) + eps * softplus(m);
}

double dpo_loss_grad_margin(double m, double eps) {
  return -(1.0 - eps) * sigmoid(-m) + eps * sigmoid(m);
}

double dpo_loss(const DpoInputs& in, const DpoConfig& cfg) {
  return dpo_loss_from_margin(dpo_margin(in, cfg), cfg.label_smoothing);
}

double dpo_batch_loss(std::span<const DpoInputs> batch, const DpoConfig& cfg) {
  if (batch.empty()) throw DomainError("empty batch");
  double sum = 0;
  for (const auto& in : batch) sum += dpo_loss(in, cfg);
  return sum / static_cast<double>(batch.size());
}

double implicit_reward_accuracy(std::span<const DpoInputs> batch, const DpoConfig& cfg) {
  if (batch.empty()) throw DomainError("empty batch");
  double hits = 0;
  for (const auto& in : batch) {
    const double m = dpo_margin(in, cfg);
    hits += m > 0 ? 1.0 : (m == 0 ? 0.5 : 0.0);
  }
  return hits / static_cast<double>(batch.size());
}

std::vector<InvariantCheck> run_invariant_suite(std::uint64_t seed, std::size_t trials) {
  SplitMix64 rng(seed);
  std::vector<InvariantCheck> checks;
  auto record = [&](std::string name, bool ok, std::string detail = {}) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  };

  {
    const double loss = dpo_loss_from_margin(0.0);
    record("zero margin loss equals ln 2", std::abs(loss - std::log(2.0)) <= 1e-12);
  }
  {
    double worst = 0;
    double worst_m = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double m = uniform(rng, -10, 10);
      const double h = 1e-5;
      const double fd = (dpo_loss_from_margin(m + h) - dpo_loss_from_margin(m - h)) / (2 * h);
      const double analytic = sigmoid(m) - 1.0;
      const double rel = std::abs(fd - analytic) / std::abs(analytic);
      if (rel > worst) {
        worst = rel;
        worst_m = m;
      }
    }
    std::ostringstream detail;
    detail << "max relative error " << worst << " at m=" << worst_m;
    record("gradient matches central differences", worst <= 1e-6, detail.str());
  }
  {
    bool ok = true;
    for (double m : {700.0, -700.0}) {
      for (double eps : {0.0, 0.1}) {
        const double loss = dpo_loss_from_margin(m, eps);
        ok = ok && std::isfinite(loss) && loss >= 0;
      }
    }
    record("finite loss at |m| = 700", ok);
  }
  {
    bool ok = true;
    for (std::size_t t = 0; t < trials && ok; ++t) {
      double a = uniform(rng, -50, 50);
      double b = uniform(rng, -50, 50);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      ok = dpo_loss_from_margin(a) > dpo_loss_from_margin(b);
    }
    // With smoothing the loss bottoms out at m* = ln((1 - eps) / eps).
    const double eps = 0.1;
    const double m_star = std::log((1 - eps) / eps);
    for (std::size_t t = 0; t < trials && ok; ++t) {
      double a = uniform(rng, -50, m_star);
      double b = uniform(rng, -50, m_star);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      ok = dpo_loss_from_margin(a, eps) > dpo_loss_from_margin(b, eps);
    }
    record("loss strictly decreasing in margin", ok);
  }
  {
    double worst = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double m = uniform(rng, -20, 20);
      for (double eps : {0.0, 0.1}) {
        worst = std::max(worst, std::abs(dpo_loss_from_margin(m, eps) -
                                         dpo_loss_from_margin(-m, 1 - eps)));
      }
    }
    record("loss(m; eps) = loss(-m; 1 - eps)", worst <= 1e-12);
  }
  {
    bool ok = true;
    for (std::size_t t = 0; t < trials && ok; ++t) {
      const DpoInputs in{uniform(rng, -60, 0), uniform(rng, -60, 0), uniform(rng, -60, 0),
                         uniform(rng, -60, 0)};
      const double m1 = dpo_margin(in, {0.1, 0});
      const double m2 = dpo_margin(in, {0.2, 0});
      ok = std::abs(m2 - 2 * m1) <= 1e-12 * std::max(1.0, std::abs(m2));
    }
    record("margin linear in beta", ok);
  }
  {
    const DpoInputs pos{-10, -12, -15, -13};
    const DpoInputs neg{-15, -13, -10, -12};
    const DpoInputs tie{-5, -5, -5, -5};
    const std::vector<DpoInputs> batch{pos, pos, neg, tie};
    record("implicit reward accuracy tie rule",
           implicit_reward_accuracy(batch) == 0.625);
  }
  return checks;
}

}  // namespace scramble::dpo
