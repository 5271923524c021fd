// Copyright 2026 The dpolab Authors.
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

#include "dpolab/dpo.h"

#include <cmath>
#include <numbers>
#include <string>

#include "dpolab/errors.h"

namespace dpolab {
namespace {

void CheckTriple(const PromptUniverse& universe, const PreferenceTriple& t) {
  const PromptRecord& x = universe.prompt(t.prompt_id);
  if (t.winner == t.loser) throw ContractError("triple has winner == loser");
  if (t.winner >= x.num_responses() || t.loser >= x.num_responses()) {
    throw ContractError("triple response index out of range");
  }
}

// Implicit reward margin of winner over loser.
double Margin(const Policy& p, const Policy& ref, const PromptRecord& x,
              const PreferenceTriple& t, double beta) {
  const Eigen::VectorXd lp = LogProbs(p, x);
  const Eigen::VectorXd lr = LogProbs(ref, x);
  const auto w = static_cast<Eigen::Index>(t.winner);
  const auto l = static_cast<Eigen::Index>(t.loser);
  return beta * ((lp[w] - lr[w]) - (lp[l] - lr[l]));
}

}  // namespace

double Softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void ValidateDpoConfig(const DpoConfig& cfg) {
  if (!(cfg.beta > 0.0)) throw ConfigError("dpo.beta must be > 0");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("dpo.learning_rate must be > 0");
  if (cfg.max_steps < 1) throw ConfigError("dpo.max_steps must be >= 1");
  if (cfg.updates_per_sample < 1) {
    throw ConfigError("dpo.updates_per_sample must be >= 1");
  }
  if (!(cfg.warmup_ratio >= 0.0 && cfg.warmup_ratio < 1.0)) {
    throw ConfigError("dpo.warmup_ratio must lie in [0, 1)");
  }
  if (!(cfg.weight_decay >= 0.0)) throw ConfigError("dpo.weight_decay must be >= 0");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) ||
      !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) {
    throw ConfigError("dpo.adam_beta1/adam_beta2 must lie in [0, 1)");
  }
  if (!(cfg.adam_eps >= 0.0)) throw ConfigError("dpo.adam_eps must be >= 0");
}

double ImplicitReward(const Policy& p, const Policy& ref, const PromptRecord& x,
                      size_t y, double beta) {
  return beta * (LogProb(p, x, y) - LogProb(ref, x, y));
}

double DpoExampleLoss(const Policy& p, const Policy& ref,
                      const PromptUniverse& universe, const PreferenceTriple& t,
                      double beta) {
  CheckTriple(universe, t);
  return Softplus(-Margin(p, ref, universe.prompt(t.prompt_id), t, beta));
}

LossAndGrad DpoBatchGrad(const Policy& p, const Policy& ref,
                         const PromptUniverse& universe,
                         std::span<const PreferenceTriple> batch, double beta) {
  if (batch.empty()) throw ContractError("DpoBatchGrad on an empty batch");
  LossAndGrad out;
  out.grad = Eigen::VectorXd::Zero(p.theta.size());
  for (const PreferenceTriple& t : batch) {
    CheckTriple(universe, t);
    const PromptRecord& x = universe.prompt(t.prompt_id);
    const double h = Margin(p, ref, x, t, beta);
    out.loss += Softplus(-h);
    // d/dtheta softplus(-h) = -sigmoid(-h) * dh/dtheta, and the expectation
    // terms of the two grad-log-probs cancel, leaving phi_w - phi_l.
    const auto w = static_cast<Eigen::Index>(t.winner);
    const auto l = static_cast<Eigen::Index>(t.loser);
    out.grad.noalias() -= Sigmoid(-h) * beta *
                          (x.features.row(w) - x.features.row(l)).transpose();
  }
  const double n = static_cast<double>(batch.size());
  out.loss /= n;
  out.grad /= n;
  return out;
}

double LrAtStep(const DpoConfig& cfg, size_t step) {
  const size_t total = cfg.total_updates();
  const double warmup = cfg.warmup_ratio * static_cast<double>(total);
  const double s = static_cast<double>(step);
  if (s < warmup) return cfg.learning_rate * s / warmup;
  if (cfg.schedule == LrSchedule::kCosine && static_cast<double>(total) > warmup) {
    const double progress = (s - warmup) / (static_cast<double>(total) - warmup);
    const double clipped = progress > 1.0 ? 1.0 : progress;
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * clipped));
  }
  return cfg.learning_rate;
}

void OptimizerStep(OptimizerState& state, Eigen::VectorXd& theta,
                   const Eigen::VectorXd& grad, const DpoConfig& cfg) {
  if (grad.size() != theta.size()) {
    throw ContractError("gradient and parameter dimensions differ");
  }
  if (!grad.allFinite()) {
    throw TrainingError("non-finite gradient at update " +
                        std::to_string(state.step + 1));
  }
  if (state.first_moment.size() != theta.size()) {
    state.first_moment = Eigen::VectorXd::Zero(theta.size());
    state.second_moment = Eigen::VectorXd::Zero(theta.size());
  }
  const size_t t = state.step + 1;
  const double lr = LrAtStep(cfg, t);
  switch (cfg.optimizer) {
    case OptimizerKind::kSgd:
      theta -= lr * (grad + cfg.weight_decay * theta);
      break;
    case OptimizerKind::kAdam: {
      const double b1 = cfg.adam_beta1;
      const double b2 = cfg.adam_beta2;
      state.first_moment = b1 * state.first_moment + (1.0 - b1) * grad;
      state.second_moment =
          b2 * state.second_moment + (1.0 - b2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
      const Eigen::ArrayXd m_hat = state.first_moment.array() / c1;
      const Eigen::ArrayXd v_hat = state.second_moment.array() / c2;
      const Eigen::VectorXd update =
          (m_hat / (v_hat.sqrt() + cfg.adam_eps)).matrix();
      theta -= lr * (update + cfg.weight_decay * theta);
      break;
    }
  }
  state.step = t;
}

}  // namespace dpolab
