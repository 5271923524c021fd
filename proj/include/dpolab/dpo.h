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

// Sigmoid DPO objective, its analytic gradient for the linear softmax
// policy, and the optimizer/schedule driving the online loop.

#ifndef DPOLAB_DPO_H_
#define DPOLAB_DPO_H_

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Core>

#include "dpolab/policy.h"
#include "dpolab/universe.h"

namespace dpolab {

struct PreferenceTriple {
  size_t prompt_id = 0;
  size_t winner = 0;
  size_t loser = 0;
  std::string annotator;
  size_t iteration = 0;
};

enum class OptimizerKind { kSgd, kAdam };
enum class LrSchedule { kConstant, kCosine };

struct DpoConfig {
  double beta = 0.1;
  double learning_rate = 0.5;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double warmup_ratio = 0.05;
  LrSchedule schedule = LrSchedule::kConstant;
  size_t updates_per_sample = 4;
  size_t max_steps = 625;

  size_t total_updates() const { return max_steps * updates_per_sample; }
};

// Throws ConfigError.
void ValidateDpoConfig(const DpoConfig& cfg);

struct OptimizerState {
  size_t step = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;

  static OptimizerState Init(size_t dim) {
    return {0, Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
  }
};

// beta * (log pi_theta(y|x) - log pi_ref(y|x)).
double ImplicitReward(const Policy& p, const Policy& ref, const PromptRecord& x,
                      size_t y, double beta);

// softplus(-h) with h the implicit reward margin of winner over loser.
double DpoExampleLoss(const Policy& p, const Policy& ref,
                      const PromptUniverse& universe, const PreferenceTriple& t,
                      double beta);

struct LossAndGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// Mean loss and mean gradient over a non-empty batch.
LossAndGrad DpoBatchGrad(const Policy& p, const Policy& ref,
                         const PromptUniverse& universe,
                         std::span<const PreferenceTriple> batch, double beta);

// Linear warmup over the first warmup_ratio of total updates, then constant
// (or cosine decay to zero when selected).
double LrAtStep(const DpoConfig& cfg, size_t step);

// Applies update number state.step + 1 with lr = LrAtStep(cfg, state.step + 1).
// Throws TrainingError on a non-finite gradient.
void OptimizerStep(OptimizerState& state, Eigen::VectorXd& theta,
                   const Eigen::VectorXd& grad, const DpoConfig& cfg);

// log(1 + exp(x)) without overflow.
double Softplus(double x);
double Sigmoid(double x);

}  // namespace dpolab

#endif  // DPOLAB_DPO_H_
