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

// SFT initialization and the online DPO loop:
//   sample prompts -> generate candidates -> form pairs -> select ->
//   label with the annotator -> several optimizer steps on the labeled batch.

#ifndef DPOLAB_TRAINER_H_
#define DPOLAB_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dpolab/dpo.h"
#include "dpolab/judges.h"
#include "dpolab/policy.h"
#include "dpolab/selection.h"
#include "dpolab/universe.h"
#include "json.hpp"

namespace dpolab {

struct SftConfig {
  double learning_rate = 0.025;
  size_t epochs = 1;
  size_t batch = 64;
};

struct TrainConfig {
  DpoConfig dpo;
  SelectionConfig selection;
  SelectorKind selector = SelectorKind::kRandom;
  JudgeSpec annotator;
  SftConfig sft;
  uint64_t run_seed = 42;
  // Stream one event per selected pair into RunResult::events.
  bool log_selections = true;
};

// Throws ConfigError.
void ValidateTrainConfig(const TrainConfig& cfg);

// Defaults mirroring the reference training schedule: T=625, B=64, four
// updates per collected batch, 5% warmup. beta, M, N, L are local defaults.
TrainConfig DefaultTrainConfig();

struct IterationLog {
  size_t iteration = 0;
  double mean_loss = 0.0;  // NaN when nothing was labeled
  size_t labeled_pairs = 0;
  double lr = 0.0;
  double entropy_min = 0.0;
  double entropy_mean = 0.0;
  double entropy_max = 0.0;
};

struct Event {
  size_t iteration = 0;
  std::string kind;
  nlohmann::ordered_json data;
};

struct RunResult {
  Policy final_policy;
  Policy sft_policy;
  std::vector<IterationLog> per_iteration;
  OpCounters counters;
  std::vector<Event> events;
  bool aborted = false;
  size_t shortfall_events = 0;
  size_t degenerate_prompts = 0;
};

// The synthetic "chosen" response: argmax of the true reward.
size_t ChosenResponse(const PromptRecord& x);

// Gradient ascent on the mean log-likelihood of each train prompt's chosen
// response, in fixed minibatch order. Throws TrainingError on divergence.
Policy SftFit(const PromptUniverse& universe, const SftConfig& cfg);

// Mean log pi(chosen | x) over train prompts.
double SftObjective(const Policy& p, const PromptUniverse& universe);

// Runs up to cfg.dpo.max_steps iterations (max_steps_override, when given,
// replaces it; 0 returns the SFT policy untouched). A non-finite update
// aborts the run and returns the partial result with an "abort" event.
RunResult RunOnlineDpo(const PromptUniverse& universe, const Policy& sft_policy,
                       const TrainConfig& cfg);
RunResult RunOnlineDpo(const PromptUniverse& universe, const Policy& sft_policy,
                       const TrainConfig& cfg, size_t max_steps_override);

}  // namespace dpolab

#endif  // DPOLAB_TRAINER_H_
