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

// Proxy win-rate against the SFT reference, probe accuracy, capability delta,
// and entropy-collapse diagnostics.

#ifndef DPOLAB_EVAL_H_
#define DPOLAB_EVAL_H_

#include <cstddef>

#include "dpolab/judges.h"
#include "dpolab/policy.h"
#include "dpolab/rng.h"
#include "dpolab/universe.h"

namespace dpolab {

struct WinRateEstimate {
  // Ties (identical sampled responses) contribute half a win.
  double wins = 0.0;
  size_t trials = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// One trial per eval prompt in round-robin order: y_a ~ p, y_b ~ ref, then the
// evaluator sees the pair in a coin-flipped slot order.
WinRateEstimate EstimateWinRate(const Policy& p, const Policy& ref,
                                PreferenceOracle& evaluator,
                                const PromptUniverse& universe, size_t n_trials,
                                Rng& rng);

// Fraction of probe prompts whose highest-logit response (lowest index on
// ties) is the correct one. Throws ContractError without probe prompts.
double ProbeAccuracy(const Policy& p, const PromptUniverse& universe);

// 100 * (acc(p) - acc(sft)), in percentage points.
double CapabilityDelta(const Policy& p, const Policy& sft,
                       const PromptUniverse& universe);

struct CollapseMetrics {
  double mean_entropy = 0.0;
  double sft_mean_entropy = 0.0;
  bool collapsed = false;
};

// Mean exact entropy over eval prompts; collapsed when it drops below
// collapse_fraction times the SFT policy's.
CollapseMetrics ComputeCollapseMetrics(const Policy& p, const Policy& sft,
                                       const PromptUniverse& universe,
                                       double collapse_fraction);

bool IsCollapsed(double mean_entropy, double sft_mean_entropy,
                 double collapse_fraction);

struct CapabilityReport {
  double probe_accuracy = 0.0;
  double delta_vs_sft = 0.0;
  double mean_policy_entropy = 0.0;
  bool collapse_flag = false;
};

CapabilityReport MakeCapabilityReport(const Policy& p, const Policy& sft,
                                      const PromptUniverse& universe,
                                      double collapse_fraction);

}  // namespace dpolab

#endif  // DPOLAB_EVAL_H_
