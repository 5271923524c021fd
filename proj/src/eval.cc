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

#include "dpolab/eval.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpolab/errors.h"

namespace dpolab {

WinRateEstimate EstimateWinRate(const Policy& p, const Policy& ref,
                                PreferenceOracle& evaluator,
                                const PromptUniverse& universe, size_t n_trials,
                                Rng& rng) {
  if (n_trials < 1) throw ContractError("n_trials must be >= 1");
  const std::vector<size_t> eval_ids = universe.PromptIds(PromptRole::kEval);
  if (eval_ids.empty()) throw ContractError("universe has no eval prompts");

  WinRateEstimate est;
  est.trials = n_trials;
  for (size_t trial = 0; trial < n_trials; ++trial) {
    const PromptRecord& x = universe.prompt(eval_ids[trial % eval_ids.size()]);
    const size_t ya = SampleResponse(p, x, rng);
    const size_t yb = SampleResponse(ref, x, rng);
    const bool policy_first = rng.Bernoulli(0.5);
    if (ya == yb) {
      est.wins += 0.5;
      continue;
    }
    const size_t winner =
        policy_first ? evaluator.Prefer(x, ya, yb) : evaluator.Prefer(x, yb, ya);
    if (winner == ya) est.wins += 1.0;
  }
  const double n = static_cast<double>(n_trials);
  est.rate = est.wins / n;
  const double half_width = 1.96 * std::sqrt(est.rate * (1.0 - est.rate) / n);
  est.ci_low = std::clamp(est.rate - half_width, 0.0, 1.0);
  est.ci_high = std::clamp(est.rate + half_width, 0.0, 1.0);
  return est;
}

double ProbeAccuracy(const Policy& p, const PromptUniverse& universe) {
  size_t probes = 0;
  size_t correct = 0;
  for (const PromptRecord& x : universe.prompts) {
    if (x.role != PromptRole::kProbe) continue;
    ++probes;
    if (x.correct_response && ArgmaxLowestIndex(Logits(p, x)) == *x.correct_response) {
      ++correct;
    }
  }
  if (probes == 0) throw ContractError("universe has no probe prompts");
  return static_cast<double>(correct) / static_cast<double>(probes);
}

double CapabilityDelta(const Policy& p, const Policy& sft,
                       const PromptUniverse& universe) {
  return 100.0 * (ProbeAccuracy(p, universe) - ProbeAccuracy(sft, universe));
}

bool IsCollapsed(double mean_entropy, double sft_mean_entropy,
                 double collapse_fraction) {
  return mean_entropy < collapse_fraction * sft_mean_entropy;
}

CollapseMetrics ComputeCollapseMetrics(const Policy& p, const Policy& sft,
                                       const PromptUniverse& universe,
                                       double collapse_fraction) {
  if (!(collapse_fraction > 0.0 && collapse_fraction < 1.0)) {
    throw ContractError("collapse_fraction must lie in (0, 1)");
  }
  CollapseMetrics m;
  size_t n = 0;
  for (const PromptRecord& x : universe.prompts) {
    if (x.role != PromptRole::kEval) continue;
    m.mean_entropy += ExactEntropy(p, x);
    m.sft_mean_entropy += ExactEntropy(sft, x);
    ++n;
  }
  if (n > 0) {
    m.mean_entropy /= static_cast<double>(n);
    m.sft_mean_entropy /= static_cast<double>(n);
  }
  m.collapsed = IsCollapsed(m.mean_entropy, m.sft_mean_entropy, collapse_fraction);
  return m;
}

CapabilityReport MakeCapabilityReport(const Policy& p, const Policy& sft,
                                      const PromptUniverse& universe,
                                      double collapse_fraction) {
  CapabilityReport r;
  r.probe_accuracy = ProbeAccuracy(p, universe);
  r.delta_vs_sft = 100.0 * (r.probe_accuracy - ProbeAccuracy(sft, universe));
  const CollapseMetrics m =
      ComputeCollapseMetrics(p, sft, universe, collapse_fraction);
  r.mean_policy_entropy = m.mean_entropy;
  r.collapse_flag = m.collapsed;
  return r;
}

}  // namespace dpolab
