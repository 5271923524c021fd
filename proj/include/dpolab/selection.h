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

// Candidate generation, pair formation, and the two budget-matched pair
// selectors. Random draws L pairs uniformly from the union of all pools; APL
// keeps the N highest-entropy prompts and then the L pairs with the largest
// implicit reward margin among them.

#ifndef DPOLAB_SELECTION_H_
#define DPOLAB_SELECTION_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "dpolab/policy.h"
#include "dpolab/rng.h"
#include "dpolab/universe.h"

namespace dpolab {

enum class SelectorKind { kRandom, kApl };

std::string_view SelectorName(SelectorKind kind);
SelectorKind ParseSelector(std::string_view name);

struct SelectionConfig {
  size_t batch_prompts = 64;          // B
  size_t candidates_per_prompt = 4;   // M
  size_t apl_top_prompts = 32;        // N
  size_t label_budget = 64;           // L, pairs per iteration
};

// Throws ConfigError, including when L exceeds what either selector could
// ever supply (B * C(M,2) for Random, N * C(M,2) for APL).
void ValidateSelectionConfig(const SelectionConfig& cfg);

struct CandidateSet {
  size_t prompt_id = 0;
  std::vector<size_t> candidates;
  // log pi_theta of each candidate, recorded when it was drawn.
  std::vector<double> candidate_log_probs;
};

// Unordered pair stored with first < second.
using ResponsePair = std::pair<size_t, size_t>;

struct PairPool {
  size_t prompt_id = 0;
  // Lexicographically sorted, no duplicates, no equal-response pairs.
  std::vector<ResponsePair> pairs;

  bool degenerate() const { return pairs.empty(); }
};

struct OpCounters {
  uint64_t policy_logprob_evals = 0;
  uint64_t ref_logprob_evals = 0;
  uint64_t judge_queries = 0;
  uint64_t generated_samples = 0;

  OpCounters& operator+=(const OpCounters& o);
  uint64_t total() const {
    return policy_logprob_evals + ref_logprob_evals + judge_queries +
           generated_samples;
  }
  bool operator==(const OpCounters&) const = default;
};

struct SelectedPair {
  size_t prompt_id = 0;
  ResponsePair pair;
  // Margin for APL, 0 for Random.
  double score = 0.0;
};

struct SelectionResult {
  std::vector<SelectedPair> pairs;
  size_t available_pairs = 0;
  // Fewer than L pairs could be supplied.
  bool shortfall = false;
};

// M draws per prompt from `p`, consuming exactly M uniforms per prompt.
std::vector<CandidateSet> GenerateCandidates(const Policy& p,
                                             const PromptUniverse& universe,
                                             std::span<const size_t> prompt_ids,
                                             const SelectionConfig& cfg, Rng& rng,
                                             OpCounters& counters);

PairPool FormPairs(const CandidateSet& c);

// Monte-Carlo entropy -(1/M) sum_m log pi(y_m | x), from the recorded
// log-probs. No policy evaluations.
double EntropyEstimate(const CandidateSet& c);

// |r(x, y1) - r(x, y2)| with r the implicit reward. Counts two policy and two
// reference log-prob evaluations.
double MarginScore(const Policy& p, const Policy& ref, const PromptRecord& x,
                   const ResponsePair& pair, double beta, OpCounters& counters);

SelectionResult SelectRandom(std::span<const PairPool> pools, size_t budget,
                             Rng& rng);

// Deterministic; consumes no randomness. Prompts with empty pools are not
// ranked. `candidate_sets` and `pools` are parallel.
SelectionResult SelectApl(const Policy& p, const Policy& ref,
                          const PromptUniverse& universe,
                          std::span<const CandidateSet> candidate_sets,
                          std::span<const PairPool> pools,
                          const SelectionConfig& cfg, double beta,
                          OpCounters& counters);

// Prompt ids kept by APL's entropy stage: descending estimate, ties to the
// lower prompt id.
std::vector<size_t> TopEntropyPrompts(std::span<const size_t> prompt_ids,
                                      std::span<const double> entropies,
                                      size_t keep);

// Signed per-category differences of `c` against `baseline`.
struct OverheadReport {
  int64_t policy_logprob_evals = 0;
  int64_t ref_logprob_evals = 0;
  int64_t judge_queries = 0;
  int64_t generated_samples = 0;
  // Extra log-prob evaluations spent on scoring.
  int64_t extra_scoring_evals = 0;
  // total(c) / total(baseline); 1 when the baseline is empty.
  double relative_ops = 1.0;
};

// Wall-clock ratio of APL over Random per query-update cycle on the original
// LLM setup. Kept for side-by-side reporting only; operation counts here are
// a different unit.
inline constexpr double kReferenceWallClockRatio = 20.2;

OverheadReport CountersReport(const OpCounters& c, const OpCounters& baseline);

}  // namespace dpolab

#endif  // DPOLAB_SELECTION_H_
