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

#include "dpolab/selection.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpolab/errors.h"

namespace dpolab {
namespace {

size_t PairsPerPrompt(size_t m) { return m * (m - 1) / 2; }

}  // namespace

std::string_view SelectorName(SelectorKind kind) {
  return kind == SelectorKind::kApl ? "apl" : "random";
}

SelectorKind ParseSelector(std::string_view name) {
  if (name == "random") return SelectorKind::kRandom;
  if (name == "apl") return SelectorKind::kApl;
  throw ConfigError("unknown selector: " + std::string(name));
}

void ValidateSelectionConfig(const SelectionConfig& cfg) {
  if (cfg.batch_prompts < 1) throw ConfigError("selection.batch_prompts must be >= 1");
  if (cfg.candidates_per_prompt < 2) {
    throw ConfigError("selection.candidates_per_prompt must be >= 2");
  }
  if (cfg.apl_top_prompts < 1 || cfg.apl_top_prompts > cfg.batch_prompts) {
    throw ConfigError("selection.apl_top_prompts must lie in [1, batch_prompts]");
  }
  if (cfg.label_budget < 1) throw ConfigError("selection.label_budget must be >= 1");
  const size_t per_prompt = PairsPerPrompt(cfg.candidates_per_prompt);
  if (cfg.label_budget > cfg.batch_prompts * per_prompt) {
    throw ConfigError("selection.label_budget exceeds batch_prompts * C(M,2)");
  }
  if (cfg.label_budget > cfg.apl_top_prompts * per_prompt) {
    throw ConfigError("selection.label_budget exceeds apl_top_prompts * C(M,2)");
  }
}

OpCounters& OpCounters::operator+=(const OpCounters& o) {
  policy_logprob_evals += o.policy_logprob_evals;
  ref_logprob_evals += o.ref_logprob_evals;
  judge_queries += o.judge_queries;
  generated_samples += o.generated_samples;
  return *this;
}

std::vector<CandidateSet> GenerateCandidates(const Policy& p,
                                             const PromptUniverse& universe,
                                             std::span<const size_t> prompt_ids,
                                             const SelectionConfig& cfg, Rng& rng,
                                             OpCounters& counters) {
  std::vector<CandidateSet> sets;
  sets.reserve(prompt_ids.size());
  const size_t m = cfg.candidates_per_prompt;
  for (size_t id : prompt_ids) {
    const PromptRecord& x = universe.prompt(id);
    const Eigen::VectorXd lp = LogProbs(p, x);
    CandidateSet set;
    set.prompt_id = id;
    set.candidates.reserve(m);
    set.candidate_log_probs.reserve(m);
    for (size_t k = 0; k < m; ++k) {
      const size_t y = InverseCdfIndex(lp, rng.Uniform01());
      set.candidates.push_back(y);
      set.candidate_log_probs.push_back(lp[static_cast<Eigen::Index>(y)]);
    }
    counters.generated_samples += m;
    sets.push_back(std::move(set));
  }
  return sets;
}

PairPool FormPairs(const CandidateSet& c) {
  std::vector<size_t> values = c.candidates;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  PairPool pool;
  pool.prompt_id = c.prompt_id;
  for (size_t i = 0; i < values.size(); ++i) {
    for (size_t j = i + 1; j < values.size(); ++j) {
      pool.pairs.emplace_back(values[i], values[j]);
    }
  }
  return pool;
}

double EntropyEstimate(const CandidateSet& c) {
  if (c.candidate_log_probs.empty() ||
      c.candidate_log_probs.size() != c.candidates.size()) {
    throw ContractError("candidate set has no recorded log-probs");
  }
  // Running mean: exact when every draw has the same log-prob.
  double mean = 0.0;
  double n = 0.0;
  for (double lp : c.candidate_log_probs) {
    n += 1.0;
    mean += (lp - mean) / n;
  }
  return -mean;
}

double MarginScore(const Policy& p, const Policy& ref, const PromptRecord& x,
                   const ResponsePair& pair, double beta, OpCounters& counters) {
  const Eigen::VectorXd lp = LogProbs(p, x);
  const Eigen::VectorXd lr = LogProbs(ref, x);
  if (pair.first >= x.num_responses() || pair.second >= x.num_responses()) {
    throw ContractError("pair response index out of range");
  }
  const auto a = static_cast<Eigen::Index>(pair.first);
  const auto b = static_cast<Eigen::Index>(pair.second);
  counters.policy_logprob_evals += 2;
  counters.ref_logprob_evals += 2;
  return std::abs(beta * ((lp[a] - lr[a]) - (lp[b] - lr[b])));
}

SelectionResult SelectRandom(std::span<const PairPool> pools, size_t budget,
                             Rng& rng) {
  std::vector<SelectedPair> all;
  for (const PairPool& pool : pools) {
    for (const ResponsePair& pair : pool.pairs) {
      all.push_back({pool.prompt_id, pair, 0.0});
    }
  }
  SelectionResult result;
  result.available_pairs = all.size();
  if (all.size() <= budget) {
    result.shortfall = all.size() < budget;
    result.pairs = std::move(all);
    return result;
  }
  // Partial Fisher-Yates: the first `budget` slots form a uniform subset.
  for (size_t i = 0; i < budget; ++i) {
    const size_t j = i + rng.UniformIndex(all.size() - i);
    std::swap(all[i], all[j]);
  }
  all.resize(budget);
  result.pairs = std::move(all);
  return result;
}

std::vector<size_t> TopEntropyPrompts(std::span<const size_t> prompt_ids,
                                      std::span<const double> entropies,
                                      size_t keep) {
  if (prompt_ids.size() != entropies.size()) {
    throw ContractError("prompt ids and entropies differ in length");
  }
  std::vector<size_t> order(prompt_ids.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (entropies[a] != entropies[b]) return entropies[a] > entropies[b];
    return prompt_ids[a] < prompt_ids[b];
  });
  if (order.size() > keep) order.resize(keep);
  std::vector<size_t> kept;
  kept.reserve(order.size());
  for (size_t i : order) kept.push_back(prompt_ids[i]);
  return kept;
}

SelectionResult SelectApl(const Policy& p, const Policy& ref,
                          const PromptUniverse& universe,
                          std::span<const CandidateSet> candidate_sets,
                          std::span<const PairPool> pools,
                          const SelectionConfig& cfg, double beta,
                          OpCounters& counters) {
  if (candidate_sets.size() != pools.size()) {
    throw ContractError("candidate sets and pools differ in length");
  }
  // Stage 1: entropy ranking over prompts that have at least one pair.
  std::vector<size_t> ids;
  std::vector<double> entropies;
  std::vector<const PairPool*> by_index;
  for (size_t i = 0; i < pools.size(); ++i) {
    if (pools[i].degenerate()) continue;
    ids.push_back(pools[i].prompt_id);
    entropies.push_back(EntropyEstimate(candidate_sets[i]));
    by_index.push_back(&pools[i]);
  }
  const std::vector<size_t> kept =
      TopEntropyPrompts(ids, entropies, cfg.apl_top_prompts);

  // Stage 2: margin over every pair of the kept prompts.
  std::vector<SelectedPair> scored;
  for (size_t id : kept) {
    const PairPool* pool = nullptr;
    for (const PairPool* candidate : by_index) {
      if (candidate->prompt_id == id) {
        pool = candidate;
        break;
      }
    }
    const PromptRecord& x = universe.prompt(id);
    for (const ResponsePair& pair : pool->pairs) {
      scored.push_back({id, pair, MarginScore(p, ref, x, pair, beta, counters)});
    }
  }
  std::sort(scored.begin(), scored.end(),
            [](const SelectedPair& a, const SelectedPair& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.prompt_id != b.prompt_id) return a.prompt_id < b.prompt_id;
              return a.pair < b.pair;
            });
  SelectionResult result;
  result.available_pairs = scored.size();
  result.shortfall = scored.size() < cfg.label_budget;
  if (scored.size() > cfg.label_budget) scored.resize(cfg.label_budget);
  result.pairs = std::move(scored);
  return result;
}

OverheadReport CountersReport(const OpCounters& c, const OpCounters& baseline) {
  auto diff = [](uint64_t a, uint64_t b) {
    return static_cast<int64_t>(a) - static_cast<int64_t>(b);
  };
  OverheadReport r;
  r.policy_logprob_evals = diff(c.policy_logprob_evals, baseline.policy_logprob_evals);
  r.ref_logprob_evals = diff(c.ref_logprob_evals, baseline.ref_logprob_evals);
  r.judge_queries = diff(c.judge_queries, baseline.judge_queries);
  r.generated_samples = diff(c.generated_samples, baseline.generated_samples);
  r.extra_scoring_evals = r.policy_logprob_evals + r.ref_logprob_evals;
  r.relative_ops = baseline.total() == 0
                       ? 1.0
                       : static_cast<double>(c.total()) /
                             static_cast<double>(baseline.total());
  return r;
}

}  // namespace dpolab
