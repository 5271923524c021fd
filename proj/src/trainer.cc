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

#include "dpolab/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "dpolab/errors.h"
#include "dpolab/rng.h"

namespace dpolab {
namespace {

using Json = nlohmann::ordered_json;

// B distinct ids, uniformly, via partial Fisher-Yates. Consumes B draws.
std::vector<size_t> SamplePrompts(std::vector<size_t> pool, size_t count,
                                  Rng& rng) {
  for (size_t i = 0; i < count; ++i) {
    const size_t j = i + rng.UniformIndex(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

Json PairJson(const ResponsePair& pair) {
  return Json::array({pair.first, pair.second});
}

}  // namespace

void ValidateTrainConfig(const TrainConfig& cfg) {
  ValidateDpoConfig(cfg.dpo);
  ValidateSelectionConfig(cfg.selection);
  ValidateJudgeSpec(cfg.annotator);
  if (!(cfg.sft.learning_rate > 0.0)) throw ConfigError("sft.learning_rate must be > 0");
  if (cfg.sft.batch < 1) throw ConfigError("sft.batch must be >= 1");
}

TrainConfig DefaultTrainConfig() {
  TrainConfig cfg;
  cfg.dpo.max_steps = 625;
  cfg.dpo.updates_per_sample = 4;
  cfg.dpo.warmup_ratio = 0.05;
  cfg.dpo.beta = 0.1;
  cfg.selection.batch_prompts = 64;
  cfg.selection.candidates_per_prompt = 4;
  cfg.selection.apl_top_prompts = 32;
  cfg.selection.label_budget = 64;
  cfg.annotator = {"strong", JudgeKind::kBradleyTerry, 0.05, 0.5, 0};
  return cfg;
}

size_t ChosenResponse(const PromptRecord& x) {
  return ArgmaxLowestIndex(x.true_reward);
}

double SftObjective(const Policy& p, const PromptUniverse& universe) {
  double total = 0.0;
  size_t n = 0;
  for (const PromptRecord& x : universe.prompts) {
    if (x.role != PromptRole::kTrain) continue;
    total += LogProb(p, x, ChosenResponse(x));
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

Policy SftFit(const PromptUniverse& universe, const SftConfig& cfg) {
  if (cfg.batch < 1) throw ConfigError("sft.batch must be >= 1");
  const std::vector<size_t> train = universe.PromptIds(PromptRole::kTrain);
  Policy policy = Policy::Zero(universe.feature_dim(), "sft");
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t start = 0; start < train.size(); start += cfg.batch) {
      const size_t end = std::min(train.size(), start + cfg.batch);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.theta.size());
      for (size_t i = start; i < end; ++i) {
        const PromptRecord& x = universe.prompts[train[i]];
        grad += GradLogProb(policy, x, ChosenResponse(x));
      }
      policy.theta += cfg.learning_rate / static_cast<double>(end - start) * grad;
      if (!policy.IsFinite()) {
        throw TrainingError("SFT diverged in epoch " + std::to_string(epoch + 1));
      }
    }
  }
  return policy;
}

RunResult RunOnlineDpo(const PromptUniverse& universe, const Policy& sft_policy,
                       const TrainConfig& cfg) {
  return RunOnlineDpo(universe, sft_policy, cfg, cfg.dpo.max_steps);
}

RunResult RunOnlineDpo(const PromptUniverse& universe, const Policy& sft_policy,
                       const TrainConfig& cfg, size_t max_steps_override) {
  ValidateTrainConfig(cfg);
  if (!sft_policy.IsFinite()) throw ContractError("SFT policy is not finite");
  if (sft_policy.feature_dim() != universe.feature_dim()) {
    throw ContractError("SFT policy dimension does not match the universe");
  }
  const std::vector<size_t> train = universe.PromptIds(PromptRole::kTrain);
  if (cfg.selection.batch_prompts > train.size()) {
    throw ConfigError("selection.batch_prompts exceeds num_train_prompts");
  }

  RunResult result;
  result.sft_policy = sft_policy;
  const Policy ref = sft_policy;
  Policy policy(sft_policy.theta, "final");

  Rng prompt_rng(DeriveSeed(cfg.run_seed, "trainer/prompts"));
  Rng generation_rng(DeriveSeed(cfg.run_seed, "trainer/generation"));
  Rng selection_rng(DeriveSeed(cfg.run_seed, "trainer/selection"));
  JudgeSpec annotator_spec = cfg.annotator;
  annotator_spec.seed =
      DeriveSeed(cfg.annotator.seed, "run/" + std::to_string(cfg.run_seed));
  Judge annotator(annotator_spec, universe);

  const std::string selector(SelectorName(cfg.selector));
  OptimizerState opt = OptimizerState::Init(policy.feature_dim());
  const double beta = cfg.dpo.beta;

  for (size_t t = 1; t <= max_steps_override; ++t) {
    const std::vector<size_t> batch_ids =
        SamplePrompts(train, cfg.selection.batch_prompts, prompt_rng);
    const std::vector<CandidateSet> candidates = GenerateCandidates(
        policy, universe, batch_ids, cfg.selection, generation_rng,
        result.counters);

    std::vector<PairPool> pools;
    pools.reserve(candidates.size());
    Json batch_log = Json::array();
    IterationLog log;
    log.iteration = t;
    log.entropy_min = std::numeric_limits<double>::infinity();
    log.entropy_max = -std::numeric_limits<double>::infinity();
    double entropy_sum = 0.0;
    for (const CandidateSet& c : candidates) {
      pools.push_back(FormPairs(c));
      const double h = EntropyEstimate(c);
      log.entropy_min = std::min(log.entropy_min, h);
      log.entropy_max = std::max(log.entropy_max, h);
      entropy_sum += h;
      batch_log.push_back(Json{{"prompt_id", c.prompt_id},
                               {"candidates", c.candidates}});
      if (pools.back().degenerate()) {
        ++result.degenerate_prompts;
        result.events.push_back(
            {t, "degenerate_prompt", Json{{"prompt_id", c.prompt_id}}});
      }
    }
    log.entropy_mean = entropy_sum / static_cast<double>(candidates.size());
    result.events.push_back({t, "batch", Json{{"prompts", std::move(batch_log)}}});

    const SelectionResult selection =
        cfg.selector == SelectorKind::kApl
            ? SelectApl(policy, ref, universe, candidates, pools, cfg.selection,
                        beta, result.counters)
            : SelectRandom(pools, cfg.selection.label_budget, selection_rng);
    if (selection.shortfall) {
      ++result.shortfall_events;
      result.events.push_back(
          {t, "budget_shortfall",
           Json{{"strategy", selector},
                {"available", selection.available_pairs},
                {"budget", cfg.selection.label_budget}}});
    }

    std::vector<PreferenceTriple> triples;
    triples.reserve(selection.pairs.size());
    for (const SelectedPair& s : selection.pairs) {
      if (cfg.log_selections) {
        result.events.push_back({t, "selection",
                                 Json{{"strategy", selector},
                                      {"prompt_id", s.prompt_id},
                                      {"pair", PairJson(s.pair)},
                                      {"score", s.score}}});
      }
      const PromptRecord& x = universe.prompt(s.prompt_id);
      const size_t winner = annotator.Prefer(x, s.pair.first, s.pair.second);
      ++result.counters.judge_queries;
      const size_t loser = winner == s.pair.first ? s.pair.second : s.pair.first;
      triples.push_back({s.prompt_id, winner, loser, annotator.label(), t});
    }
    log.labeled_pairs = triples.size();

    if (triples.empty()) {
      log.mean_loss = std::numeric_limits<double>::quiet_NaN();
      log.lr = LrAtStep(cfg.dpo, opt.step);
      result.events.push_back({t, "no_triples", Json::object()});
      result.per_iteration.push_back(log);
      continue;
    }

    double loss_sum = 0.0;
    size_t updates_done = 0;
    try {
      for (size_t k = 0; k < cfg.dpo.updates_per_sample; ++k) {
        const LossAndGrad lg = DpoBatchGrad(policy, ref, universe, triples, beta);
        Eigen::VectorXd next = policy.theta;
        OptimizerStep(opt, next, lg.grad, cfg.dpo);
        if (!next.allFinite()) {
          throw TrainingError("non-finite parameters after update " +
                              std::to_string(opt.step));
        }
        policy.theta = std::move(next);
        loss_sum += lg.loss;
        ++updates_done;
      }
    } catch (const TrainingError& e) {
      result.aborted = true;
      result.events.push_back({t, "abort", Json{{"reason", e.what()}}});
    }
    log.mean_loss = updates_done == 0
                        ? std::numeric_limits<double>::quiet_NaN()
                        : loss_sum / static_cast<double>(updates_done);
    log.lr = LrAtStep(cfg.dpo, opt.step);
    result.per_iteration.push_back(log);
    if (result.aborted) break;
  }
  result.final_policy = std::move(policy);
  return result;
}

}  // namespace dpolab
