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

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dpolab/dpo.h"
#include "dpolab/errors.h"
#include "test_util.h"

namespace dpolab {
namespace {

using testing::RandomPolicy;
using testing::SmallConfig;
using testing::TabularUniverse;

CandidateSet Candidates(size_t id, std::vector<size_t> ys, const Policy& p,
                        const PromptUniverse& u) {
  CandidateSet c{id, ys, {}};
  for (size_t y : ys) c.candidate_log_probs.push_back(LogProb(p, u.prompt(id), y));
  return c;
}

TEST(SelectionTest, GenerationCountsAndReproducibility) {
  const PromptUniverse u = GenerateUniverse(SmallConfig(5, 6, 1));
  Rng seed(1);
  const Policy p = RandomPolicy(5, seed);
  SelectionConfig cfg{4, 4, 2, 4};
  const std::vector<size_t> ids = {0, 2, 3, 5};
  OpCounters c1, c2;
  Rng a(3), b(3);
  const auto s1 = GenerateCandidates(p, u, ids, cfg, a, c1);
  const auto s2 = GenerateCandidates(p, u, ids, cfg, b, c2);
  EXPECT_EQ(c1.generated_samples, 16u);
  EXPECT_EQ(c1.judge_queries, 0u);
  ASSERT_EQ(s1.size(), 4u);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s1[i].prompt_id, ids[i]);
    EXPECT_EQ(s1[i].candidates, s2[i].candidates);
    ASSERT_EQ(s1[i].candidates.size(), 4u);
    for (size_t m = 0; m < 4; ++m) {
      EXPECT_EQ(s1[i].candidate_log_probs[m],
                LogProb(p, u.prompt(ids[i]), s1[i].candidates[m]));
    }
  }
}

TEST(SelectionTest, PointMassGivesIdenticalCandidates) {
  const PromptUniverse u = TabularUniverse(2, 4);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(8);
  theta[1] = 1e6;
  theta[6] = 1e6;
  OpCounters counters;
  Rng rng(4);
  const std::vector<size_t> ids = {0, 1};
  const auto sets = GenerateCandidates(Policy(theta, "pm"), u, ids,
                                       SelectionConfig{2, 4, 1, 1}, rng, counters);
  EXPECT_EQ(sets[0].candidates, std::vector<size_t>(4, 1));
  EXPECT_EQ(sets[1].candidates, std::vector<size_t>(4, 2));
  EXPECT_TRUE(FormPairs(sets[0]).degenerate());
}

TEST(SelectionTest, PairFormation) {
  auto pool = [](std::vector<size_t> ys) {
    return FormPairs(CandidateSet{7, ys, std::vector<double>(ys.size(), -1.0)});
  };
  EXPECT_EQ(pool({0, 1, 2, 3}).pairs.size(), 6u);
  EXPECT_TRUE(pool({2, 2, 2, 2}).degenerate());
  const PairPool dup = pool({0, 0, 1, 1});
  ASSERT_EQ(dup.pairs.size(), 1u);
  EXPECT_EQ(dup.pairs[0], ResponsePair(0, 1));
  EXPECT_EQ(dup.prompt_id, 7u);
  const PairPool mixed = pool({3, 1, 3, 0});
  EXPECT_EQ(mixed.pairs, (std::vector<ResponsePair>{{0, 1}, {0, 3}, {1, 3}}));
}

TEST(SelectionTest, EntropyEstimateEdgeCases) {
  const PromptUniverse u = TabularUniverse(1, 4);
  const Policy uniform = Policy::Zero(4, "u");
  for (size_t m = 1; m <= 12; ++m) {
    const std::vector<size_t> ys(m, m % 4);
    EXPECT_EQ(EntropyEstimate(Candidates(0, ys, uniform, u)), std::log(4.0));
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(4);
  theta[0] = 1e6;
  EXPECT_EQ(EntropyEstimate(Candidates(0, {0, 0, 0}, Policy(theta, "pm"), u)), 0.0);
  EXPECT_THROW(EntropyEstimate(CandidateSet{0, {0, 1}, {}}), ContractError);
}

TEST(SelectionTest, EntropyEstimatorIsUnbiased) {
  // Categorical (0.69, 0.31) realized by logits (log 0.69, log 0.31).
  const PromptUniverse u = TabularUniverse(1, 2);
  const Policy p(Eigen::Vector2d(std::log(0.69), std::log(0.31)), "p");
  const double exact = ExactEntropy(p, u.prompts[0]);
  const std::vector<size_t> ids = {0};
  Rng rng(12);
  const int reps = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    OpCounters counters;
    const auto sets = GenerateCandidates(p, u, ids, SelectionConfig{1, 4, 1, 1}, rng,
                                         counters);
    const double h = EntropyEstimate(sets[0]);
    sum += h;
    sum2 += h * h;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
  EXPECT_NEAR(mean, exact, 3.0 * se);
}

TEST(SelectionTest, MarginScoreCountsAndValues) {
  const PromptUniverse u = TabularUniverse(1, 2);
  const Policy p(Eigen::Vector2d(0.7, -0.1), "p");
  const Policy ref = Policy::Zero(2, "ref");
  OpCounters counters;
  EXPECT_NEAR(MarginScore(p, ref, u.prompts[0], {0, 1}, 2.0, counters), 1.6, 1e-12);
  EXPECT_NEAR(MarginScore(p, ref, u.prompts[0], {1, 0}, 2.0, counters), 1.6, 1e-12);
  EXPECT_EQ(MarginScore(p, p, u.prompts[0], {0, 1}, 2.0, counters), 0.0);
  EXPECT_EQ(counters.policy_logprob_evals, 6u);
  EXPECT_EQ(counters.ref_logprob_evals, 6u);
}

TEST(SelectionTest, RandomSelectionTakesAllWhenBudgetMatches) {
  const std::vector<PairPool> pools = {{0, {{0, 1}, {1, 2}}}, {3, {{0, 2}}}};
  Rng rng(1);
  const SelectionResult r = SelectRandom(pools, 3, rng);
  EXPECT_EQ(r.pairs.size(), 3u);
  EXPECT_FALSE(r.shortfall);
  const SelectionResult s = SelectRandom(pools, 5, rng);
  EXPECT_EQ(s.pairs.size(), 3u);
  EXPECT_TRUE(s.shortfall);
  EXPECT_EQ(s.available_pairs, 3u);
  const std::vector<PairPool> empty = {{0, {}}, {1, {}}};
  EXPECT_TRUE(SelectRandom(empty, 2, rng).pairs.empty());
}

TEST(SelectionTest, RandomSelectionIsDeterministicAndUniform) {
  const std::vector<PairPool> pools = {
      {0, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}}};
  Rng a(5), b(5);
  const auto first = SelectRandom(pools, 3, a);
  const auto second = SelectRandom(pools, 3, b);
  ASSERT_EQ(first.pairs.size(), 3u);
  for (size_t i = 0; i < 3; ++i) EXPECT_EQ(first.pairs[i].pair, second.pairs[i].pair);

  // Each pair is in a uniform 3-subset of 6 with probability 1/2.
  Rng rng(6);
  const int reps = 10000;
  std::map<ResponsePair, int> hits;
  for (int r = 0; r < reps; ++r) {
    std::set<ResponsePair> seen;
    for (const SelectedPair& s : SelectRandom(pools, 3, rng).pairs) {
      EXPECT_TRUE(seen.insert(s.pair).second);
      ++hits[s.pair];
    }
  }
  const double se = std::sqrt(0.25 / reps);
  for (const auto& [pair, count] : hits) {
    EXPECT_NEAR(static_cast<double>(count) / reps, 0.5, 5.0 * se);
  }
}

TEST(SelectionTest, TopEntropyOrderingAndTies) {
  const std::vector<size_t> ids = {0, 1, 2};
  EXPECT_EQ(TopEntropyPrompts(ids, std::vector<double>{0.2, 1.4, 0.9}, 2),
            (std::vector<size_t>{1, 2}));
  const std::vector<size_t> tied_ids = {9, 4, 6};
  EXPECT_EQ(TopEntropyPrompts(tied_ids, std::vector<double>{0.5, 0.5, 0.5}, 2),
            (std::vector<size_t>{4, 6}));
}

TEST(SelectionTest, AplAtReferenceFollowsTieBreakOrder) {
  const PromptUniverse u = TabularUniverse(3, 4);
  const Policy p = Policy::Zero(12, "p");
  std::vector<CandidateSet> sets = {Candidates(0, {0, 1, 2, 3}, p, u),
                                    Candidates(1, {3, 1, 1, 0}, p, u),
                                    Candidates(2, {2, 0, 3, 1}, p, u)};
  std::vector<PairPool> pools;
  for (const auto& c : sets) pools.push_back(FormPairs(c));
  OpCounters counters;
  const SelectionResult r =
      SelectApl(p, p, u, sets, pools, SelectionConfig{3, 4, 2, 4}, 0.1, counters);
  // Uniform policy: equal entropies keep prompts 0 and 1; all margins are 0.
  ASSERT_EQ(r.pairs.size(), 4u);
  EXPECT_EQ(r.pairs[0].prompt_id, 0u);
  EXPECT_EQ(r.pairs[0].pair, ResponsePair(0, 1));
  EXPECT_EQ(r.pairs[3].pair, ResponsePair(1, 2));
  EXPECT_EQ(r.available_pairs, 6u + 3u);
  EXPECT_EQ(counters.policy_logprob_evals, 2u * 9u);
}

TEST(SelectionTest, AplPicksLargestMargins) {
  const PromptUniverse u = TabularUniverse(2, 3);
  Eigen::VectorXd theta(6);
  theta << 0.0, 2.0, -1.0, 0.5, 0.0, 0.2;
  const Policy p(theta, "p");
  const Policy ref = Policy::Zero(6, "ref");
  std::vector<CandidateSet> sets = {Candidates(0, {0, 1, 2}, p, u),
                                    Candidates(1, {0, 1, 2}, p, u)};
  std::vector<PairPool> pools = {FormPairs(sets[0]), FormPairs(sets[1])};
  OpCounters counters;
  const SelectionResult r =
      SelectApl(p, ref, u, sets, pools, SelectionConfig{2, 3, 2, 2}, 1.0, counters);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].prompt_id, 0u);
  EXPECT_EQ(r.pairs[0].pair, ResponsePair(1, 2));
  EXPECT_NEAR(r.pairs[0].score, 3.0, 1e-12);
  EXPECT_NEAR(r.pairs[1].score, 2.0, 1e-12);
  EXPECT_GE(r.pairs[0].score, r.pairs[1].score);
}

TEST(SelectionTest, AplSkipsDegeneratePrompts) {
  const PromptUniverse u = TabularUniverse(3, 4);
  const Policy p = Policy::Zero(12, "p");
  std::vector<CandidateSet> sets = {Candidates(0, {2, 2, 2, 2}, p, u),
                                    Candidates(1, {0, 1, 0, 1}, p, u),
                                    Candidates(2, {3, 3, 3, 1}, p, u)};
  std::vector<PairPool> pools;
  for (const auto& c : sets) pools.push_back(FormPairs(c));
  OpCounters counters;
  const SelectionResult r =
      SelectApl(p, p, u, sets, pools, SelectionConfig{3, 4, 2, 4}, 0.1, counters);
  EXPECT_EQ(r.pairs.size(), 2u);
  EXPECT_TRUE(r.shortfall);
  for (const auto& s : r.pairs) EXPECT_NE(s.prompt_id, 0u);
}

TEST(SelectionTest, EntropyRankingInvariantToLogitShift) {
  const size_t v = 5;
  const PromptUniverse u = TabularUniverse(4, v);
  Rng rng(8);
  const Policy p = RandomPolicy(4 * v, rng);
  Policy shifted = p;
  for (size_t i = 0; i < 4; ++i) shifted.theta.segment(i * v, v).array() += 0.3 * i;
  const std::vector<size_t> ids = {0, 1, 2, 3};
  Rng a(9), b(9);
  OpCounters ca, cb;
  const SelectionConfig cfg{4, 6, 2, 4};
  const auto sa = GenerateCandidates(p, u, ids, cfg, a, ca);
  const auto sb = GenerateCandidates(shifted, u, ids, cfg, b, cb);
  std::vector<double> ea, eb;
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(sa[i].candidates, sb[i].candidates);
    ea.push_back(EntropyEstimate(sa[i]));
    eb.push_back(EntropyEstimate(sb[i]));
  }
  EXPECT_EQ(TopEntropyPrompts(ids, ea, 2), TopEntropyPrompts(ids, eb, 2));
}

TEST(SelectionTest, OverheadCountingOracle) {
  // B=4, M=4, N=2 with distinct candidates: 2 prompts x C(4,2) pairs x 4 evals.
  const PromptUniverse u = TabularUniverse(4, 4);
  Rng rng(10);
  const Policy p = RandomPolicy(16, rng), ref = RandomPolicy(16, rng);
  std::vector<CandidateSet> sets;
  std::vector<PairPool> pools;
  for (size_t i = 0; i < 4; ++i) {
    sets.push_back(Candidates(i, {3, 0, 2, 1}, p, u));
    pools.push_back(FormPairs(sets.back()));
  }
  const SelectionConfig cfg{4, 4, 2, 8};
  OpCounters apl, random;
  SelectApl(p, ref, u, sets, pools, cfg, 0.1, apl);
  Rng pick(1);
  SelectRandom(pools, cfg.label_budget, pick);
  const size_t closed_form = 4 * cfg.apl_top_prompts * (4 * 3 / 2);
  EXPECT_EQ(apl.policy_logprob_evals, 24u);
  EXPECT_EQ(apl.ref_logprob_evals, 24u);
  const OverheadReport report = CountersReport(apl, random);
  EXPECT_EQ(report.extra_scoring_evals, static_cast<int64_t>(closed_form));
  EXPECT_EQ(report.extra_scoring_evals, 48);
  EXPECT_EQ(report.judge_queries, 0);

  const OverheadReport same = CountersReport(random, random);
  EXPECT_EQ(same.extra_scoring_evals, 0);
  EXPECT_EQ(same.policy_logprob_evals, 0);
  EXPECT_EQ(same.relative_ops, 1.0);
}

TEST(SelectionTest, ConfigFeasibility) {
  EXPECT_NO_THROW(ValidateSelectionConfig(SelectionConfig{}));
  EXPECT_THROW(ValidateSelectionConfig(SelectionConfig{4, 1, 2, 1}), ConfigError);
  EXPECT_THROW(ValidateSelectionConfig(SelectionConfig{4, 4, 5, 1}), ConfigError);
  EXPECT_THROW(ValidateSelectionConfig(SelectionConfig{4, 4, 0, 1}), ConfigError);
  EXPECT_THROW(ValidateSelectionConfig(SelectionConfig{4, 4, 2, 0}), ConfigError);
  EXPECT_THROW(ValidateSelectionConfig(SelectionConfig{4, 4, 2, 13}), ConfigError);
  EXPECT_NO_THROW(ValidateSelectionConfig(SelectionConfig{4, 4, 2, 12}));
  EXPECT_EQ(ParseSelector("apl"), SelectorKind::kApl);
  EXPECT_EQ(SelectorName(SelectorKind::kRandom), "random");
  EXPECT_THROW(ParseSelector("badge"), ConfigError);
}

}  // namespace
}  // namespace dpolab
