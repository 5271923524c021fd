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

#include "dpolab/policy.h"

#include <cmath>
#include <string>

#include "dpolab/errors.h"

namespace dpolab {
namespace {

void CheckDims(const Policy& p, const PromptRecord& x) {
  if (static_cast<Eigen::Index>(p.feature_dim()) != x.features.cols()) {
    throw ContractError("policy feature_dim " + std::to_string(p.feature_dim()) +
                        " does not match prompt features (" +
                        std::to_string(x.features.cols()) + ")");
  }
}

void CheckResponse(const PromptRecord& x, size_t y) {
  if (y >= x.num_responses()) {
    throw ContractError("response index " + std::to_string(y) +
                        " out of range for V=" +
                        std::to_string(x.num_responses()));
  }
}

Eigen::VectorXd Probabilities(const Eigen::VectorXd& log_probs) {
  return log_probs.array().exp().matrix();
}

}  // namespace

size_t InverseCdfIndex(const Eigen::VectorXd& log_probs, double u) {
  double cumulative = 0.0;
  const Eigen::Index n = log_probs.size();
  for (Eigen::Index y = 0; y < n; ++y) {
    cumulative += std::exp(log_probs[y]);
    if (u < cumulative) return static_cast<size_t>(y);
  }
  // Rounding left the total just under u; take the last response with
  // positive mass.
  for (Eigen::Index y = n - 1; y > 0; --y) {
    if (std::exp(log_probs[y]) > 0.0) return static_cast<size_t>(y);
  }
  return 0;
}

Eigen::VectorXd Logits(const Policy& p, const PromptRecord& x) {
  CheckDims(p, x);
  return x.features * p.theta;
}

Eigen::VectorXd LogProbs(const Policy& p, const PromptRecord& x) {
  const Eigen::VectorXd z = Logits(p, x);
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return (z.array() - lse).matrix();
}

double LogProb(const Policy& p, const PromptRecord& x, size_t y) {
  CheckResponse(x, y);
  return LogProbs(p, x)[static_cast<Eigen::Index>(y)];
}

size_t SampleResponse(const Policy& p, const PromptRecord& x, Rng& rng) {
  return SampleWithLogProb(p, x, rng).response;
}

Sample SampleWithLogProb(const Policy& p, const PromptRecord& x, Rng& rng) {
  const Eigen::VectorXd lp = LogProbs(p, x);
  const size_t y = InverseCdfIndex(lp, rng.Uniform01());
  return {y, lp[static_cast<Eigen::Index>(y)]};
}

Eigen::VectorXd GradLogProb(const Policy& p, const PromptRecord& x, size_t y) {
  CheckResponse(x, y);
  const Eigen::VectorXd probs = Probabilities(LogProbs(p, x));
  return x.features.row(static_cast<Eigen::Index>(y)).transpose() -
         x.features.transpose() * probs;
}

double ExactEntropy(const Policy& p, const PromptRecord& x) {
  const Eigen::VectorXd lp = LogProbs(p, x);
  double h = 0.0;
  for (Eigen::Index y = 0; y < lp.size(); ++y) {
    const double prob = std::exp(lp[y]);
    if (prob > 0.0) h -= prob * lp[y];
  }
  return h < 0.0 ? 0.0 : h;
}

}  // namespace dpolab
