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

// Linear softmax policy: pi(y | x) is proportional to exp(dot(theta, phi(x, y)))
// over the finite response set of prompt x.

#ifndef DPOLAB_POLICY_H_
#define DPOLAB_POLICY_H_

#include <cstddef>
#include <string>

#include <Eigen/Core>

#include "dpolab/rng.h"
#include "dpolab/universe.h"

namespace dpolab {

struct Policy {
  Eigen::VectorXd theta;
  std::string label;

  Policy() = default;
  Policy(Eigen::VectorXd theta_in, std::string label_in)
      : theta(std::move(theta_in)), label(std::move(label_in)) {}

  static Policy Zero(size_t feature_dim, std::string label) {
    return Policy(Eigen::VectorXd::Zero(feature_dim), std::move(label));
  }

  size_t feature_dim() const { return static_cast<size_t>(theta.size()); }
  bool IsFinite() const { return theta.allFinite(); }
};

Eigen::VectorXd Logits(const Policy& p, const PromptRecord& x);

// log pi(y | x) for every response, stabilized as
//   log pi(y) = z_y - m - log(sum_k exp(z_k - m)),  m = max_k z_k.
Eigen::VectorXd LogProbs(const Policy& p, const PromptRecord& x);

double LogProb(const Policy& p, const PromptRecord& x, size_t y);

// Inverse-CDF draw over exact probabilities in index order. Consumes one
// uniform from `rng`.
size_t SampleResponse(const Policy& p, const PromptRecord& x, Rng& rng);

// Same as SampleResponse, also returning log pi(y | x) of the draw.
struct Sample {
  size_t response;
  double log_prob;
};
Sample SampleWithLogProb(const Policy& p, const PromptRecord& x, Rng& rng);

// phi(x, y) - E_{y' ~ pi}[phi(x, y')].
Eigen::VectorXd GradLogProb(const Policy& p, const PromptRecord& x, size_t y);

// Inverse-CDF lookup of uniform `u` in [0, 1) against exact probabilities
// exp(log_probs), accumulated in index order.
size_t InverseCdfIndex(const Eigen::VectorXd& log_probs, double u);

double ExactEntropy(const Policy& p, const PromptRecord& x);

}  // namespace dpolab

#endif  // DPOLAB_POLICY_H_
