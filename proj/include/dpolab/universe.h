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

// Synthetic preference environment: prompts with finite response sets,
// per-response feature vectors, latent true rewards, and the two unit
// directions that define the probe task and the proxy judges' exploit axis.

#ifndef DPOLAB_UNIVERSE_H_
#define DPOLAB_UNIVERSE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dpolab {

struct UniverseConfig {
  size_t num_train_prompts = 4096;
  size_t num_eval_prompts = 128;
  size_t num_probe_prompts = 1000;
  size_t responses_per_prompt = 4;
  // Ignored on input when tabular_mode is set (0 means "derive"); generation
  // writes the product num_prompts * responses_per_prompt back.
  size_t feature_dim = 32;
  double feature_scale = 1.0;
  double true_reward_scale = 1.0;
  // Standard deviation of the per-prompt constant added to every response's
  // true reward. Shifts all responses of a prompt equally.
  double reward_offset_scale = 0.1;
  double misalignment_rho = 0.0;
  bool tabular_mode = false;
  uint64_t seed = 0;

  size_t num_prompts() const {
    return num_train_prompts + num_eval_prompts + num_probe_prompts;
  }

  bool operator==(const UniverseConfig&) const = default;
};

enum class PromptRole { kTrain, kEval, kProbe };

std::string_view RoleName(PromptRole role);
PromptRole ParseRole(std::string_view name);

struct PromptRecord {
  size_t prompt_id = 0;
  PromptRole role = PromptRole::kTrain;
  // Row y is the feature vector of response y.
  Eigen::MatrixXd features;
  Eigen::VectorXd true_reward;
  // Present iff role == kProbe.
  std::optional<size_t> correct_response;

  size_t num_responses() const { return static_cast<size_t>(features.rows()); }

  bool operator==(const PromptRecord& other) const;
};

struct PromptUniverse {
  UniverseConfig config;
  std::vector<PromptRecord> prompts;
  Eigen::VectorXd proxy_bias_direction;  // g
  Eigen::VectorXd probe_direction;       // u

  size_t feature_dim() const {
    return static_cast<size_t>(probe_direction.size());
  }
  size_t responses_per_prompt() const { return config.responses_per_prompt; }

  const PromptRecord& prompt(size_t id) const;
  std::vector<size_t> PromptIds(PromptRole role) const;

  bool operator==(const PromptUniverse& other) const;
};

// Throws ConfigError naming the first violated bound.
void ValidateUniverseConfig(const UniverseConfig& config);

// Deterministic in `config` (including its seed).
PromptUniverse GenerateUniverse(const UniverseConfig& config);

// One-hot feature assignment for the tabular special case: response y of
// prompt x maps to coordinate x * V + y.
class TabularLayout {
 public:
  // Throws ConfigError on zero counts or index overflow.
  TabularLayout(size_t num_prompts, size_t responses_per_prompt);

  size_t num_prompts() const { return num_prompts_; }
  size_t responses_per_prompt() const { return responses_; }
  size_t feature_dim() const { return feature_dim_; }

  size_t Index(size_t prompt_index, size_t response) const;
  Eigen::MatrixXd Features(size_t prompt_index) const;

 private:
  size_t num_prompts_;
  size_t responses_;
  size_t feature_dim_;
};

TabularLayout MakeTabularFeatures(size_t num_prompts,
                                  size_t responses_per_prompt);

// Lists violated invariants; an empty list means the universe is valid.
std::vector<std::string> ValidateUniverse(const PromptUniverse& universe);

// Index of the largest entry; ties resolve to the lowest index.
size_t ArgmaxLowestIndex(const Eigen::VectorXd& values);

}  // namespace dpolab

#endif  // DPOLAB_UNIVERSE_H_
