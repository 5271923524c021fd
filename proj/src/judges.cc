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

#include "dpolab/judges.h"

#include <cmath>

#include "dpolab/dpo.h"
#include "dpolab/errors.h"

namespace dpolab {

std::string_view JudgeKindName(JudgeKind kind) {
  return kind == JudgeKind::kDeterministic ? "deterministic" : "bradley_terry";
}

JudgeKind ParseJudgeKind(std::string_view name) {
  if (name == "bradley_terry") return JudgeKind::kBradleyTerry;
  if (name == "deterministic") return JudgeKind::kDeterministic;
  throw ConfigError("unknown judge kind: " + std::string(name));
}

void ValidateJudgeSpec(const JudgeSpec& spec) {
  if (spec.label.empty()) throw ConfigError("judge label must be non-empty");
  // Labels become CSV fields and directory names.
  for (char c : spec.label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) {
      throw ConfigError("judge label " + spec.label +
                        " may only contain letters, digits, '_', '-' and '.'");
    }
  }
  if (!(spec.misalignment >= 0.0 && spec.misalignment <= 1.0)) {
    throw ConfigError("judge " + spec.label + ": misalignment must lie in [0, 1]");
  }
  if (!(spec.noise_temperature > 0.0) || !std::isfinite(spec.noise_temperature)) {
    throw ConfigError("judge " + spec.label +
                      ": noise_temperature must be positive and finite");
  }
}

Judge::Judge(JudgeSpec spec, const PromptUniverse& universe)
    : spec_(std::move(spec)),
      universe_(&universe),
      rng_(DeriveSeed(spec_.seed, "judge/" + spec_.label)) {
  ValidateJudgeSpec(spec_);
}

double Judge::ProxyReward(const PromptRecord& x, size_t y) const {
  if (y >= x.num_responses()) throw ContractError("response index out of range");
  const auto row = static_cast<Eigen::Index>(y);
  const double lambda = spec_.misalignment;
  const double exploit = x.features.row(row).dot(universe_->proxy_bias_direction);
  if (lambda == 0.0) return x.true_reward[row];
  if (lambda == 1.0) return exploit;
  return (1.0 - lambda) * x.true_reward[row] + lambda * exploit;
}

double Judge::PreferenceProbability(const PromptRecord& x, size_t y1,
                                    size_t y2) const {
  if (spec_.kind != JudgeKind::kBradleyTerry) {
    throw ContractError("PreferenceProbability requires a bradley_terry judge");
  }
  return Sigmoid((ProxyReward(x, y1) - ProxyReward(x, y2)) /
                 spec_.noise_temperature);
}

size_t Judge::Prefer(const PromptRecord& x, size_t y1, size_t y2) {
  if (y1 == y2) throw ContractError("judge queried with identical responses");
  if (spec_.kind == JudgeKind::kDeterministic) {
    const double r1 = ProxyReward(x, y1);
    const double r2 = ProxyReward(x, y2);
    if (r1 == r2) return y1 < y2 ? y1 : y2;
    return r1 > r2 ? y1 : y2;
  }
  return rng_.Uniform01() < PreferenceProbability(x, y1, y2) ? y1 : y2;
}

Judge MakeJudge(const JudgeSpec& spec, const PromptUniverse& universe) {
  return Judge(spec, universe);
}

}  // namespace dpolab
