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

// Parametric preference oracles. A judge scores responses with a proxy reward
// that blends the latent true reward with the universe's exploit direction:
//
//   proxy(x, y) = (1 - lambda) * r*(x, y) + lambda * dot(g, phi(x, y))
//
// and labels pairs either by Bradley-Terry sampling at temperature tau or by
// a deterministic argmax.

#ifndef DPOLAB_JUDGES_H_
#define DPOLAB_JUDGES_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "dpolab/rng.h"
#include "dpolab/universe.h"

namespace dpolab {

enum class JudgeKind { kBradleyTerry, kDeterministic };

std::string_view JudgeKindName(JudgeKind kind);
JudgeKind ParseJudgeKind(std::string_view name);

struct JudgeSpec {
  std::string label;
  JudgeKind kind = JudgeKind::kBradleyTerry;
  double misalignment = 0.0;        // lambda
  double noise_temperature = 1.0;   // tau
  uint64_t seed = 0;

  bool operator==(const JudgeSpec&) const = default;
};

// Throws ConfigError.
void ValidateJudgeSpec(const JudgeSpec& spec);

// Anything that can label a pair. Sees only (x, y1, y2), never a policy.
class PreferenceOracle {
 public:
  virtual ~PreferenceOracle() = default;
  // Returns the preferred one of y1, y2.
  virtual size_t Prefer(const PromptRecord& x, size_t y1, size_t y2) = 0;
  virtual const std::string& label() const = 0;
};

class Judge : public PreferenceOracle {
 public:
  // Binds the universe's proxy direction. The rng stream is seeded from
  // (spec.seed, spec.label). Throws ConfigError on an invalid spec.
  Judge(JudgeSpec spec, const PromptUniverse& universe);

  const JudgeSpec& spec() const { return spec_; }
  const std::string& label() const override { return spec_.label; }

  double ProxyReward(const PromptRecord& x, size_t y) const;

  // sigma((proxy(y1) - proxy(y2)) / tau). Bradley-Terry judges only.
  double PreferenceProbability(const PromptRecord& x, size_t y1,
                               size_t y2) const;

  // Bradley-Terry: one rng draw. Deterministic: argmax proxy, ties to the
  // lower index. Throws ContractError when y1 == y2.
  size_t Prefer(const PromptRecord& x, size_t y1, size_t y2) override;

 private:
  JudgeSpec spec_;
  const PromptUniverse* universe_;
  Rng rng_;
};

Judge MakeJudge(const JudgeSpec& spec, const PromptUniverse& universe);

}  // namespace dpolab

#endif  // DPOLAB_JUDGES_H_
