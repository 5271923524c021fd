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

// Experiment grid configuration. Config files are JSON; every key is checked
// against the schema (unknown keys are rejected) and every default that was
// filled in is recorded so manifests are self-describing.

#ifndef DPOLAB_CONFIG_H_
#define DPOLAB_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpolab/judges.h"
#include "dpolab/selection.h"
#include "dpolab/serialization.h"
#include "dpolab/trainer.h"
#include "dpolab/universe.h"

namespace dpolab {

struct EvalSettings {
  size_t n_trials = 2000;
  double collapse_fraction = 0.1;
};

struct ExperimentGrid {
  // Exactly one of the two is used: a generated universe from `universe`, or
  // a serialized one loaded from `universe_path`.
  UniverseConfig universe;
  std::optional<std::filesystem::path> universe_path;
  TrainConfig train;
  std::vector<SelectorKind> selectors;
  std::vector<JudgeSpec> annotators;
  std::vector<JudgeSpec> evaluators;
  std::vector<uint64_t> seeds;
  EvalSettings eval;
  std::filesystem::path output_dir = "runs";
  // Dotted paths of every field that took its default value.
  std::vector<std::string> defaulted;

  size_t num_runs() const {
    return selectors.size() * annotators.size() * seeds.size();
  }
};

// Built-in judge presets, as a JSON object keyed by preset name. Configs may
// add or override presets under "judge_presets".
const Json& DefaultJudgePresets();

// Parses and validates. `source` names the input in error messages. Throws
// ConfigError with line context.
ExperimentGrid ParseConfigText(std::string_view text, std::string_view source);
ExperimentGrid ParseConfig(const std::filesystem::path& path);

// Fully materialized configuration, suitable for echoing into manifests and
// for round-tripping through ParseConfigText.
Json GridToJson(const ExperimentGrid& grid);

}  // namespace dpolab

#endif  // DPOLAB_CONFIG_H_
