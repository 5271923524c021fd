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

// JSON documents for universes, policies and configuration blocks, plus the
// small text helpers shared by the CSV writers.

#ifndef DPOLAB_SERIALIZATION_H_
#define DPOLAB_SERIALIZATION_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "dpolab/dpo.h"
#include "dpolab/judges.h"
#include "dpolab/policy.h"
#include "dpolab/selection.h"
#include "dpolab/trainer.h"
#include "dpolab/universe.h"
#include "json.hpp"

namespace dpolab {

using Json = nlohmann::ordered_json;

Json UniverseConfigToJson(const UniverseConfig& c);
Json UniverseToJson(const PromptUniverse& u);
// Throws ConfigError on malformed documents.
PromptUniverse UniverseFromJson(const Json& j);

// {label, d, theta[]}
Json PolicyToJson(const Policy& p);
Policy PolicyFromJson(const Json& j);

Json JudgeSpecToJson(const JudgeSpec& s);
Json DpoConfigToJson(const DpoConfig& c);
Json SelectionConfigToJson(const SelectionConfig& c);
Json SftConfigToJson(const SftConfig& c);
Json TrainConfigToJson(const TrainConfig& c);
Json CountersToJson(const OpCounters& c);

// Shortest decimal that is stable across runs: "%.12g", "nan" and "inf"
// spelled out.
std::string FormatDouble(double v);

// Lower-case hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);

Json ReadJsonFile(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void WriteJsonFile(const std::filesystem::path& path, const Json& j);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace dpolab

#endif  // DPOLAB_SERIALIZATION_H_
