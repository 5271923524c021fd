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


#include "dpolab/config.h"

#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "dpolab/errors.h"

namespace dpolab {
namespace {

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string ErrorOf(const std::string& text) {
  try {
    ParseConfigText(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, MinimalConfigIsOneRun) {
  const ExperimentGrid g = ParseConfigText(
      R"({"selectors": ["random"], "annotators": ["strong"], "seeds": [7]})",
      "cfg.json");
  EXPECT_EQ(g.num_runs(), 1u);
  ASSERT_EQ(g.annotators.size(), 1u);
  EXPECT_EQ(g.annotators[0].label, "strong");
  EXPECT_EQ(g.annotators[0].misalignment, 0.05);
  EXPECT_EQ(g.annotators[0].noise_temperature, 0.5);
  ASSERT_EQ(g.evaluators.size(), 1u);
  EXPECT_EQ(g.evaluators[0], g.annotators[0]);
  EXPECT_EQ(g.seeds, std::vector<uint64_t>{7});
}

TEST(ConfigTest, DefaultsAreMaterializedAndAnnotated) {
  const ExperimentGrid g =
      ParseConfigText(R"({"selectors": ["apl"], "annotators": ["weak"]})", "cfg.json");
  EXPECT_EQ(g.train.dpo.beta, 0.1);
  EXPECT_TRUE(Contains(g.defaulted, "train.dpo.beta"));
  EXPECT_TRUE(Contains(g.defaulted, "seeds"));
  EXPECT_TRUE(Contains(g.defaulted, "evaluators"));
  EXPECT_EQ(g.seeds, (std::vector<uint64_t>{42, 43, 44}));
  EXPECT_EQ(g.train.dpo.max_steps, 625u);
  const Json echoed = GridToJson(g);
  EXPECT_EQ(echoed["train"]["dpo"]["beta"].get<double>(), 0.1);
  EXPECT_EQ(echoed["seeds"].size(), 3u);

  const ExperimentGrid explicit_beta = ParseConfigText(
      R"({"selectors": ["apl"], "annotators": ["weak"], "train": {"dpo": {"beta": 0.2}}})",
      "cfg.json");
  EXPECT_EQ(explicit_beta.train.dpo.beta, 0.2);
  EXPECT_FALSE(Contains(explicit_beta.defaulted, "train.dpo.beta"));
}

TEST(ConfigTest, RejectsDuplicateSeeds) {
  const std::string e =
      ErrorOf(R"({"selectors": ["random"], "annotators": ["strong"], "seeds": [1, 1]})");
  EXPECT_NE(e.find("seed listed twice"), std::string::npos) << e;
}

TEST(ConfigTest, RejectsUnknownKeysWithLine) {
  const std::string e = ErrorOf(R"({
  "selectors": ["random"],
  "annotators": ["strong"],
  "train": {"dpo": {"betta": 0.1}}
})");
  EXPECT_NE(e.find("unknown key train.dpo.betta"), std::string::npos) << e;
  EXPECT_NE(e.find("cfg.json:4"), std::string::npos) << e;
  EXPECT_NE(ErrorOf(R"({"selectors": ["random"], "annotators": ["strong"], "extra": 1})")
                .find("unknown key extra"),
            std::string::npos);
}

TEST(ConfigTest, RejectsInvalidValues) {
  EXPECT_NE(ErrorOf(R"({"annotators": ["strong"]})").find("selectors"), std::string::npos);
  EXPECT_NE(ErrorOf(R"({"selectors": ["random"]})").find("annotators"), std::string::npos);
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["badge"], "annotators": ["strong"]})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random"], "annotators": ["nope"]})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random", "random"], "annotators": ["weak"]})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random"], "annotators": ["weak"],
                           "train": {"dpo": {"beta": -1}}})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random"], "annotators": ["weak"],
                           "universe": {"misalignment_rho": 2}})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random"], "annotators": ["weak"],
                           "universe": {"num_train_prompts": 10}})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random"], "annotators": ["weak"],
                           "train": {"dpo": {"max_steps": "ten"}}})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random"], "annotators": ["weak"],
                           "eval": {"collapse_fraction": 1.5}})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random"], "annotators": ["weak"],
                           "universe": {}, "universe_path": "u.json"})").empty());
  EXPECT_FALSE(ErrorOf(R"({"selectors": ["random"],
                           "annotators": [{"label": "a", "misalignment": 3}]})").empty());
}

TEST(ConfigTest, ParseErrorsCarryLine) {
  const std::string e = ErrorOf("{\n  \"selectors\": [\"random\"],\n  oops\n}");
  EXPECT_NE(e.find("cfg.json:3"), std::string::npos) << e;
}

TEST(ConfigTest, JudgeObjectsAndCustomPresets) {
  const ExperimentGrid g = ParseConfigText(R"({
    "judge_presets": {"safety": {"kind": "bradley_terry", "misalignment": 0.4,
                                 "noise_temperature": 0.8}},
    "selectors": ["random", "apl"],
    "annotators": [{"label": "strong_hot", "preset": "strong", "noise_temperature": 2.0},
                   "safety"],
    "evaluators": ["oracle", {"label": "custom", "kind": "deterministic",
                              "misalignment": 0.5}],
    "seeds": [1, 2, 3]
  })", "cfg.json");
  EXPECT_EQ(g.num_runs(), 12u);
  EXPECT_EQ(g.annotators[0].misalignment, 0.05);
  EXPECT_EQ(g.annotators[0].noise_temperature, 2.0);
  EXPECT_EQ(g.annotators[1].misalignment, 0.4);
  EXPECT_EQ(g.evaluators[0].kind, JudgeKind::kDeterministic);
  EXPECT_EQ(g.evaluators[1].label, "custom");
  EXPECT_EQ(g.evaluators[1].misalignment, 0.5);
}

TEST(ConfigTest, DefaultPresetsMatchDocumentedValues) {
  const Json& p = DefaultJudgePresets();
  EXPECT_EQ(p["strong"]["misalignment"].get<double>(), 0.05);
  EXPECT_EQ(p["strong"]["noise_temperature"].get<double>(), 0.5);
  EXPECT_EQ(p["weak"]["misalignment"].get<double>(), 0.9);
  EXPECT_EQ(p["weak"]["noise_temperature"].get<double>(), 1.0);
  EXPECT_EQ(p["oracle"]["kind"].get<std::string>(), "deterministic");
  EXPECT_EQ(p["oracle"]["misalignment"].get<double>(), 0.0);
}

}  // namespace
}  // namespace dpolab
