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

#include "dpolab/serialization.h"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpolab/errors.h"

namespace dpolab {
namespace {

Json VectorToJson(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd VectorFromJson(const Json& j, std::string_view what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ConfigError(std::string(what) + " must contain numbers");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

template <typename T>
T Field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad field ") + key + ": " + e.what());
  }
}

}  // namespace

Json UniverseConfigToJson(const UniverseConfig& c) {
  return Json{{"num_train_prompts", c.num_train_prompts},
              {"num_eval_prompts", c.num_eval_prompts},
              {"num_probe_prompts", c.num_probe_prompts},
              {"responses_per_prompt", c.responses_per_prompt},
              {"feature_dim", c.feature_dim},
              {"feature_scale", c.feature_scale},
              {"true_reward_scale", c.true_reward_scale},
              {"reward_offset_scale", c.reward_offset_scale},
              {"misalignment_rho", c.misalignment_rho},
              {"tabular_mode", c.tabular_mode},
              {"seed", c.seed}};
}

Json UniverseToJson(const PromptUniverse& u) {
  Json prompts = Json::array();
  for (const PromptRecord& p : u.prompts) {
    Json features = Json::array();
    for (Eigen::Index r = 0; r < p.features.rows(); ++r) {
      features.push_back(VectorToJson(p.features.row(r).transpose()));
    }
    Json record{{"prompt_id", p.prompt_id},
                {"role", RoleName(p.role)},
                {"features", std::move(features)},
                {"true_reward", VectorToJson(p.true_reward)}};
    record["correct_response"] =
        p.correct_response ? Json(*p.correct_response) : Json(nullptr);
    prompts.push_back(std::move(record));
  }
  return Json{{"config", UniverseConfigToJson(u.config)},
              {"prompts", std::move(prompts)},
              {"proxy_bias_direction", VectorToJson(u.proxy_bias_direction)},
              {"probe_direction", VectorToJson(u.probe_direction)}};
}

PromptUniverse UniverseFromJson(const Json& j) {
  PromptUniverse u;
  const Json& c = j.at("config");
  u.config.num_train_prompts = Field<size_t>(c, "num_train_prompts");
  u.config.num_eval_prompts = Field<size_t>(c, "num_eval_prompts");
  u.config.num_probe_prompts = Field<size_t>(c, "num_probe_prompts");
  u.config.responses_per_prompt = Field<size_t>(c, "responses_per_prompt");
  u.config.feature_dim = Field<size_t>(c, "feature_dim");
  u.config.feature_scale = Field<double>(c, "feature_scale");
  u.config.true_reward_scale = Field<double>(c, "true_reward_scale");
  u.config.reward_offset_scale = Field<double>(c, "reward_offset_scale");
  u.config.misalignment_rho = Field<double>(c, "misalignment_rho");
  u.config.tabular_mode = Field<bool>(c, "tabular_mode");
  u.config.seed = Field<uint64_t>(c, "seed");
  u.proxy_bias_direction =
      VectorFromJson(j.at("proxy_bias_direction"), "proxy_bias_direction");
  u.probe_direction = VectorFromJson(j.at("probe_direction"), "probe_direction");
  for (const Json& pj : j.at("prompts")) {
    PromptRecord p;
    p.prompt_id = Field<size_t>(pj, "prompt_id");
    p.role = ParseRole(Field<std::string>(pj, "role"));
    const Json& rows = pj.at("features");
    p.features.resize(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      const Eigen::VectorXd row = VectorFromJson(rows[r], "features row");
      if (row.size() != p.features.cols()) throw ConfigError("ragged features");
      p.features.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    p.true_reward = VectorFromJson(pj.at("true_reward"), "true_reward");
    if (pj.contains("correct_response") && !pj["correct_response"].is_null()) {
      p.correct_response = Field<size_t>(pj, "correct_response");
    }
    u.prompts.push_back(std::move(p));
  }
  return u;
}

Json PolicyToJson(const Policy& p) {
  return Json{{"label", p.label},
              {"d", p.feature_dim()},
              {"theta", VectorToJson(p.theta)}};
}

Policy PolicyFromJson(const Json& j) {
  Policy p(VectorFromJson(j.at("theta"), "theta"), Field<std::string>(j, "label"));
  if (Field<size_t>(j, "d") != p.feature_dim()) {
    throw ConfigError("policy d does not match theta length");
  }
  return p;
}

Json JudgeSpecToJson(const JudgeSpec& s) {
  return Json{{"label", s.label},
              {"kind", JudgeKindName(s.kind)},
              {"misalignment", s.misalignment},
              {"noise_temperature", s.noise_temperature},
              {"seed", s.seed}};
}

Json DpoConfigToJson(const DpoConfig& c) {
  return Json{{"beta", c.beta},
              {"learning_rate", c.learning_rate},
              {"optimizer", c.optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"weight_decay", c.weight_decay},
              {"warmup_ratio", c.warmup_ratio},
              {"schedule", c.schedule == LrSchedule::kCosine ? "cosine" : "constant"},
              {"updates_per_sample", c.updates_per_sample},
              {"max_steps", c.max_steps}};
}

Json SelectionConfigToJson(const SelectionConfig& c) {
  return Json{{"batch_prompts", c.batch_prompts},
              {"candidates_per_prompt", c.candidates_per_prompt},
              {"apl_top_prompts", c.apl_top_prompts},
              {"label_budget", c.label_budget}};
}

Json SftConfigToJson(const SftConfig& c) {
  return Json{{"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch", c.batch}};
}

Json TrainConfigToJson(const TrainConfig& c) {
  return Json{{"dpo", DpoConfigToJson(c.dpo)},
              {"selection", SelectionConfigToJson(c.selection)},
              {"selector", SelectorName(c.selector)},
              {"annotator", JudgeSpecToJson(c.annotator)},
              {"sft", SftConfigToJson(c.sft)},
              {"run_seed", c.run_seed}};
}

Json CountersToJson(const OpCounters& c) {
  return Json{{"policy_logprob_evals", c.policy_logprob_evals},
              {"ref_logprob_evals", c.ref_logprob_evals},
              {"judge_queries", c.judge_queries},
              {"generated_samples", c.generated_samples}};
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json ReadJsonFile(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void WriteJsonFile(const std::filesystem::path& path, const Json& j) {
  WriteTextFile(path, j.dump(2) + "\n");
}

}  // namespace dpolab
