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
#include <set>
#include <utility>

#include "dpolab/errors.h"

namespace dpolab {
namespace {

constexpr char kDefaultPresets[] = R"({
  "strong": {"kind": "bradley_terry", "misalignment": 0.05, "noise_temperature": 0.5},
  "weak":   {"kind": "bradley_terry", "misalignment": 0.9,  "noise_temperature": 1.0},
  "oracle": {"kind": "deterministic", "misalignment": 0.0,  "noise_temperature": 1.0}
})";

struct ParseContext {
  std::string_view text;
  std::string source;
  std::vector<std::string> defaulted;

  // 1-based line of the first occurrence of "key" in the source text.
  size_t LineOf(std::string_view key) const {
    const std::string needle = "\"" + std::string(key) + "\"";
    const size_t pos = text.find(needle);
    if (pos == std::string_view::npos) return 0;
    return static_cast<size_t>(std::count(text.begin(), text.begin() + pos, '\n')) + 1;
  }

  [[noreturn]] void Fail(std::string_view key, const std::string& message) const {
    std::string where = source;
    const size_t line = key.empty() ? 0 : LineOf(key);
    if (line > 0) where += ":" + std::to_string(line);
    throw ConfigError(where + ": " + message);
  }
};

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path, ParseContext& ctx)
      : json_(j), path_(std::move(path)), ctx_(ctx) {
    if (!json_.is_object()) ctx_.Fail(LastSegment(), Qualified("") + " must be an object");
  }

  bool Has(const std::string& key) {
    known_.insert(key);
    return json_.contains(key);
  }

  const Json& Raw(const std::string& key) {
    known_.insert(key);
    return json_.at(key);
  }

  template <typename T>
  T Get(const std::string& key, T fallback) {
    if (!Has(key)) {
      ctx_.defaulted.push_back(Qualified(key));
      return fallback;
    }
    return Convert<T>(key);
  }

  template <typename T>
  T Require(const std::string& key) {
    if (!Has(key)) ctx_.Fail(LastSegment(), "missing required key " + Qualified(key));
    return Convert<T>(key);
  }

  std::string Qualified(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  // Rejects keys that were never asked for.
  void Finish() const {
    for (const auto& item : json_.items()) {
      if (!known_.contains(item.key())) {
        ctx_.Fail(item.key(), "unknown key " + Qualified(item.key()));
      }
    }
  }

 private:
  template <typename T>
  T Convert(const std::string& key) {
    const Json& v = json_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) ctx_.Fail(key, Qualified(key) + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                     v.get<int64_t>() < 0)) {
        ctx_.Fail(key, Qualified(key) + " must be a nonnegative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) ctx_.Fail(key, Qualified(key) + " must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) ctx_.Fail(key, Qualified(key) + " must be a string");
    }
    return v.get<T>();
  }

  std::string LastSegment() const {
    const size_t dot = path_.rfind('.');
    return dot == std::string::npos ? path_ : path_.substr(dot + 1);
  }

  const Json& json_;
  std::string path_;
  ParseContext& ctx_;
  std::set<std::string> known_;
};

UniverseConfig ParseUniverse(const Json& j, ParseContext& ctx) {
  ObjectReader r(j, "universe", ctx);
  UniverseConfig d;
  UniverseConfig c;
  c.num_train_prompts = r.Get("num_train_prompts", d.num_train_prompts);
  c.num_eval_prompts = r.Get("num_eval_prompts", d.num_eval_prompts);
  c.num_probe_prompts = r.Get("num_probe_prompts", d.num_probe_prompts);
  c.responses_per_prompt = r.Get("responses_per_prompt", d.responses_per_prompt);
  c.feature_dim = r.Get("feature_dim", d.feature_dim);
  c.feature_scale = r.Get("feature_scale", d.feature_scale);
  c.true_reward_scale = r.Get("true_reward_scale", d.true_reward_scale);
  c.reward_offset_scale = r.Get("reward_offset_scale", d.reward_offset_scale);
  c.misalignment_rho = r.Get("misalignment_rho", d.misalignment_rho);
  c.tabular_mode = r.Get("tabular_mode", d.tabular_mode);
  c.seed = r.Get<uint64_t>("seed", d.seed);
  r.Finish();
  return c;
}

DpoConfig ParseDpo(const Json& j, const DpoConfig& d, ParseContext& ctx) {
  ObjectReader r(j, "train.dpo", ctx);
  DpoConfig c;
  c.beta = r.Get("beta", d.beta);
  c.learning_rate = r.Get("learning_rate", d.learning_rate);
  const std::string opt = r.Get<std::string>(
      "optimizer", d.optimizer == OptimizerKind::kAdam ? "adam" : "sgd");
  if (opt == "adam") {
    c.optimizer = OptimizerKind::kAdam;
  } else if (opt == "sgd") {
    c.optimizer = OptimizerKind::kSgd;
  } else {
    ctx.Fail("optimizer", "train.dpo.optimizer must be \"adam\" or \"sgd\"");
  }
  c.adam_beta1 = r.Get("adam_beta1", d.adam_beta1);
  c.adam_beta2 = r.Get("adam_beta2", d.adam_beta2);
  c.adam_eps = r.Get("adam_eps", d.adam_eps);
  c.weight_decay = r.Get("weight_decay", d.weight_decay);
  c.warmup_ratio = r.Get("warmup_ratio", d.warmup_ratio);
  const std::string schedule = r.Get<std::string>(
      "schedule", d.schedule == LrSchedule::kCosine ? "cosine" : "constant");
  if (schedule == "constant") {
    c.schedule = LrSchedule::kConstant;
  } else if (schedule == "cosine") {
    c.schedule = LrSchedule::kCosine;
  } else {
    ctx.Fail("schedule", "train.dpo.schedule must be \"constant\" or \"cosine\"");
  }
  c.updates_per_sample = r.Get("updates_per_sample", d.updates_per_sample);
  c.max_steps = r.Get("max_steps", d.max_steps);
  r.Finish();
  return c;
}

SelectionConfig ParseSelection(const Json& j, const SelectionConfig& d,
                               ParseContext& ctx) {
  ObjectReader r(j, "train.selection", ctx);
  SelectionConfig c;
  c.batch_prompts = r.Get("batch_prompts", d.batch_prompts);
  c.candidates_per_prompt = r.Get("candidates_per_prompt", d.candidates_per_prompt);
  c.apl_top_prompts = r.Get("apl_top_prompts", d.apl_top_prompts);
  c.label_budget = r.Get("label_budget", d.label_budget);
  r.Finish();
  return c;
}

SftConfig ParseSft(const Json& j, const SftConfig& d, ParseContext& ctx) {
  ObjectReader r(j, "train.sft", ctx);
  SftConfig c;
  c.learning_rate = r.Get("learning_rate", d.learning_rate);
  c.epochs = r.Get("epochs", d.epochs);
  c.batch = r.Get("batch", d.batch);
  r.Finish();
  return c;
}

TrainConfig ParseTrain(const Json* j, ParseContext& ctx) {
  TrainConfig preset = DefaultTrainConfig();
  const Json empty = Json::object();
  ObjectReader r(j ? *j : empty, "train", ctx);
  TrainConfig c = preset;
  c.dpo = ParseDpo(r.Has("dpo") ? r.Raw("dpo") : empty, preset.dpo, ctx);
  c.selection = ParseSelection(r.Has("selection") ? r.Raw("selection") : empty,
                               preset.selection, ctx);
  c.sft = ParseSft(r.Has("sft") ? r.Raw("sft") : empty, preset.sft, ctx);
  c.log_selections = r.Get("log_selections", preset.log_selections);
  r.Finish();
  return c;
}

JudgeSpec ParseJudge(const Json& j, const std::string& path, const Json& presets,
                     ParseContext& ctx) {
  Json entry = j;
  if (j.is_string()) entry = Json{{"label", j.get<std::string>()},
                                  {"preset", j.get<std::string>()}};
  ObjectReader r(entry, path, ctx);
  JudgeSpec s;
  s.label = r.Require<std::string>("label");
  Json base = Json{{"kind", "bradley_terry"},
                   {"misalignment", 0.0},
                   {"noise_temperature", 1.0}};
  if (r.Has("preset")) {
    const std::string name = r.Require<std::string>("preset");
    if (!presets.contains(name)) ctx.Fail("preset", "unknown judge preset " + name);
    base = presets.at(name);
  }
  const std::string kind =
      r.Has("kind") ? r.Require<std::string>("kind") : base.at("kind").get<std::string>();
  try {
    s.kind = ParseJudgeKind(kind);
  } catch (const ConfigError& e) {
    ctx.Fail("kind", e.what());
  }
  s.misalignment = r.Has("misalignment") ? r.Require<double>("misalignment")
                                          : base.at("misalignment").get<double>();
  s.noise_temperature = r.Has("noise_temperature")
                            ? r.Require<double>("noise_temperature")
                            : base.at("noise_temperature").get<double>();
  s.seed = r.Get<uint64_t>("seed", 0);
  r.Finish();
  try {
    ValidateJudgeSpec(s);
  } catch (const ConfigError& e) {
    ctx.Fail(s.label, e.what());
  }
  return s;
}

std::vector<JudgeSpec> ParseJudgeList(const Json& j, const std::string& key,
                                      const Json& presets, ParseContext& ctx) {
  if (!j.is_array() || j.empty()) ctx.Fail(key, key + " must be a non-empty list");
  std::vector<JudgeSpec> out;
  std::set<std::string> labels;
  for (size_t i = 0; i < j.size(); ++i) {
    JudgeSpec s = ParseJudge(j[i], key + "[" + std::to_string(i) + "]", presets, ctx);
    if (!labels.insert(s.label).second) {
      ctx.Fail(s.label, "duplicate judge label " + s.label + " in " + key);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void Validate(const ExperimentGrid& g, ParseContext& ctx) {
  auto wrap = [&](std::string_view key, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      ctx.Fail(key, e.what());
    }
  };
  if (!g.universe_path) wrap("universe", [&] { ValidateUniverseConfig(g.universe); });
  wrap("dpo", [&] { ValidateDpoConfig(g.train.dpo); });
  wrap("selection", [&] { ValidateSelectionConfig(g.train.selection); });
  wrap("sft", [&] {
    if (!(g.train.sft.learning_rate > 0.0)) {
      throw ConfigError("train.sft.learning_rate must be > 0");
    }
    if (g.train.sft.batch < 1) throw ConfigError("train.sft.batch must be >= 1");
  });
  if (!g.universe_path &&
      g.train.selection.batch_prompts > g.universe.num_train_prompts) {
    ctx.Fail("batch_prompts",
             "train.selection.batch_prompts exceeds universe.num_train_prompts");
  }
  if (g.eval.n_trials < 1) ctx.Fail("n_trials", "eval.n_trials must be >= 1");
  if (!(g.eval.collapse_fraction > 0.0 && g.eval.collapse_fraction < 1.0)) {
    ctx.Fail("collapse_fraction", "eval.collapse_fraction must lie in (0, 1)");
  }
}

}  // namespace

const Json& DefaultJudgePresets() {
  static const Json presets = Json::parse(kDefaultPresets);
  return presets;
}

ExperimentGrid ParseConfigText(std::string_view text, std::string_view source) {
  ParseContext ctx{text, std::string(source), {}};
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const size_t byte = std::min<size_t>(e.byte, text.size());
    const size_t line =
        static_cast<size_t>(std::count(text.begin(), text.begin() + byte, '\n')) + 1;
    throw ConfigError(ctx.source + ":" + std::to_string(line) + ": " + e.what());
  }

  ExperimentGrid g;
  ObjectReader r(root, "", ctx);

  Json presets = DefaultJudgePresets();
  if (r.Has("judge_presets")) {
    const Json& extra = r.Raw("judge_presets");
    if (!extra.is_object()) ctx.Fail("judge_presets", "judge_presets must be an object");
    for (const auto& item : extra.items()) {
      ObjectReader pr(item.value(), "judge_presets." + item.key(), ctx);
      Json p{{"kind", pr.Get<std::string>("kind", "bradley_terry")},
             {"misalignment", pr.Get<double>("misalignment", 0.0)},
             {"noise_temperature", pr.Get<double>("noise_temperature", 1.0)}};
      pr.Finish();
      presets[item.key()] = p;
    }
  }

  const bool has_universe = r.Has("universe");
  const bool has_path = r.Has("universe_path");
  if (has_universe && has_path) {
    ctx.Fail("universe_path", "give either universe or universe_path, not both");
  }
  if (has_path) {
    g.universe_path = r.Require<std::string>("universe_path");
  } else {
    g.universe = ParseUniverse(has_universe ? r.Raw("universe") : Json::object(), ctx);
  }

  g.train = ParseTrain(r.Has("train") ? &r.Raw("train") : nullptr, ctx);

  if (!r.Has("selectors")) ctx.Fail("", "missing required key selectors");
  const Json& selectors = r.Raw("selectors");
  if (!selectors.is_array() || selectors.empty()) {
    ctx.Fail("selectors", "selectors must be a non-empty list");
  }
  for (const Json& s : selectors) {
    if (!s.is_string()) ctx.Fail("selectors", "selectors must be strings");
    SelectorKind kind;
    try {
      kind = ParseSelector(s.get<std::string>());
    } catch (const ConfigError& e) {
      ctx.Fail("selectors", e.what());
    }
    if (std::find(g.selectors.begin(), g.selectors.end(), kind) != g.selectors.end()) {
      ctx.Fail("selectors", "selector listed twice: " + s.get<std::string>());
    }
    g.selectors.push_back(kind);
  }

  if (!r.Has("annotators")) ctx.Fail("", "missing required key annotators");
  g.annotators = ParseJudgeList(r.Raw("annotators"), "annotators", presets, ctx);
  if (r.Has("evaluators")) {
    g.evaluators = ParseJudgeList(r.Raw("evaluators"), "evaluators", presets, ctx);
  } else {
    g.evaluators = g.annotators;
    ctx.defaulted.push_back("evaluators");
  }

  if (r.Has("seeds")) {
    const Json& seeds = r.Raw("seeds");
    if (!seeds.is_array() || seeds.empty()) ctx.Fail("seeds", "seeds must be a non-empty list");
    for (const Json& s : seeds) {
      if (!s.is_number_unsigned()) ctx.Fail("seeds", "seeds must be nonnegative integers");
      const uint64_t seed = s.get<uint64_t>();
      if (std::find(g.seeds.begin(), g.seeds.end(), seed) != g.seeds.end()) {
        ctx.Fail("seeds", "seed listed twice: " + std::to_string(seed));
      }
      g.seeds.push_back(seed);
    }
  } else {
    g.seeds = {42, 43, 44};
    ctx.defaulted.push_back("seeds");
  }

  {
    const Json empty = Json::object();
    ObjectReader er(r.Has("eval") ? r.Raw("eval") : empty, "eval", ctx);
    g.eval.n_trials = er.Get("n_trials", g.eval.n_trials);
    g.eval.collapse_fraction = er.Get("collapse_fraction", g.eval.collapse_fraction);
    er.Finish();
  }
  g.output_dir = r.Get<std::string>("output_dir", g.output_dir.string());
  r.Finish();

  Validate(g, ctx);
  g.defaulted = std::move(ctx.defaulted);
  return g;
}

ExperimentGrid ParseConfig(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  ExperimentGrid g = ParseConfigText(text, path.string());
  if (g.universe_path && g.universe_path->is_relative()) {
    g.universe_path = path.parent_path() / *g.universe_path;
  }
  return g;
}

Json GridToJson(const ExperimentGrid& grid) {
  Json j = Json::object();
  if (grid.universe_path) {
    j["universe_path"] = grid.universe_path->string();
  } else {
    j["universe"] = UniverseConfigToJson(grid.universe);
  }
  j["train"] = Json{{"dpo", DpoConfigToJson(grid.train.dpo)},
                    {"selection", SelectionConfigToJson(grid.train.selection)},
                    {"sft", SftConfigToJson(grid.train.sft)},
                    {"log_selections", grid.train.log_selections}};
  Json selectors = Json::array();
  for (SelectorKind s : grid.selectors) selectors.push_back(SelectorName(s));
  j["selectors"] = selectors;
  Json annotators = Json::array();
  for (const JudgeSpec& s : grid.annotators) annotators.push_back(JudgeSpecToJson(s));
  j["annotators"] = annotators;
  Json evaluators = Json::array();
  for (const JudgeSpec& s : grid.evaluators) evaluators.push_back(JudgeSpecToJson(s));
  j["evaluators"] = evaluators;
  j["seeds"] = grid.seeds;
  j["eval"] = Json{{"n_trials", grid.eval.n_trials},
                   {"collapse_fraction", grid.eval.collapse_fraction}};
  j["output_dir"] = grid.output_dir.string();
  return j;
}

}  // namespace dpolab
