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

#include "dpolab/universe.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "dpolab/errors.h"
#include "dpolab/rng.h"

namespace dpolab {
namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr double kCosineTolerance = 1e-6;
constexpr int kMaxTieRedraws = 1000;

// True when the top two entries are closer than a relative 1e-12.
bool HasTiedMaximum(const Eigen::VectorXd& values) {
  const size_t best = ArgmaxLowestIndex(values);
  const double top = values[best];
  const double tolerance = 1e-12 * (1.0 + std::abs(top));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (static_cast<size_t>(i) != best && top - values[i] <= tolerance) {
      return true;
    }
  }
  return false;
}

Eigen::VectorXd NormalVector(size_t dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (size_t i = 0; i < dim; ++i) v[i] = rng.Normal();
  return v;
}

Eigen::VectorXd RandomUnitVector(size_t dim, Rng& rng) {
  for (;;) {
    Eigen::VectorXd v = NormalVector(dim, rng);
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

// Unit vector orthogonal to `u` (itself unit). Undefined when dim == 1, where
// the caller only needs the orthogonal part for |rho| < 1.
Eigen::VectorXd OrthogonalUnitVector(const Eigen::VectorXd& u, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::VectorXd w = NormalVector(u.size(), rng);
    w -= w.dot(u) * u;
    // Second pass removes the residual left by cancellation.
    w -= w.dot(u) * u;
    const double norm = w.norm();
    if (norm > 1e-8) return w / norm;
  }
  throw ConfigError("feature_dim must be >= 2 when |misalignment_rho| < 1");
}

}  // namespace

std::string_view RoleName(PromptRole role) {
  switch (role) {
    case PromptRole::kTrain:
      return "train";
    case PromptRole::kEval:
      return "eval";
    case PromptRole::kProbe:
      return "probe";
  }
  return "train";
}

PromptRole ParseRole(std::string_view name) {
  if (name == "train") return PromptRole::kTrain;
  if (name == "eval") return PromptRole::kEval;
  if (name == "probe") return PromptRole::kProbe;
  throw ConfigError("unknown prompt role: " + std::string(name));
}

bool PromptRecord::operator==(const PromptRecord& other) const {
  return prompt_id == other.prompt_id && role == other.role &&
         features.rows() == other.features.rows() &&
         features.cols() == other.features.cols() &&
         features == other.features &&
         true_reward.size() == other.true_reward.size() &&
         true_reward == other.true_reward &&
         correct_response == other.correct_response;
}

bool PromptUniverse::operator==(const PromptUniverse& other) const {
  return config == other.config && prompts == other.prompts &&
         proxy_bias_direction.size() == other.proxy_bias_direction.size() &&
         proxy_bias_direction == other.proxy_bias_direction &&
         probe_direction.size() == other.probe_direction.size() &&
         probe_direction == other.probe_direction;
}

const PromptRecord& PromptUniverse::prompt(size_t id) const {
  if (id >= prompts.size()) {
    throw ContractError("prompt id " + std::to_string(id) + " out of range");
  }
  return prompts[id];
}

std::vector<size_t> PromptUniverse::PromptIds(PromptRole role) const {
  std::vector<size_t> ids;
  for (const PromptRecord& p : prompts) {
    if (p.role == role) ids.push_back(p.prompt_id);
  }
  return ids;
}

size_t ArgmaxLowestIndex(const Eigen::VectorXd& values) {
  size_t best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<size_t>(i);
  }
  return best;
}

void ValidateUniverseConfig(const UniverseConfig& c) {
  if (c.num_train_prompts < 1) throw ConfigError("num_train_prompts must be >= 1");
  if (c.num_eval_prompts < 1) throw ConfigError("num_eval_prompts must be >= 1");
  if (c.num_probe_prompts < 1) throw ConfigError("num_probe_prompts must be >= 1");
  if (c.responses_per_prompt < 2) {
    throw ConfigError("responses_per_prompt must be >= 2");
  }
  if (!c.tabular_mode && c.feature_dim < 1) {
    throw ConfigError("feature_dim must be >= 1");
  }
  if (!(std::abs(c.misalignment_rho) <= 1.0)) {
    throw ConfigError("misalignment_rho must lie in [-1, 1]");
  }
  if (!(c.feature_scale > 0.0) || !std::isfinite(c.feature_scale)) {
    throw ConfigError("feature_scale must be positive and finite");
  }
  if (!std::isfinite(c.true_reward_scale)) {
    throw ConfigError("true_reward_scale must be finite");
  }
  if (!(c.reward_offset_scale >= 0.0) || !std::isfinite(c.reward_offset_scale)) {
    throw ConfigError("reward_offset_scale must be nonnegative and finite");
  }
  if (c.tabular_mode) {
    const TabularLayout layout(c.num_prompts(), c.responses_per_prompt);
    if (c.feature_dim != 0 && c.feature_dim != layout.feature_dim()) {
      throw ConfigError(
          "tabular_mode requires feature_dim = num_prompts * "
          "responses_per_prompt = " +
          std::to_string(layout.feature_dim()));
    }
  } else if (std::abs(c.misalignment_rho) < 1.0 && c.feature_dim < 2) {
    throw ConfigError("feature_dim must be >= 2 when |misalignment_rho| < 1");
  }
}

TabularLayout::TabularLayout(size_t num_prompts, size_t responses_per_prompt)
    : num_prompts_(num_prompts), responses_(responses_per_prompt) {
  if (num_prompts < 1 || responses_per_prompt < 1) {
    throw ConfigError("tabular layout needs num_prompts >= 1 and V >= 1");
  }
  size_t product = 0;
  if (__builtin_mul_overflow(num_prompts, responses_per_prompt, &product) ||
      product > static_cast<size_t>(std::numeric_limits<Eigen::Index>::max())) {
    throw ConfigError("tabular feature_dim overflows the index type");
  }
  feature_dim_ = product;
}

size_t TabularLayout::Index(size_t prompt_index, size_t response) const {
  if (prompt_index >= num_prompts_ || response >= responses_) {
    throw ContractError("tabular index out of range");
  }
  return prompt_index * responses_ + response;
}

Eigen::MatrixXd TabularLayout::Features(size_t prompt_index) const {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(responses_, feature_dim_);
  for (size_t y = 0; y < responses_; ++y) {
    phi(y, Index(prompt_index, y)) = 1.0;
  }
  return phi;
}

TabularLayout MakeTabularFeatures(size_t num_prompts,
                                  size_t responses_per_prompt) {
  return TabularLayout(num_prompts, responses_per_prompt);
}

PromptUniverse GenerateUniverse(const UniverseConfig& config) {
  ValidateUniverseConfig(config);
  PromptUniverse universe;
  universe.config = config;
  const size_t num_prompts = config.num_prompts();
  const size_t v = config.responses_per_prompt;

  std::optional<TabularLayout> layout;
  if (config.tabular_mode) {
    layout.emplace(num_prompts, v);
    universe.config.feature_dim = layout->feature_dim();
  }
  const size_t d = universe.config.feature_dim;

  Rng geometry_rng(DeriveSeed(config.seed, "universe/geometry"));
  Rng prompt_rng(DeriveSeed(config.seed, "universe/prompts"));

  const Eigen::VectorXd u = RandomUnitVector(d, geometry_rng);
  const double rho = config.misalignment_rho;
  Eigen::VectorXd g;
  if (std::abs(rho) == 1.0) {
    g = rho * u;
  } else {
    const Eigen::VectorXd w = OrthogonalUnitVector(u, geometry_rng);
    g = rho * u + std::sqrt(1.0 - rho * rho) * w;
  }
  universe.probe_direction = u;
  universe.proxy_bias_direction = g;

  universe.prompts.reserve(num_prompts);
  for (size_t id = 0; id < num_prompts; ++id) {
    PromptRecord record;
    record.prompt_id = id;
    if (id < config.num_train_prompts) {
      record.role = PromptRole::kTrain;
    } else if (id < config.num_train_prompts + config.num_eval_prompts) {
      record.role = PromptRole::kEval;
    } else {
      record.role = PromptRole::kProbe;
    }

    Eigen::VectorXd aligned;
    int attempts = 0;
    for (;;) {
      if (layout) {
        record.features = layout->Features(id);
      } else {
        record.features.resize(v, d);
        for (size_t y = 0; y < v; ++y) {
          for (size_t k = 0; k < d; ++k) {
            record.features(y, k) = config.feature_scale * prompt_rng.Normal();
          }
        }
      }
      aligned = record.features * u;
      if (record.role != PromptRole::kProbe || !HasTiedMaximum(aligned)) break;
      // One-hot features cannot be redrawn, and a tie there means u itself
      // has repeated entries.
      if (layout || ++attempts >= kMaxTieRedraws) {
        throw ConfigError("could not draw a probe prompt without a tied optimum");
      }
    }
    const double offset = config.reward_offset_scale * prompt_rng.Normal();
    record.true_reward =
        config.true_reward_scale * aligned + Eigen::VectorXd::Constant(v, offset);
    if (record.role == PromptRole::kProbe) {
      record.correct_response = ArgmaxLowestIndex(record.true_reward);
    }
    universe.prompts.push_back(std::move(record));
  }
  return universe;
}

std::vector<std::string> ValidateUniverse(const PromptUniverse& universe) {
  std::vector<std::string> report;
  const UniverseConfig& c = universe.config;
  try {
    ValidateUniverseConfig(c);
  } catch (const ConfigError& e) {
    report.push_back(std::string("config: ") + e.what());
  }

  const Eigen::VectorXd& g = universe.proxy_bias_direction;
  const Eigen::VectorXd& u = universe.probe_direction;
  if (g.size() != u.size() || static_cast<size_t>(u.size()) != c.feature_dim) {
    report.push_back("direction length does not match feature_dim");
    return report;
  }
  if (std::abs(g.norm() - 1.0) > kUnitTolerance) {
    report.push_back("proxy_bias_direction is not unit norm");
  }
  if (std::abs(u.norm() - 1.0) > kUnitTolerance) {
    report.push_back("probe_direction is not unit norm");
  }
  if (std::abs(g.dot(u) - c.misalignment_rho) > kCosineTolerance) {
    report.push_back("dot(proxy_bias_direction, probe_direction) != misalignment_rho");
  }

  if (universe.prompts.size() != c.num_prompts()) {
    report.push_back("prompt count does not match config");
  }
  const size_t v = c.responses_per_prompt;
  for (size_t i = 0; i < universe.prompts.size(); ++i) {
    const PromptRecord& p = universe.prompts[i];
    std::ostringstream where;
    where << "prompt " << i << ": ";
    if (p.prompt_id != i) report.push_back(where.str() + "prompt_id not contiguous");
    PromptRole expected = PromptRole::kProbe;
    if (i < c.num_train_prompts) {
      expected = PromptRole::kTrain;
    } else if (i < c.num_train_prompts + c.num_eval_prompts) {
      expected = PromptRole::kEval;
    }
    if (p.role != expected) report.push_back(where.str() + "role does not partition ids");
    if (static_cast<size_t>(p.features.rows()) != v ||
        static_cast<size_t>(p.features.cols()) != c.feature_dim) {
      report.push_back(where.str() + "feature matrix has wrong shape");
      continue;
    }
    if (!p.features.allFinite()) report.push_back(where.str() + "non-finite features");
    if (static_cast<size_t>(p.true_reward.size()) != v) {
      report.push_back(where.str() + "true_reward has wrong length");
      continue;
    }
    if (!p.true_reward.allFinite()) report.push_back(where.str() + "non-finite true_reward");
    if (p.role == PromptRole::kProbe) {
      if (!p.correct_response) {
        report.push_back(where.str() + "probe prompt lacks correct_response");
      } else if (HasTiedMaximum(p.true_reward)) {
        report.push_back(where.str() + "probe true_reward has a tied maximum");
      } else if (*p.correct_response != ArgmaxLowestIndex(p.true_reward)) {
        report.push_back(where.str() + "correct_response is not argmax true_reward");
      }
    } else if (p.correct_response) {
      report.push_back(where.str() + "non-probe prompt carries correct_response");
    }
  }
  return report;
}

}  // namespace dpolab
