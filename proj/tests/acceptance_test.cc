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


// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpolab/config.h"
#include "dpolab/dpo.h"
#include "dpolab/eval.h"
#include "dpolab/harness.h"
#include "dpolab/policy.h"
#include "dpolab/selection.h"
#include "dpolab/serialization.h"
#include "dpolab/trainer.h"

namespace fs = std::filesystem;
using namespace dpolab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0,
                double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

UniverseConfig RandomSmallConfig(Rng& rng, size_t max_d, size_t max_v) {
  UniverseConfig c;
  c.num_train_prompts = 4;
  c.num_eval_prompts = 1;
  c.num_probe_prompts = 1;
  c.feature_dim = 2 + rng.UniformIndex(max_d - 1);
  c.responses_per_prompt = 2 + rng.UniformIndex(max_v - 1);
  c.misalignment_rho = 2.0 * rng.Uniform01() - 1.0;
  c.seed = rng.NextU64();
  return c;
}

Policy Gaussian(size_t d, Rng& rng, double scale) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = scale * rng.Normal();
  return Policy(theta, "random");
}

std::vector<PreferenceTriple> RandomBatch(const PromptUniverse& u, Rng& rng) {
  const size_t v = u.responses_per_prompt();
  std::vector<PreferenceTriple> batch;
  const size_t n = 1 + rng.UniformIndex(8);
  for (size_t i = 0; i < n; ++i) {
    const size_t w = rng.UniformIndex(v);
    const size_t l = (w + 1 + rng.UniformIndex(v - 1)) % v;
    batch.push_back({rng.UniformIndex(u.prompts.size()), w, l, "acceptance", 1});
  }
  return batch;
}

Outcome GradientCorrectness() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20260101);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const PromptUniverse u = GenerateUniverse(RandomSmallConfig(rng, 16, 8));
    const size_t d = u.feature_dim();
    const Policy p = Gaussian(d, rng, 1.0);
    const Policy ref = Gaussian(d, rng, 1.0);
    const double beta = 0.05 + 1.95 * rng.Uniform01();
    const std::vector<PreferenceTriple> batch = RandomBatch(u, rng);
    const Eigen::VectorXd g = DpoBatchGrad(p, ref, u, batch, beta).grad;
    Eigen::VectorXd fd(g.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      Policy plus = p, minus = p;
      plus.theta[k] += h;
      minus.theta[k] -= h;
      fd[k] = (DpoBatchGrad(plus, ref, u, batch, beta).loss -
               DpoBatchGrad(minus, ref, u, batch, beta).loss) /
              (2 * h);
    }
    const double rel = (g - fd).norm() / std::max(g.norm(), fd.norm());
    worst = std::max(worst, rel);
  }
  const double elapsed = Seconds(start);
  return {worst <= 1e-6 && elapsed < 10.0,
          Fmt("max relative error %.2e over 100 instances (d<=16, V<=8), %.2f s", worst,
              elapsed)};
}

Outcome LossIdentity() {
  Rng rng(7);
  double worst = 0.0;
  size_t examples = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const PromptUniverse u = GenerateUniverse(RandomSmallConfig(rng, 16, 8));
    const Policy p = Gaussian(u.feature_dim(), rng, 3.0);
    const double beta = 0.05 + 1.95 * rng.Uniform01();
    for (const PreferenceTriple& t : RandomBatch(u, rng)) {
      worst = std::max(worst, std::abs(DpoExampleLoss(p, p, u, t, beta) - std::log(2.0)));
      ++examples;
    }
  }
  return {worst <= 1e-12,
          Fmt("max |loss - ln 2| = %.2e over %.0f examples", worst,
              static_cast<double>(examples))};
}

PromptUniverse SinglePromptTabular(size_t v) {
  UniverseConfig c;
  c.num_train_prompts = 1;
  c.num_eval_prompts = 1;
  c.num_probe_prompts = 1;
  c.responses_per_prompt = v;
  c.tabular_mode = true;
  c.feature_dim = 0;
  return GenerateUniverse(c);
}

Outcome EntropyCalibration() {
  Rng rng(11);
  const std::vector<size_t> ids = {0};
  const SelectionConfig cfg{1, 4, 1, 1};
  double worst_z = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const size_t v = 2 + rng.UniformIndex(7);
    const PromptUniverse u = SinglePromptTabular(v);
    const Policy p = Gaussian(u.feature_dim(), rng, 1.5);
    const double exact = ExactEntropy(p, u.prompt(0));
    const int reps = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < reps; ++r) {
      OpCounters counters;
      const double est = EntropyEstimate(GenerateCandidates(p, u, ids, cfg, rng, counters)[0]);
      sum += est;
      sum2 += est * est;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
    worst_z = std::max(worst_z, std::abs(mean - exact) / se);
  }
  bool uniform_exact = true;
  for (size_t v = 2; v <= 8; ++v) {
    const PromptUniverse u = SinglePromptTabular(v);
    const Policy p = Policy::Zero(u.feature_dim(), "uniform");
    for (size_t m = 2; m <= 8; ++m) {
      OpCounters counters;
      const SelectionConfig c{1, m, 1, 1};
      uniform_exact &= EntropyEstimate(GenerateCandidates(p, u, ids, c, rng, counters)[0]) ==
                       std::log(static_cast<double>(v));
    }
  }
  return {worst_z <= 3.0 && uniform_exact,
          Fmt("worst |mean - exact| = %.2f SE over 20 policies x 1e4 resamples; "
              "uniform estimate == ln V exactly: ",
              worst_z) +
              (uniform_exact ? "yes" : "no")};
}

class FirstSlotOracle : public PreferenceOracle {
 public:
  size_t Prefer(const PromptRecord&, size_t y1, size_t) override { return y1; }
  const std::string& label() const override { return label_; }

 private:
  std::string label_ = "first_slot";
};

Outcome SelfPlayNeutrality() {
  UniverseConfig c;
  c.num_train_prompts = 16;
  c.num_eval_prompts = 128;
  c.num_probe_prompts = 16;
  c.misalignment_rho = -0.8;
  const PromptUniverse u = GenerateUniverse(c);
  Rng rng(3);
  const Policy p = Gaussian(u.feature_dim(), rng, 0.5);
  const size_t n = 10000;
  const double sigma = std::sqrt(0.25 / n);
  double worst = 0.0;
  std::string detail;
  const Json& presets = DefaultJudgePresets();
  for (const char* name : {"strong", "weak", "oracle"}) {
    const Json& pr = presets.at(name);
    Judge judge(JudgeSpec{name, ParseJudgeKind(pr.at("kind").get<std::string>()),
                          pr.at("misalignment").get<double>(),
                          pr.at("noise_temperature").get<double>(), 0},
                u);
    Rng eval_rng(DeriveSeed(5, name));
    const double rate = EstimateWinRate(p, p, judge, u, n, eval_rng).rate;
    worst = std::max(worst, std::abs(rate - 0.5) / sigma);
    detail += std::string(name) + "=" + Fmt("%.4f", rate) + " ";
  }
  FirstSlotOracle biased;
  Rng eval_rng(6);
  const double rate = EstimateWinRate(p, p, biased, u, n, eval_rng).rate;
  worst = std::max(worst, std::abs(rate - 0.5) / sigma);
  detail += "slot_biased=" + Fmt("%.4f", rate);
  return {worst <= 3.0, detail + Fmt(" (worst %.2f sigma, n=1e4)", worst)};
}

Json ReadManifest(const fs::path& dir) { return ReadJsonFile(dir / "manifest.json"); }

Outcome BudgetMatching(const fs::path& configs, const fs::path& out) {
  ExperimentGrid grid = ParseConfig(configs / "budget.json");
  grid.output_dir = out / "budget";
  const std::vector<fs::path> dirs = RunGrid(grid, GridOptions{true, 1});
  std::map<std::string, Json> by_selector;
  for (const fs::path& d : dirs) {
    const Json m = ReadManifest(d);
    by_selector[m.at("selector").get<std::string>()] = m;
  }
  const Json& r = by_selector.at("random");
  const Json& a = by_selector.at("apl");
  const uint64_t qr = r.at("counters").at("judge_queries").get<uint64_t>();
  const uint64_t qa = a.at("counters").at("judge_queries").get<uint64_t>();
  const size_t sr = r.at("shortfall_events").get<size_t>();
  const size_t sa = a.at("shortfall_events").get<size_t>();
  const uint64_t expected = grid.train.dpo.max_steps * grid.train.selection.label_budget;
  const bool pass = sr == 0 && sa == 0 && qr == qa && qr == expected &&
                    grid.train.dpo.max_steps == 50;
  return {pass, "T=" + std::to_string(grid.train.dpo.max_steps) +
                    ", judge queries random=" + std::to_string(qr) +
                    " apl=" + std::to_string(qa) + " (T*L=" + std::to_string(expected) +
                    "), shortfall events random=" + std::to_string(sr) +
                    " apl=" + std::to_string(sa)};
}

struct Cell {
  std::vector<double> win;
  std::vector<double> delta;
};

// (annotator, evaluator) -> per-seed metrics, from the sweep's pareto rows.
std::map<std::pair<std::string, std::string>, Cell> Cells(const Summary& s) {
  std::map<std::pair<std::string, std::string>, Cell> cells;
  for (const ParetoRow& p : s.pareto) {
    Cell& c = cells[{p.annotator, p.evaluator}];
    c.win.push_back(p.win_rate);
    c.delta.push_back(p.delta_acc_pp);
  }
  return cells;
}

double MeanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? NAN : s / static_cast<double>(v.size());
}

struct GoodhartSweep {
  Summary summary;
  ExperimentGrid grid;
  double seconds = 0.0;
};

GoodhartSweep RunGoodhart(const fs::path& configs, const fs::path& out) {
  GoodhartSweep g;
  g.grid = ParseConfig(configs / "goodhart.json");
  g.grid.output_dir = out / "goodhart";
  const auto start = std::chrono::steady_clock::now();
  RunGrid(g.grid, GridOptions{true, 1});
  g.summary = WriteReport(g.grid.output_dir);
  g.seconds = Seconds(start);
  return g;
}

bool GoodhartProtocol(const ExperimentGrid& g) {
  return g.universe.feature_dim == 32 && g.universe.misalignment_rho == -0.8 &&
         !g.universe.tabular_mode && g.train.dpo.max_steps == 300 && g.seeds.size() == 3;
}

Outcome GoodhartDissociation(const GoodhartSweep& g) {
  const auto cells = Cells(g.summary);
  const Cell& proxy = cells.at({"weak", "weak"});
  const Cell& truth = cells.at({"weak", "oracle"});
  const double win = MeanOf(proxy.win);
  const double delta = MeanOf(proxy.delta);
  const bool pass = GoodhartProtocol(g.grid) && proxy.win.size() == 3 && win >= 0.70 &&
                    delta <= -10.0 && g.seconds < 120.0;
  return {pass, Fmt("weak annotator: proxy win-rate %.3f (weak evaluator), %.3f under "
                    "faithful evaluator, capability delta %+.2f pp; sweep %.1f s",
                    win, MeanOf(truth.win), delta, g.seconds)};
}

Outcome FaithfulSanity(const GoodhartSweep& g) {
  const auto cells = Cells(g.summary);
  const Cell& c = cells.at({"oracle", "oracle"});
  bool pass = GoodhartProtocol(g.grid) && c.win.size() == 3;
  double min_win = 1.0, max_abs_delta = 0.0;
  for (size_t i = 0; i < c.win.size(); ++i) {
    min_win = std::min(min_win, c.win[i]);
    max_abs_delta = std::max(max_abs_delta, std::abs(c.delta[i]));
  }
  pass = pass && min_win >= 0.6 && max_abs_delta <= 2.0;
  return {pass, Fmt("faithful annotator: win-rate mean %.3f (min %.3f), capability "
                    "delta mean %+.2f pp (max |delta| %.2f) over 3 seeds",
                    MeanOf(c.win), min_win, MeanOf(c.delta), max_abs_delta)};
}

Outcome ParityHarness(const fs::path& configs, const fs::path& out) {
  ExperimentGrid grid = ParseConfig(configs / "parity.json");
  grid.output_dir = out / "parity_a";
  RunGrid(grid, GridOptions{true, 1});
  const Summary s = WriteReport(grid.output_dir);
  const std::string table = ReadTextFile(grid.output_dir / "summary.txt");
  std::set<std::string> selectors;
  bool five_seeds = true;
  for (const SummaryRow& r : s.rows) {
    selectors.insert(r.selector);
    five_seeds &= r.n_seeds == 5;
  }
  std::string p_values;
  bool tests_ok = !s.tests.empty();
  for (const WelchRecord& w : s.tests) {
    tests_ok &= w.test.has_value() && std::isfinite(w.test->p_value);
    p_values += " " + w.evaluator + "/" + w.metric + " p=" +
                (w.test ? Fmt("%.3f", w.test->p_value) : std::string("n/a"));
  }
  const bool pass = selectors == std::set<std::string>{"random", "apl"} && five_seeds &&
                    tests_ok && grid.seeds.size() == 5 && grid.annotators.size() == 1 &&
                    grid.annotators[0].label == "strong" &&
                    table.find("±") != std::string::npos &&
                    fs::exists(grid.output_dir / "welch.csv");
  return {pass, "strong annotator, 5 seeds, Welch:" + p_values};
}

Outcome OverheadAccounting() {
  // Near-uniform SFT over many responses so that all candidates are distinct.
  UniverseConfig c;
  c.num_train_prompts = 32;
  c.num_eval_prompts = 1;
  c.num_probe_prompts = 1;
  c.responses_per_prompt = 256;
  c.feature_dim = 8;
  c.seed = 9;
  const PromptUniverse u = GenerateUniverse(c);
  const Policy sft = Policy::Zero(8, "sft");
  TrainConfig cfg = DefaultTrainConfig();
  cfg.selection = SelectionConfig{4, 4, 2, 4};
  cfg.annotator = JudgeSpec{"strong", JudgeKind::kBradleyTerry, 0.05, 0.5, 0};
  const size_t closed_form = 4 * cfg.selection.apl_top_prompts *
                             (cfg.selection.candidates_per_prompt *
                              (cfg.selection.candidates_per_prompt - 1) / 2);
  size_t checked = 0;
  bool all_match = true;
  OverheadReport last;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.run_seed = seed;
    cfg.selector = SelectorKind::kRandom;
    const RunResult random = RunOnlineDpo(u, sft, cfg, 1);
    cfg.selector = SelectorKind::kApl;
    const RunResult apl = RunOnlineDpo(u, sft, cfg, 1);
    bool distinct = apl.degenerate_prompts == 0;
    for (const Event& e : apl.events) {
      if (e.kind != "batch") continue;
      for (const Json& p : e.data.at("prompts")) {
        const auto ys = p.at("candidates").get<std::vector<size_t>>();
        distinct &= std::set<size_t>(ys.begin(), ys.end()).size() == ys.size();
      }
    }
    if (!distinct) continue;
    ++checked;
    last = CountersReport(apl.counters, random.counters);
    all_match &= last.extra_scoring_evals == static_cast<int64_t>(closed_form) &&
                 last.judge_queries == 0 && last.generated_samples == 0;
  }
  const bool pass = checked > 0 && all_match && closed_form == 48;
  return {pass, "B=4 M=4 N=2: extra scoring evals per iteration = " +
                    std::to_string(last.extra_scoring_evals) + " (closed form " +
                    std::to_string(closed_form) + ") in " + std::to_string(checked) +
                    " iterations without degenerate prompts; ops ratio " +
                    Fmt("%.2fx vs reference wall-clock %.1fx (not reproduced)",
                        last.relative_ops, kReferenceWallClockRatio)};
}

Outcome Determinism(const fs::path& configs, const fs::path& out) {
  // A second, parallel execution of the parity sweep.
  ExperimentGrid grid = ParseConfig(configs / "parity.json");
  const fs::path a = out / "parity_a";
  const fs::path b = out / "parity_b";
  grid.output_dir = b;
  const std::vector<fs::path> dirs = RunGrid(grid, GridOptions{true, 2});
  WriteReport(b);
  size_t files = 0;
  bool identical = true;
  for (const fs::path& d : dirs) {
    for (const char* f : {"metrics.csv", "eval.csv"}) {
      const fs::path other = a / "runs" / d.filename() / f;
      identical &= fs::exists(other) && ReadTextFile(other) == ReadTextFile(d / f);
      ++files;
    }
  }
  identical &= ReadTextFile(a / "pareto.csv") == ReadTextFile(b / "pareto.csv");
  ++files;
  return {identical && !dirs.empty(),
          std::to_string(files) + " metrics/eval/pareto CSVs compared byte-for-byte: " +
              (identical ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dpolab acceptance checks"};
  std::string configs = "configs";
  std::string out = (fs::temp_directory_path() / "dpolab_acceptance").string();
  app.add_option("--configs", configs, "Directory with the shipped configs");
  app.add_option("--out", out, "Scratch directory for sweep outputs");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name,
                o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient correctness", GradientCorrectness);
  report(2, "loss identity", LossIdentity);
  report(3, "entropy estimator calibration", EntropyCalibration);
  report(4, "self-play neutrality", SelfPlayNeutrality);
  report(5, "budget matching", [&] { return BudgetMatching(configs, out); });
  GoodhartSweep goodhart;
  std::string goodhart_error;
  try {
    goodhart = RunGoodhart(configs, out);
  } catch (const std::exception& e) {
    goodhart_error = e.what();
  }
  auto guarded = [&](Outcome (*fn)(const GoodhartSweep&)) {
    return [&, fn] {
      if (!goodhart_error.empty()) return Outcome{false, "error: " + goodhart_error};
      return fn(goodhart);
    };
  };
  report(6, "Goodhart dissociation", guarded(GoodhartDissociation));
  report(7, "faithful-judge sanity", guarded(FaithfulSanity));
  report(8, "random-vs-APL parity harness", [&] { return ParityHarness(configs, out); });
  report(9, "overhead accounting", OverheadAccounting);
  report(10, "determinism", [&] { return Determinism(configs, out); });

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
