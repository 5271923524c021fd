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

#include "dpolab/harness.h"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "dpolab/errors.h"
#include "dpolab/rng.h"
#include "dpolab/serialization.h"

namespace fs = std::filesystem;

namespace dpolab {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::vector<std::vector<std::string>> ReadCsv(const fs::path& path,
                                              std::string_view header) {
  std::istringstream in(ReadTextFile(path));
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ConfigError(path.string() + ": unexpected CSV header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(SplitCsvLine(line));
  }
  return rows;
}

std::string UniverseHash(const PromptUniverse& u) {
  return Sha256Hex(UniverseToJson(u).dump());
}

void WriteEvents(const fs::path& path, const std::vector<Event>& events) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const Event& e : events) {
    Json line{{"iteration", e.iteration}, {"kind", e.kind}};
    for (const auto& item : e.data.items()) line[item.key()] = item.value();
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

OpCounters CountersFromJson(const Json& j) {
  OpCounters c;
  c.policy_logprob_evals = j.at("policy_logprob_evals").get<uint64_t>();
  c.ref_logprob_evals = j.at("ref_logprob_evals").get<uint64_t>();
  c.judge_queries = j.at("judge_queries").get<uint64_t>();
  c.generated_samples = j.at("generated_samples").get<uint64_t>();
  return c;
}

std::string WelchStatus(const WelchRecord& w) {
  if (w.n_random < 2 || w.n_apl < 2) return "insufficient_seeds";
  return w.test ? "ok" : "degenerate";
}

}  // namespace

PromptUniverse LoadOrGenerateUniverse(const ExperimentGrid& grid) {
  if (grid.universe_path) {
    PromptUniverse u = UniverseFromJson(ReadJsonFile(*grid.universe_path));
    const std::vector<std::string> problems = ValidateUniverse(u);
    if (!problems.empty()) {
      throw ConfigError(grid.universe_path->string() + ": " + problems.front());
    }
    return u;
  }
  return GenerateUniverse(grid.universe);
}

std::string RunId(SelectorKind selector, const std::string& annotator,
                  uint64_t seed) {
  return std::string(SelectorName(selector)) + "__" + annotator + "__s" +
         std::to_string(seed);
}

std::string FormatEvalCsv(const std::vector<EvalRow>& rows) {
  std::string out = std::string(kEvalCsvHeader) + "\n";
  for (const EvalRow& r : rows) {
    out += r.run_id + "," + r.selector + "," + r.annotator_label + "," +
           r.evaluator_label + "," + std::to_string(r.seed) + "," +
           FormatDouble(r.win.rate) + "," + FormatDouble(r.win.ci_low) + "," +
           FormatDouble(r.win.ci_high) + "," +
           FormatDouble(r.capability.probe_accuracy) + "," +
           FormatDouble(r.capability.delta_vs_sft) + "," +
           FormatDouble(r.capability.mean_policy_entropy) + "," +
           (r.capability.collapse_flag ? "1" : "0") + "\n";
  }
  return out;
}

std::string FormatMetricsCsv(const std::vector<IterationLog>& logs) {
  std::string out = std::string(kMetricsCsvHeader) + "\n";
  for (const IterationLog& l : logs) {
    out += std::to_string(l.iteration) + "," + FormatDouble(l.mean_loss) + "," +
           std::to_string(l.labeled_pairs) + "," + FormatDouble(l.lr) + "," +
           FormatDouble(l.entropy_min) + "," + FormatDouble(l.entropy_mean) +
           "," + FormatDouble(l.entropy_max) + "\n";
  }
  return out;
}

std::vector<EvalRow> EvaluateRun(const PromptUniverse& universe,
                                 const RunResult& run,
                                 const std::vector<JudgeSpec>& evaluators,
                                 const EvalSettings& settings,
                                 const std::string& run_id,
                                 SelectorKind selector,
                                 const std::string& annotator, uint64_t seed) {
  const CapabilityReport capability = MakeCapabilityReport(
      run.final_policy, run.sft_policy, universe, settings.collapse_fraction);
  std::vector<EvalRow> rows;
  for (const JudgeSpec& spec : evaluators) {
    JudgeSpec seeded = spec;
    seeded.seed = DeriveSeed(spec.seed, "eval/" + std::to_string(seed));
    Judge judge(seeded, universe);
    Rng rng(DeriveSeed(seed, "eval/" + spec.label));
    EvalRow row;
    row.run_id = run_id;
    row.selector = std::string(SelectorName(selector));
    row.annotator_label = annotator;
    row.evaluator_label = spec.label;
    row.seed = seed;
    row.win = EstimateWinRate(run.final_policy, run.sft_policy, judge, universe,
                              settings.n_trials, rng);
    row.capability = capability;
    rows.push_back(std::move(row));
  }
  return rows;
}

void RunCell(const ExperimentGrid& grid, const PromptUniverse& universe,
             const Policy& sft, const CellSpec& cell, const fs::path& run_dir) {
  TrainConfig cfg = grid.train;
  cfg.selector = cell.selector;
  cfg.annotator = cell.annotator;
  cfg.run_seed = cell.seed;
  const std::string run_id = RunId(cell.selector, cell.annotator.label, cell.seed);

  const RunResult run = RunOnlineDpo(universe, sft, cfg);
  const std::vector<EvalRow> rows =
      EvaluateRun(universe, run, grid.evaluators, grid.eval, run_id,
                  cell.selector, cell.annotator.label, cell.seed);

  fs::create_directories(run_dir);
  Json evaluators = Json::array();
  for (const JudgeSpec& s : grid.evaluators) evaluators.push_back(JudgeSpecToJson(s));
  const std::string universe_hash = UniverseHash(universe);
  const Json provenance{
      {"config", TrainConfigToJson(cfg)},
      {"evaluators", evaluators},
      {"eval", Json{{"n_trials", grid.eval.n_trials},
                    {"collapse_fraction", grid.eval.collapse_fraction}}},
      {"universe_hash", universe_hash},
      {"seed", cell.seed}};
  Json manifest{{"run_id", run_id},
                {"selector", SelectorName(cell.selector)},
                {"annotator", cell.annotator.label},
                {"seed", cell.seed}};
  for (const auto& item : provenance.items()) manifest[item.key()] = item.value();
  manifest["defaulted"] = grid.defaulted;
  manifest["sft_hash"] = Sha256Hex(PolicyToJson(sft).dump());
  manifest["iterations"] = run.per_iteration.size();
  manifest["aborted"] = run.aborted;
  manifest["shortfall_events"] = run.shortfall_events;
  manifest["degenerate_prompts"] = run.degenerate_prompts;
  manifest["counters"] = CountersToJson(run.counters);
  manifest["provenance_hash"] = Sha256Hex(provenance.dump());

  WriteJsonFile(run_dir / "manifest.json", manifest);
  WriteTextFile(run_dir / "metrics.csv", FormatMetricsCsv(run.per_iteration));
  WriteEvents(run_dir / "events.jsonl", run.events);
  WriteJsonFile(run_dir / "sft_policy.json", PolicyToJson(run.sft_policy));
  WriteJsonFile(run_dir / "final_policy.json", PolicyToJson(run.final_policy));
  WriteTextFile(run_dir / "eval.csv", FormatEvalCsv(rows));
}

std::vector<fs::path> RunGrid(const ExperimentGrid& grid,
                              const GridOptions& options) {
  const fs::path runs_dir = grid.output_dir / "runs";
  if (fs::exists(runs_dir) && !fs::is_empty(runs_dir)) {
    if (!options.overwrite) {
      throw ConfigError(runs_dir.string() +
                        " already contains runs; pass --overwrite to replace them");
    }
    fs::remove_all(runs_dir);
  }
  fs::create_directories(runs_dir);

  const PromptUniverse universe = LoadOrGenerateUniverse(grid);
  const Policy sft = SftFit(universe, grid.train.sft);
  WriteJsonFile(grid.output_dir / "universe.json", UniverseToJson(universe));
  WriteJsonFile(grid.output_dir / "sft_policy.json", PolicyToJson(sft));
  Json echoed = GridToJson(grid);
  echoed["defaulted"] = grid.defaulted;
  WriteJsonFile(grid.output_dir / "grid.json", echoed);

  std::vector<CellSpec> cells;
  for (const JudgeSpec& annotator : grid.annotators) {
    for (uint64_t seed : grid.seeds) {
      for (SelectorKind selector : grid.selectors) {
        cells.push_back({selector, annotator, seed});
      }
    }
  }
  std::vector<fs::path> dirs;
  for (const CellSpec& c : cells) {
    dirs.push_back(runs_dir / RunId(c.selector, c.annotator.label, c.seed));
  }

  std::atomic<size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (size_t i = next++; i < cells.size(); i = next++) {
      try {
        RunCell(grid, universe, sft, cells[i], dirs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const size_t threads = std::max<size_t>(1, std::min(options.parallel, cells.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return dirs;
}

Summary AggregateSummary(const std::vector<fs::path>& run_dirs) {
  struct Cell {
    std::vector<double> win;
    std::vector<double> delta;
    size_t collapse = 0;
    std::vector<double> scoring_ops;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Cell> cells;
  // (annotator, seed) -> (selector -> counters, iterations)
  std::map<std::pair<std::string, uint64_t>,
           std::map<std::string, std::pair<OpCounters, size_t>>>
      counters;
  Summary s;

  for (const fs::path& dir : run_dirs) {
    if (!fs::exists(dir / "eval.csv") || !fs::exists(dir / "manifest.json")) {
      s.warnings.push_back(dir.string() + ": incomplete run directory, skipped");
      continue;
    }
    const Json manifest = ReadJsonFile(dir / "manifest.json");
    const OpCounters c = CountersFromJson(manifest.at("counters"));
    const std::string selector = manifest.at("selector").get<std::string>();
    const std::string annotator = manifest.at("annotator").get<std::string>();
    const uint64_t seed = manifest.at("seed").get<uint64_t>();
    counters[{annotator, seed}][selector] = {c, manifest.at("iterations").get<size_t>()};
    const double scoring =
        static_cast<double>(c.policy_logprob_evals + c.ref_logprob_evals);

    for (const auto& f : ReadCsv(dir / "eval.csv", kEvalCsvHeader)) {
      if (f.size() != 12) throw ConfigError(dir.string() + ": malformed eval.csv row");
      ParetoRow p;
      p.run_id = f[0];
      p.selector = f[1];
      p.annotator = f[2];
      p.evaluator = f[3];
      p.seed = std::stoull(f[4]);
      p.win_rate = std::stod(f[5]);
      p.delta_acc_pp = std::stod(f[9]);
      p.collapse_flag = f[11] == "1";
      Cell& cell = cells[{p.selector, p.annotator, p.evaluator}];
      cell.win.push_back(p.win_rate);
      cell.delta.push_back(p.delta_acc_pp);
      cell.scoring_ops.push_back(scoring);
      if (p.collapse_flag) ++cell.collapse;
      s.pareto.push_back(std::move(p));
    }
  }

  for (const auto& [key, cell] : cells) {
    SummaryRow row;
    std::tie(row.selector, row.annotator, row.evaluator) = key;
    row.n_seeds = cell.win.size();
    row.win_rate_mean = Mean(cell.win);
    row.win_rate_std = SampleStd(cell.win);
    row.delta_acc_mean = Mean(cell.delta);
    row.delta_acc_std = SampleStd(cell.delta);
    row.collapse_runs = cell.collapse;
    row.extra_scoring_ops_mean = Mean(cell.scoring_ops);
    s.rows.push_back(row);
  }

  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& [key, cell] : cells) {
    pairs.insert({std::get<1>(key), std::get<2>(key)});
  }
  for (const auto& [annotator, evaluator] : pairs) {
    const auto random = cells.find({"random", annotator, evaluator});
    const auto apl = cells.find({"apl", annotator, evaluator});
    if (random == cells.end() || apl == cells.end()) continue;
    for (const std::string metric : {"win_rate", "delta_acc_pp"}) {
      const bool is_win = metric == "win_rate";
      const std::vector<double>& a = is_win ? random->second.win : random->second.delta;
      const std::vector<double>& b = is_win ? apl->second.win : apl->second.delta;
      WelchRecord w;
      w.annotator = annotator;
      w.evaluator = evaluator;
      w.metric = metric;
      w.n_random = a.size();
      w.n_apl = b.size();
      w.random_mean = Mean(a);
      w.apl_mean = Mean(b);
      w.test = WelchTest(a, b);
      s.tests.push_back(w);
    }
  }

  for (const auto& [key, by_selector] : counters) {
    const auto random = by_selector.find("random");
    const auto apl = by_selector.find("apl");
    if (random == by_selector.end() || apl == by_selector.end()) continue;
    OverheadRecord o;
    o.annotator = key.first;
    o.seed = key.second;
    o.iterations = apl->second.second;
    o.report = CountersReport(apl->second.first, random->second.first);
    s.overhead.push_back(o);
  }

  std::sort(s.pareto.begin(), s.pareto.end(), [](const ParetoRow& a, const ParetoRow& b) {
    return std::tie(a.selector, a.annotator, a.seed, a.evaluator) <
           std::tie(b.selector, b.annotator, b.seed, b.evaluator);
  });
  return s;
}

std::string FormatSummaryCsv(const Summary& s) {
  std::string out =
      "selector,annotator,evaluator,n_seeds,win_rate_mean,win_rate_std,"
      "delta_acc_mean,delta_acc_std,collapse_runs,extra_scoring_ops_mean\n";
  for (const SummaryRow& r : s.rows) {
    out += r.selector + "," + r.annotator + "," + r.evaluator + "," +
           std::to_string(r.n_seeds) + "," + FormatDouble(r.win_rate_mean) + "," +
           FormatDouble(r.win_rate_std) + "," + FormatDouble(r.delta_acc_mean) +
           "," + FormatDouble(r.delta_acc_std) + "," +
           std::to_string(r.collapse_runs) + "," +
           FormatDouble(r.extra_scoring_ops_mean) + "\n";
  }
  return out;
}

std::string FormatWelchCsv(const Summary& s) {
  std::string out =
      "test,annotator,evaluator,metric,n_random,n_apl,random_mean,apl_mean,"
      "t_statistic,df,p_value,status\n";
  for (const WelchRecord& w : s.tests) {
    out += "welch," + w.annotator + "," + w.evaluator + "," + w.metric + "," +
           std::to_string(w.n_random) + "," + std::to_string(w.n_apl) + "," +
           FormatDouble(w.random_mean) + "," + FormatDouble(w.apl_mean) + ",";
    if (w.test) {
      out += FormatDouble(w.test->t_statistic) + "," +
             FormatDouble(w.test->degrees_of_freedom) + "," +
             FormatDouble(w.test->p_value) + ",";
    } else {
      out += ",,,";
    }
    out += WelchStatus(w) + "\n";
  }
  return out;
}

std::string FormatOverheadCsv(const Summary& s) {
  std::string out =
      "annotator,seed,iterations,delta_policy_logprob_evals,"
      "delta_ref_logprob_evals,delta_judge_queries,delta_generated_samples,"
      "extra_scoring_evals,extra_scoring_evals_per_iteration,relative_ops,"
      "reference_wall_clock_ratio\n";
  for (const OverheadRecord& o : s.overhead) {
    const double per_iter =
        o.iterations == 0 ? 0.0
                          : static_cast<double>(o.report.extra_scoring_evals) /
                                static_cast<double>(o.iterations);
    out += o.annotator + "," + std::to_string(o.seed) + "," +
           std::to_string(o.iterations) + "," +
           std::to_string(o.report.policy_logprob_evals) + "," +
           std::to_string(o.report.ref_logprob_evals) + "," +
           std::to_string(o.report.judge_queries) + "," +
           std::to_string(o.report.generated_samples) + "," +
           std::to_string(o.report.extra_scoring_evals) + "," +
           FormatDouble(per_iter) + "," + FormatDouble(o.report.relative_ops) +
           "," + FormatDouble(kReferenceWallClockRatio) + "\n";
  }
  return out;
}

std::string FormatParetoCsv(const Summary& s) {
  std::string out = std::string(kParetoCsvHeader) + "\n";
  for (const ParetoRow& p : s.pareto) {
    out += p.run_id + "," + p.selector + "," + p.annotator + "," + p.evaluator +
           "," + std::to_string(p.seed) + "," + FormatDouble(p.win_rate) + "," +
           FormatDouble(p.delta_acc_pp) + "," + (p.collapse_flag ? "1" : "0") +
           "\n";
  }
  return out;
}

std::string FormatSummaryTable(const Summary& s) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-12s %-12s %-8s %3s  %-17s  %-17s  %s\n",
                "annotator", "evaluator", "selector", "n", "win_rate",
                "delta_acc_pp", "collapsed");
  out += line;
  for (const SummaryRow& r : s.rows) {
    std::snprintf(line, sizeof(line),
                  "%-12s %-12s %-8s %3zu  %.3f \u00b1 %-9.3f  %+.2f \u00b1 %-9.2f  %zu\n",
                  r.annotator.c_str(), r.evaluator.c_str(), r.selector.c_str(),
                  r.n_seeds, r.win_rate_mean, r.win_rate_std, r.delta_acc_mean,
                  r.delta_acc_std, r.collapse_runs);
    out += line;
  }
  for (const WelchRecord& w : s.tests) {
    const std::string p = w.test ? FormatDouble(w.test->p_value) : "-";
    out += "welch random vs apl  " + w.annotator + "/" + w.evaluator + "  " +
           w.metric + "  p=" + p + "  (" + WelchStatus(w) + ")\n";
  }
  return out;
}

void EmitPareto(const Summary& s, const fs::path& path) {
  WriteTextFile(path, FormatParetoCsv(s));
}

std::vector<fs::path> ListRunDirs(const fs::path& output_dir) {
  std::vector<fs::path> dirs;
  const fs::path runs = output_dir / "runs";
  if (!fs::is_directory(runs)) return dirs;
  for (const fs::directory_entry& e : fs::directory_iterator(runs)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

Summary WriteReport(const fs::path& output_dir) {
  const Summary s = AggregateSummary(ListRunDirs(output_dir));
  if (s.rows.empty()) throw ConfigError(output_dir.string() + ": no completed runs");
  WriteTextFile(output_dir / "summary.csv", FormatSummaryCsv(s));
  WriteTextFile(output_dir / "welch.csv", FormatWelchCsv(s));
  WriteTextFile(output_dir / "overhead.csv", FormatOverheadCsv(s));
  WriteTextFile(output_dir / "summary.txt", FormatSummaryTable(s));
  EmitPareto(s, output_dir / "pareto.csv");
  return s;
}

}  // namespace dpolab
