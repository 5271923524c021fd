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

// Experiment execution and reporting: one run directory per
// (selector, annotator, seed) cell, then aggregation across seeds into
// mean/std summaries, Welch tests between selectors, overhead records and
// plot-ready win-rate vs capability rows.

#ifndef DPOLAB_HARNESS_H_
#define DPOLAB_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpolab/config.h"
#include "dpolab/eval.h"
#include "dpolab/stats.h"
#include "dpolab/trainer.h"
#include "dpolab/universe.h"

namespace dpolab {

// Universe described by the grid: loaded from universe_path or generated.
PromptUniverse LoadOrGenerateUniverse(const ExperimentGrid& grid);

std::string RunId(SelectorKind selector, const std::string& annotator,
                  uint64_t seed);

struct EvalRow {
  std::string run_id;
  std::string selector;
  std::string annotator_label;
  std::string evaluator_label;
  uint64_t seed = 0;
  WinRateEstimate win;
  CapabilityReport capability;
};

inline constexpr char kEvalCsvHeader[] =
    "run_id,selector,annotator_label,evaluator_label,seed,win_rate,ci_low,"
    "ci_high,probe_acc,delta_acc_pp,mean_entropy,collapse_flag";
inline constexpr char kMetricsCsvHeader[] =
    "iteration,mean_loss,labeled_pairs,lr,entropy_min,entropy_mean,entropy_max";
inline constexpr char kParetoCsvHeader[] =
    "run_id,selector,annotator,evaluator,seed,win_rate,delta_acc_pp,"
    "collapse_flag";

std::string FormatEvalCsv(const std::vector<EvalRow>& rows);
std::string FormatMetricsCsv(const std::vector<IterationLog>& logs);

// Evaluates a finished run against every evaluator. Each evaluator gets its
// own judge and trial stream derived from (seed, evaluator label), so cells
// that share a seed are scored with identical streams.
std::vector<EvalRow> EvaluateRun(const PromptUniverse& universe,
                                 const RunResult& run,
                                 const std::vector<JudgeSpec>& evaluators,
                                 const EvalSettings& settings,
                                 const std::string& run_id,
                                 SelectorKind selector,
                                 const std::string& annotator, uint64_t seed);

struct CellSpec {
  SelectorKind selector = SelectorKind::kRandom;
  JudgeSpec annotator;
  uint64_t seed = 0;
};

// Trains, evaluates and writes one run directory:
//   manifest.json, metrics.csv, events.jsonl, sft_policy.json,
//   final_policy.json, eval.csv
void RunCell(const ExperimentGrid& grid, const PromptUniverse& universe,
             const Policy& sft, const CellSpec& cell,
             const std::filesystem::path& run_dir);

struct GridOptions {
  bool overwrite = false;
  size_t parallel = 1;
};

// Writes <output_dir>/universe.json, sft_policy.json, grid.json and
// runs/<run_id>/ for every cell. Refuses to touch an existing runs/ directory
// unless options.overwrite is set. Returns run directories in cell order.
std::vector<std::filesystem::path> RunGrid(const ExperimentGrid& grid,
                                           const GridOptions& options);

struct SummaryRow {
  std::string selector;
  std::string annotator;
  std::string evaluator;
  size_t n_seeds = 0;
  double win_rate_mean = 0.0;
  double win_rate_std = 0.0;
  double delta_acc_mean = 0.0;
  double delta_acc_std = 0.0;
  size_t collapse_runs = 0;
  double extra_scoring_ops_mean = 0.0;
};

struct WelchRecord {
  std::string annotator;
  std::string evaluator;
  std::string metric;  // "win_rate" or "delta_acc_pp"
  size_t n_random = 0;
  size_t n_apl = 0;
  double random_mean = 0.0;
  double apl_mean = 0.0;
  // Empty when the test is undefined ("degenerate").
  std::optional<WelchResult> test;
};

struct OverheadRecord {
  std::string annotator;
  uint64_t seed = 0;
  size_t iterations = 0;
  OverheadReport report;  // APL counters against the Random baseline
};

struct ParetoRow {
  std::string run_id;
  std::string selector;
  std::string annotator;
  std::string evaluator;
  uint64_t seed = 0;
  double win_rate = 0.0;
  double delta_acc_pp = 0.0;
  bool collapse_flag = false;
};

struct Summary {
  std::vector<SummaryRow> rows;
  std::vector<WelchRecord> tests;
  std::vector<OverheadRecord> overhead;
  std::vector<ParetoRow> pareto;
  std::vector<std::string> warnings;
};

// Reads eval.csv and manifest.json of each run directory.
Summary AggregateSummary(const std::vector<std::filesystem::path>& run_dirs);

std::string FormatSummaryCsv(const Summary& s);
std::string FormatWelchCsv(const Summary& s);
std::string FormatOverheadCsv(const Summary& s);
// Rows sorted by (selector, annotator, seed, evaluator).
std::string FormatParetoCsv(const Summary& s);
// Fixed-width text table: mean and std per cell, then Welch p-values.
std::string FormatSummaryTable(const Summary& s);
void EmitPareto(const Summary& s, const std::filesystem::path& path);

// Run directories under <output_dir>/runs, sorted by name.
std::vector<std::filesystem::path> ListRunDirs(const std::filesystem::path& output_dir);

// Aggregates <output_dir>/runs and writes summary.csv, welch.csv,
// overhead.csv and pareto.csv into output_dir.
Summary WriteReport(const std::filesystem::path& output_dir);

}  // namespace dpolab

#endif  // DPOLAB_HARNESS_H_
