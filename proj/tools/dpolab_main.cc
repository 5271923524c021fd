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

// dpolab: command-line front end.
//
//   dpolab generate --config grid.json --out dir      universe JSON
//   dpolab sft      --config grid.json --out dir      SFT checkpoint
//   dpolab train    --config grid.json --out dir [--seed s] [--selector k]
//                   [--annotator label]               one cell
//   dpolab sweep    --config grid.json --out dir [--overwrite] [--parallel n]
//   dpolab report   --out dir                         aggregate + pareto

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dpolab/config.h"
#include "dpolab/errors.h"
#include "dpolab/harness.h"
#include "dpolab/serialization.h"
#include "dpolab/trainer.h"

namespace fs = std::filesystem;

namespace {

void PrintSummary(const dpolab::Summary& s) {
  for (const std::string& w : s.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << dpolab::FormatSummaryTable(s);
}

dpolab::ExperimentGrid LoadGrid(const std::string& config,
                                const std::string& out) {
  dpolab::ExperimentGrid grid = dpolab::ParseConfig(config);
  if (!out.empty()) grid.output_dir = out;
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online DPO pair-selection laboratory"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  bool overwrite = false;
  size_t parallel = 1;
  std::string selector;
  std::string annotator;

  auto* generate = app.add_subcommand("generate", "Write the universe JSON");
  auto* sft = app.add_subcommand("sft", "Fit and write the SFT policy");
  auto* train = app.add_subcommand("train", "Run a single grid cell");
  auto* sweep = app.add_subcommand("sweep", "Run the full grid and report");
  auto* report = app.add_subcommand("report", "Aggregate runs under --out");

  for (CLI::App* sub : {generate, sft, train, sweep}) {
    sub->add_option("--config", config, "Grid config (JSON)")->required();
    sub->add_option("--out", out, "Output directory");
  }
  report->add_option("--out", out, "Output directory")->required();
  train->add_option("--seed", seed, "Run seed (default: first grid seed)");
  train->add_option("--selector", selector, "random or apl");
  train->add_option("--annotator", annotator, "Annotator label");
  train->add_flag("--overwrite", overwrite, "Replace an existing run directory");
  sweep->add_flag("--overwrite", overwrite, "Replace existing runs");
  sweep->add_option("--parallel", parallel, "Concurrent cells")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      const dpolab::ExperimentGrid grid = LoadGrid(config, out);
      fs::create_directories(grid.output_dir);
      const dpolab::PromptUniverse u = dpolab::LoadOrGenerateUniverse(grid);
      dpolab::WriteJsonFile(grid.output_dir / "universe.json",
                            dpolab::UniverseToJson(u));
      std::cout << (grid.output_dir / "universe.json").string() << "\n";
    } else if (*sft) {
      const dpolab::ExperimentGrid grid = LoadGrid(config, out);
      fs::create_directories(grid.output_dir);
      const dpolab::PromptUniverse u = dpolab::LoadOrGenerateUniverse(grid);
      const dpolab::Policy p = dpolab::SftFit(u, grid.train.sft);
      dpolab::WriteJsonFile(grid.output_dir / "sft_policy.json",
                            dpolab::PolicyToJson(p));
      std::cout << "sft objective " << dpolab::FormatDouble(dpolab::SftObjective(p, u))
                << "\n";
    } else if (*train) {
      const dpolab::ExperimentGrid grid = LoadGrid(config, out);
      dpolab::CellSpec cell;
      cell.selector = selector.empty() ? grid.selectors.front()
                                       : dpolab::ParseSelector(selector);
      cell.annotator = grid.annotators.front();
      if (!annotator.empty()) {
        bool found = false;
        for (const dpolab::JudgeSpec& s : grid.annotators) {
          if (s.label == annotator) {
            cell.annotator = s;
            found = true;
          }
        }
        if (!found) throw dpolab::ConfigError("unknown annotator " + annotator);
      }
      cell.seed = seed.value_or(grid.seeds.front());
      const fs::path dir = grid.output_dir / "runs" /
                           dpolab::RunId(cell.selector, cell.annotator.label, cell.seed);
      if (fs::exists(dir)) {
        if (!overwrite) {
          throw dpolab::ConfigError(dir.string() +
                                    " exists; pass --overwrite to replace it");
        }
        fs::remove_all(dir);
      }
      const dpolab::PromptUniverse u = dpolab::LoadOrGenerateUniverse(grid);
      const dpolab::Policy p = dpolab::SftFit(u, grid.train.sft);
      dpolab::RunCell(grid, u, p, cell, dir);
      std::cout << dir.string() << "\n";
    } else if (*sweep) {
      const dpolab::ExperimentGrid grid = LoadGrid(config, out);
      const auto dirs = dpolab::RunGrid(grid, {overwrite, parallel});
      std::cout << dirs.size() << " runs written to "
                << (grid.output_dir / "runs").string() << "\n";
      PrintSummary(dpolab::WriteReport(grid.output_dir));
    } else if (*report) {
      PrintSummary(dpolab::WriteReport(out));
    }
  } catch (const dpolab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
