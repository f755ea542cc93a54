/*
 Copyright 2026 The racer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Batch racing experiments: paired seeds, success categories, overtake
// histograms and solve-time statistics.

#include "racer/experiment.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char **argv)
{
  using namespace racer;

  CLI::App app{"Paired racing experiments for the learning iLQR strategy and the LMPC baseline"};
  std::vector<std::string> tracks{"m"};
  std::vector<std::string> speeds{"v1"};
  std::string strategy = "both";
  std::string config_path;
  std::string mode = "sequential";
  BatchSpec spec;
  spec.out_dir = "out";
  bool full = false;

  app.add_option("--track", tracks, "Track shapes: l, m, ellipse (comma separated)")->delimiter(',');
  app.add_option("--obstacles", spec.n_obstacles, "Surrounding vehicles per episode")->capture_default_str();
  app.add_option("--speed", speeds, "Obstacle speed intervals: v1, v2, v3 (comma separated)")->delimiter(',');
  app.add_option("--runs", spec.n_runs, "Seeds per cell")->capture_default_str();
  app.add_option("--seed", spec.seed_base, "First seed")->capture_default_str();
  app.add_option("--strategy", strategy, "itera, baseline or both")
      ->check(CLI::IsMember({"itera", "baseline", "both"}))
      ->capture_default_str();
  app.add_option("--laps-warmup", spec.warmup_laps, "PID warm-up laps")->capture_default_str();
  app.add_option("--training-laps", spec.training_laps, "Obstacle-free strategy laps before racing")
      ->capture_default_str();
  app.add_option("--out", spec.out_dir, "Output directory")->capture_default_str();
  app.add_flag("--full", full, "Run 100 seeds per cell");
  app.add_option("--threads", spec.threads, "Episodes in flight (0: all cores)")->capture_default_str();
  app.add_option("--snapshot-every", spec.snapshot_every, "Steps between SVG snapshots of the first seed (0: off)")
      ->capture_default_str();
  app.add_option("--mode", mode, "Candidate selection mode of the strategy")
      ->check(CLI::IsMember({"sequential", "parallel"}))
      ->capture_default_str();
  app.add_option("--config", config_path, "JSON with optional 'vehicle', 'itera' and 'baseline' sections")
      ->check(CLI::ExistingFile);
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print the default configuration as JSON and exit");
  CLI11_PARSE(app, argc, argv);

  if (dump_config)
  {
    const nlohmann::json doc = {{"vehicle", params_to_json(spec.scenario.vehicle)},
                                {"itera", strategy_params_to_json(spec.itera)},
                                {"baseline", baseline_params_to_json(spec.baseline)}};
    std::cout << doc.dump(2) << '\n';
    return 0;
  }

  try
  {
    if (!config_path.empty())
    {
      std::ifstream in(config_path);
      const nlohmann::json doc = nlohmann::json::parse(in);
      if (doc.contains("vehicle"))
        spec.scenario.vehicle = vehicle_params_from_json(doc.at("vehicle"));
      if (doc.contains("itera"))
        spec.itera = strategy_params_from_json(doc.at("itera"));
      if (doc.contains("baseline"))
        spec.baseline = baseline_params_from_json(doc.at("baseline"));
    }
    spec.itera.mode = mode == "parallel" ? SelectionMode::parallel : SelectionMode::sequential;
    if (full)
      spec.n_runs = 100;
    spec.shapes.clear();
    for (const std::string &t : tracks)
      spec.shapes.push_back(track_shape_from_string(t));
    spec.speeds.clear();
    for (const std::string &s : speeds)
      spec.speeds.push_back(speed_interval_from_string(s));
    if (strategy == "both")
      spec.strategies = {StrategyKind::itera, StrategyKind::baseline};
    else
      spec.strategies = {strategy_kind_from_string(strategy)};

    const BatchSummary summary = run_batch(spec);

    for (const CellSummary &cell : summary.cells)
    {
      std::printf("%s %s\n", to_string(cell.shape).c_str(), to_string(cell.speed).c_str());
      for (std::size_t si = 0; si < summary.strategies.size(); ++si)
      {
        int successes = 0, collisions = 0, boundary = 0;
        for (const RunOutcome &o : cell.runs[si])
        {
          successes += o.success ? 1 : 0;
          collisions += o.collisions;
          boundary += o.boundary_violations;
        }
        const ComputeStats &c = cell.compute[si];
        std::printf("  %-8s success %d/%d  collisions %d  boundary %d  solve mean %.4f s  p95 %.4f s\n",
                    to_string(summary.strategies[si]).c_str(), successes, spec.n_runs, collisions, boundary, c.mean,
                    c.p95);
      }
      if (cell.categories)
      {
        const Categories &k = *cell.categories;
        std::printf("  categories a %d  b %d  c %d  d %d\n", k.both, k.only_itera, k.only_baseline, k.neither);
      }
    }
    std::printf("wrote %s\n", spec.out_dir.c_str());
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
