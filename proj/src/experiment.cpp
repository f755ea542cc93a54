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

#include "racer/experiment.hpp"

#include "racer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace racer
{

namespace fs = std::filesystem;

namespace
{

std::string cell_name(TrackShape shape, SpeedInterval speed)
{
  return to_string(shape) + "_" + to_string(speed);
}

ScenarioConfig cell_config(const BatchSpec &spec, TrackShape shape, SpeedInterval speed, int n_obstacles,
                           std::uint64_t seed)
{
  ScenarioConfig c = spec.scenario;
  c.shape = shape;
  c.speed = speed;
  c.n_obstacles = n_obstacles;
  c.seed = seed;
  return c;
}

void write_file(const fs::path &path, const std::string &text)
{
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << text;
}

nlohmann::json stats_to_json(const ComputeStats &s)
{
  return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"p95", s.p95}, {"max", s.max}};
}

} // namespace

std::string to_string(StrategyKind kind)
{
  return kind == StrategyKind::itera ? "itera" : "baseline";
}

StrategyKind strategy_kind_from_string(const std::string &name)
{
  if (name == "itera")
    return StrategyKind::itera;
  if (name == "baseline")
    return StrategyKind::baseline;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

void BatchSpec::validate() const
{
  if (n_runs < 1)
    throw std::invalid_argument("BatchSpec: n_runs must be at least 1");
  if (n_obstacles < 0)
    throw std::invalid_argument("BatchSpec: n_obstacles must be non-negative");
  if (shapes.empty() || speeds.empty() || strategies.empty())
    throw std::invalid_argument("BatchSpec: shapes, speeds and strategies must be non-empty");
  if (warmup_laps < 1 || training_laps < 0)
    throw std::invalid_argument("BatchSpec: need at least one warm-up lap");
  if (snapshot_every < 0)
    throw std::invalid_argument("BatchSpec: snapshot_every must be non-negative");
  itera.validate();
  baseline.validate();
  scenario.validate();
}

TrainedStrategy train_strategy(const BatchSpec &spec, TrackShape shape, StrategyKind kind)
{
  const Scenario empty = make_scenario(cell_config(spec, shape, SpeedInterval::v1, 0, spec.seed_base));
  TrainedStrategy out{LapMemory(empty.track.length()), State::Zero(), {}, {}};
  EpisodeOptions eo;
  eo.horizon = std::max(spec.itera.N, spec.baseline.common.N);
  for (int i = 0; i < spec.warmup_laps; ++i)
  {
    PidEgoOptions po = spec.warmup;
    po.seed = spec.warmup.seed + static_cast<std::uint64_t>(i);
    if (i == 0)
    {
      po.accel_noise = 0.0;
      po.steer_noise = 0.0;
    }
    const EpisodeLog log = run_episode(empty, make_pid_ego_controller(spec.scenario.vehicle, po), out.memory, eo);
    if (!log.lap_completed)
      throw std::runtime_error("train_strategy: warm-up lap did not finish (" + log.termination + ")");
    out.pid_lap_times.push_back(log.lap_times.front());
    eo.initial_state = log.final_state;
  }
  const Controller controller = make_controller(kind, spec, spec.scenario.vehicle);
  for (int i = 0; i < spec.training_laps; ++i)
  {
    const EpisodeLog log = run_episode(empty, controller, out.memory, eo);
    if (!log.lap_completed)
      throw std::runtime_error("train_strategy: training lap did not finish (" + log.termination + ")");
    out.training_lap_times.push_back(log.lap_times.front());
    eo.initial_state = log.final_state;
  }
  out.start = eo.initial_state;
  out.start(kS) = 0.0;
  return out;
}

Controller make_controller(StrategyKind kind, const BatchSpec &spec, const VehicleParams &vehicle)
{
  if (kind == StrategyKind::itera)
    return RacingStrategy(spec.itera, vehicle);
  return BaselineController(spec.baseline, vehicle);
}

double percentile(std::vector<double> samples, double q)
{
  if (samples.empty())
    return 0.0;
  std::sort(samples.begin(), samples.end());
  const double pos = q / 100.0 * static_cast<double>(samples.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return samples[lo] + frac * (samples[hi] - samples[lo]);
}

ComputeStats compute_stats(const std::vector<double> &samples)
{
  ComputeStats s;
  s.count = static_cast<int>(samples.size());
  if (samples.empty())
    return s;
  double total = 0.0;
  for (double v : samples)
    total += v;
  s.mean = total / static_cast<double>(samples.size());
  s.median = percentile(samples, 50.0);
  s.p95 = percentile(samples, 95.0);
  s.max = *std::max_element(samples.begin(), samples.end());
  return s;
}

bool in_overtaking_phase(const StepRecord &record, const StrategyParams &params, const VehicleParams &vehicle,
                         double track_length)
{
  return std::any_of(record.obstacles.begin(), record.obstacles.end(), [&](const State &obs) {
    return within_overtaking_range(record.state, obs, params, vehicle, track_length);
  });
}

std::vector<double> overtaking_solve_times(const EpisodeLog &log, const StrategyParams &params,
                                           const VehicleParams &vehicle)
{
  std::vector<double> out;
  for (const StepRecord &r : log.steps)
  {
    if (in_overtaking_phase(r, params, vehicle, log.track_length))
      out.push_back(r.solve_time);
  }
  return out;
}

ComputeStats summarize_compute(const std::vector<EpisodeLog> &logs, const StrategyParams &params,
                               const VehicleParams &vehicle)
{
  std::vector<double> all;
  for (const EpisodeLog &log : logs)
  {
    const std::vector<double> t = overtaking_solve_times(log, params, vehicle);
    all.insert(all.end(), t.begin(), t.end());
  }
  return compute_stats(all);
}

Categories classify(const std::vector<RunOutcome> &itera, const std::vector<RunOutcome> &baseline)
{
  if (itera.size() != baseline.size())
    throw std::invalid_argument("classify: unpaired outcome lists");
  Categories c;
  for (std::size_t i = 0; i < itera.size(); ++i)
  {
    if (itera[i].seed != baseline[i].seed)
      throw std::invalid_argument("classify: seeds are not paired");
    const bool a = itera[i].success, b = baseline[i].success;
    if (a && b)
      ++c.both;
    else if (a)
      ++c.only_itera;
    else if (b)
      ++c.only_baseline;
    else
      ++c.neither;
  }
  return c;
}

BatchSummary run_batch(const BatchSpec &spec)
{
  spec.validate();
  BatchSummary summary;
  summary.strategies = spec.strategies;
  const bool single_cell = spec.shapes.size() == 1 && spec.speeds.size() == 1;
  const fs::path out_dir = spec.out_dir;
  const int n_strat = static_cast<int>(spec.strategies.size());
  const VehicleParams &vehicle = spec.scenario.vehicle;
  const int horizon = std::max(spec.itera.N, spec.baseline.common.N);

  for (TrackShape shape : spec.shapes)
  {
    // Training depends on the shape only, so it is shared by every speed cell.
    std::vector<TrainedStrategy> trained;
    for (StrategyKind kind : spec.strategies)
      trained.push_back(train_strategy(spec, shape, kind));

    for (SpeedInterval speed : spec.speeds)
    {
      CellSummary cell;
      cell.shape = shape;
      cell.speed = speed;
      cell.track_length = build_track(shape, spec.scenario.track_length, spec.scenario.track_width).length();
      cell.runs.assign(static_cast<std::size_t>(n_strat), std::vector<RunOutcome>(static_cast<std::size_t>(spec.n_runs)));
      for (const TrainedStrategy &t : trained)
        cell.training_lap_times.push_back(t.training_lap_times);

      const std::string name = cell_name(shape, speed);
      auto run_one = [&](int job) {
        const int seed_index = job / n_strat;
        const int si = job % n_strat;
        const StrategyKind kind = spec.strategies[static_cast<std::size_t>(si)];
        const std::uint64_t seed = spec.seed_base + static_cast<std::uint64_t>(seed_index);
        RunOutcome &outcome = cell.runs[static_cast<std::size_t>(si)][static_cast<std::size_t>(seed_index)];
        outcome.seed = seed;
        outcome.strategy = kind;

        EpisodeLog log;
        std::optional<Scenario> scenario;
        try
        {
          scenario = make_scenario(cell_config(spec, shape, speed, spec.n_obstacles, seed));
          LapMemory memory = trained[static_cast<std::size_t>(si)].memory;
          EpisodeOptions eo;
          eo.initial_state = trained[static_cast<std::size_t>(si)].start;
          eo.horizon = horizon;
          log = run_episode(*scenario, make_controller(kind, spec, vehicle), memory, eo);
        }
        catch (const std::exception &e)
        {
          outcome.termination = std::string("error: ") + e.what();
          return;
        }
        outcome.success = log.success;
        outcome.overtaken = log.overtaken;
        outcome.collisions = log.collisions;
        outcome.boundary_violations = log.boundary_violations;
        if (!log.lap_times.empty())
          outcome.lap_time = log.lap_times.front();
        outcome.termination = log.termination;
        outcome.steps = static_cast<int>(log.steps.size());
        outcome.overtaking_solve_times = overtaking_solve_times(log, spec.itera, vehicle);

        if (spec.out_dir.empty())
          return;
        const fs::path run_dir = single_cell ? out_dir / "runs" / std::to_string(seed)
                                             : out_dir / "runs" / name / std::to_string(seed);
        std::ostringstream csv;
        write_episode_csv(log, csv);
        write_file(run_dir / (to_string(kind) + ".csv"), csv.str());
        if (spec.snapshot_every > 0 && seed_index == 0)
        {
          for (int t = 0; t < static_cast<int>(log.steps.size()); t += spec.snapshot_every)
          {
            const fs::path svg = out_dir / "snapshots" /
                                 (name + "_" + to_string(kind) + "_seed" + std::to_string(seed) + "_t" +
                                  std::to_string(t) + ".svg");
            write_file(svg, render_snapshot(log, t, scenario->track, vehicle));
          }
        }
      };
      parallel_for(spec.n_runs * n_strat, spec.threads, run_one);

      const int bins = spec.n_obstacles + 1;
      for (int si = 0; si < n_strat; ++si)
      {
        std::vector<int> hist(static_cast<std::size_t>(bins), 0);
        std::vector<double> times;
        for (const RunOutcome &o : cell.runs[static_cast<std::size_t>(si)])
        {
          ++hist[static_cast<std::size_t>(std::clamp(o.overtaken, 0, spec.n_obstacles))];
          times.insert(times.end(), o.overtaking_solve_times.begin(), o.overtaking_solve_times.end());
        }
        cell.histograms.push_back(std::move(hist));
        cell.compute.push_back(compute_stats(times));
      }
      const auto it = std::find(spec.strategies.begin(), spec.strategies.end(), StrategyKind::itera);
      const auto bl = std::find(spec.strategies.begin(), spec.strategies.end(), StrategyKind::baseline);
      if (it != spec.strategies.end() && bl != spec.strategies.end())
      {
        cell.categories = classify(cell.runs[static_cast<std::size_t>(it - spec.strategies.begin())],
                                   cell.runs[static_cast<std::size_t>(bl - spec.strategies.begin())]);
      }
      summary.cells.push_back(std::move(cell));
    }
  }

  if (!spec.out_dir.empty())
  {
    write_file(out_dir / "summary.json", batch_summary_to_json(summary, spec).dump(2) + "\n");
    write_file(out_dir / "compute.json", compute_summary_to_json(summary, spec).dump(2) + "\n");
    write_file(out_dir / "histogram.csv", histogram_csv(summary, spec));
  }
  return summary;
}

nlohmann::json batch_summary_to_json(const BatchSummary &summary, const BatchSpec &spec)
{
  nlohmann::json strategies = nlohmann::json::array();
  for (StrategyKind k : summary.strategies)
    strategies.push_back(to_string(k));
  nlohmann::json meta = {{"n_runs", spec.n_runs},
                         {"n_obstacles", spec.n_obstacles},
                         {"seed_base", spec.seed_base},
                         {"warmup_laps", spec.warmup_laps},
                         {"training_laps", spec.training_laps},
                         {"strategies", strategies},
                         {"itera", strategy_params_to_json(spec.itera)},
                         {"baseline", baseline_params_to_json(spec.baseline)},
                         {"vehicle", params_to_json(spec.scenario.vehicle)},
                         {"scenario", scenario_config_to_json(spec.scenario)},
                         {"categories_note", "categories compare against the single implemented baseline"}};
  nlohmann::json cells = nlohmann::json::array();
  for (const CellSummary &cell : summary.cells)
  {
    nlohmann::json c = {{"track", to_string(cell.shape)}, {"speed", to_string(cell.speed)}};
    nlohmann::json per_strategy = nlohmann::json::object();
    for (std::size_t si = 0; si < summary.strategies.size(); ++si)
    {
      nlohmann::json runs = nlohmann::json::array();
      int successes = 0;
      for (const RunOutcome &o : cell.runs[si])
      {
        successes += o.success ? 1 : 0;
        runs.push_back({{"seed", o.seed},
                        {"success", o.success},
                        {"overtaken", o.overtaken},
                        {"collisions", o.collisions},
                        {"boundary_violations", o.boundary_violations},
                        {"lap_time", o.lap_time ? nlohmann::json(*o.lap_time) : nlohmann::json(nullptr)},
                        {"steps", o.steps},
                        {"termination", o.termination}});
      }
      per_strategy[to_string(summary.strategies[si])] = {{"successes", successes},
                                                          {"histogram", cell.histograms[si]},
                                                          {"training_lap_times", cell.training_lap_times[si]},
                                                          {"runs", runs}};
    }
    c["strategies"] = per_strategy;
    if (cell.categories)
    {
      const Categories &k = *cell.categories;
      const double n = static_cast<double>(spec.n_runs);
      c["categories"] = {{"a_both", k.both},
                         {"b_only_itera", k.only_itera},
                         {"c_only_baseline", k.only_baseline},
                         {"d_neither", k.neither},
                         {"percent",
                          {100.0 * k.both / n, 100.0 * k.only_itera / n, 100.0 * k.only_baseline / n,
                           100.0 * k.neither / n}}};
    }
    cells.push_back(c);
  }
  return {{"metadata", meta}, {"cells", cells}};
}

nlohmann::json compute_summary_to_json(const BatchSummary &summary, const BatchSpec &spec)
{
  nlohmann::json cells = nlohmann::json::array();
  for (const CellSummary &cell : summary.cells)
  {
    nlohmann::json per_strategy = nlohmann::json::object();
    for (std::size_t si = 0; si < summary.strategies.size(); ++si)
      per_strategy[to_string(summary.strategies[si])] = stats_to_json(cell.compute[si]);
    cells.push_back({{"track", to_string(cell.shape)},
                     {"speed", to_string(cell.speed)},
                     {"track_length", cell.track_length},
                     {"solve_time", per_strategy}});
  }
  return {{"overtaking_range", {{"epsilon", spec.itera.epsilon}, {"gamma", spec.itera.gamma},
                                {"length", spec.scenario.vehicle.length}}},
          {"cells", cells}};
}

std::string histogram_csv(const BatchSummary &summary, const BatchSpec &spec)
{
  std::ostringstream out;
  out << "track,speed,strategy,overtaken,count\n";
  for (const CellSummary &cell : summary.cells)
  {
    for (std::size_t si = 0; si < summary.strategies.size(); ++si)
    {
      for (int k = 0; k <= spec.n_obstacles; ++k)
      {
        out << to_string(cell.shape) << ',' << to_string(cell.speed) << ',' << to_string(summary.strategies[si])
            << ',' << k << ',' << cell.histograms[si][static_cast<std::size_t>(k)] << '\n';
      }
    }
  }
  return out.str();
}

} // namespace racer
