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

#ifndef RACER_EXPERIMENT_HPP_
#define RACER_EXPERIMENT_HPP_

#include "racer/baseline.hpp"
#include "racer/lap_memory.hpp"
#include "racer/simulation.hpp"
#include "racer/strategy.hpp"
#include "racer/track.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace racer
{

enum class StrategyKind
{
  itera,
  baseline,
};

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string &name);

/// A racing batch: every (shape, speed) cell runs n_runs paired seeds for each strategy.
struct BatchSpec
{
  std::vector<TrackShape> shapes{TrackShape::m_shape};
  std::vector<SpeedInterval> speeds{SpeedInterval::v1};
  int n_runs = 20;
  int n_obstacles = 9;
  std::uint64_t seed_base = 0;
  std::vector<StrategyKind> strategies{StrategyKind::itera, StrategyKind::baseline};
  /// Output directory; empty writes nothing.
  std::string out_dir;
  /// PID laps before training; every lap after the first is excited with input noise.
  int warmup_laps = 2;
  /// Obstacle-free laps each strategy drives on its own memory before racing.
  int training_laps = 6;
  /// Episodes in flight (0: hardware concurrency).
  int threads = 0;
  /// Steps between SVG snapshots of the first seed of each cell; 0 disables.
  int snapshot_every = 0;

  StrategyParams itera;
  BaselineParams baseline;
  /// Template for every scenario; shape, speed, obstacle count and seed are overwritten.
  ScenarioConfig scenario;
  /// Warm-up driver; lap i uses seed + i.
  PidEgoOptions warmup = default_warmup();

  static PidEgoOptions default_warmup()
  {
    PidEgoOptions o;
    o.accel_noise = 0.1;
    o.steer_noise = 0.05;
    return o;
  }

  void validate() const;
};

/// Memory and start state after warm-up and training on an empty track.
struct TrainedStrategy
{
  LapMemory memory;
  State start;
  std::vector<double> pid_lap_times;
  std::vector<double> training_lap_times;
};

/// Deterministic for a given spec, shape and strategy.
TrainedStrategy train_strategy(const BatchSpec &spec, TrackShape shape, StrategyKind kind);

Controller make_controller(StrategyKind kind, const BatchSpec &spec, const VehicleParams &vehicle);

struct ComputeStats
{
  int count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation percentile (q in [0, 100]) of unsorted samples.
double percentile(std::vector<double> samples, double q);
ComputeStats compute_stats(const std::vector<double> &samples);

/// True iff the ego is in the overtaking range of at least one obstacle at this step.
bool in_overtaking_phase(const StepRecord &record, const StrategyParams &params, const VehicleParams &vehicle,
                         double track_length);

/// Solve times of the overtaking-phase steps of one episode.
std::vector<double> overtaking_solve_times(const EpisodeLog &log, const StrategyParams &params,
                                           const VehicleParams &vehicle);

/// Statistics over the overtaking-phase steps of all logs.
ComputeStats summarize_compute(const std::vector<EpisodeLog> &logs, const StrategyParams &params,
                               const VehicleParams &vehicle);

/// Per-episode result kept after its log has been written out.
struct RunOutcome
{
  std::uint64_t seed = 0;
  StrategyKind strategy = StrategyKind::itera;
  bool success = false;
  int overtaken = 0;
  int collisions = 0;
  int boundary_violations = 0;
  std::optional<double> lap_time;
  std::string termination;
  int steps = 0;
  std::vector<double> overtaking_solve_times;
};

/// Paired outcome classes for one cell.
struct Categories
{
  int both = 0;          // (a)
  int only_itera = 0;    // (b)
  int only_baseline = 0; // (c)
  int neither = 0;       // (d)
};

Categories classify(const std::vector<RunOutcome> &itera, const std::vector<RunOutcome> &baseline);

struct CellSummary
{
  TrackShape shape = TrackShape::m_shape;
  SpeedInterval speed = SpeedInterval::v1;
  double track_length = 0.0;
  /// runs[strategy index in BatchSpec::strategies][seed index].
  std::vector<std::vector<RunOutcome>> runs;
  std::optional<Categories> categories;
  /// histograms[strategy index][overtaken count], 0..n_obstacles.
  std::vector<std::vector<int>> histograms;
  std::vector<ComputeStats> compute;
  std::vector<std::vector<double>> training_lap_times;
};

struct BatchSummary
{
  std::vector<StrategyKind> strategies;
  std::vector<CellSummary> cells;
};

/**
 * @brief Runs every cell of the batch.
 *
 * Strategies see bit-identical scenarios per seed. A failing episode is
 * recorded through its termination string and never aborts the batch.
 * When out_dir is set, writes runs/.../<strategy>.csv, summary.json,
 * compute.json, histogram.csv and SVG snapshots.
 */
BatchSummary run_batch(const BatchSpec &spec);

/// Timing-free part of the summary (byte-stable across reruns).
nlohmann::json batch_summary_to_json(const BatchSummary &summary, const BatchSpec &spec);
/// Solve-time statistics per cell and strategy.
nlohmann::json compute_summary_to_json(const BatchSummary &summary, const BatchSpec &spec);
/// shape,speed,strategy,overtaken,count
std::string histogram_csv(const BatchSummary &summary, const BatchSpec &spec);

struct Point2
{
  double x = 0.0;
  double y = 0.0;
};

/// Global corners of a length x width rectangle centred on the Frenet state,
/// in the order rear-right, front-right, front-left, rear-left.
std::array<Point2, 4> vehicle_corners(const TrackLayout &track, const State &x, double length, double width);

/// SVG of step t: track edges, center line, ego (red), obstacles (green) and the open-loop plan (orange).
/// @throws std::out_of_range if t is not a recorded step.
std::string render_snapshot(const EpisodeLog &log, int t, const TrackLayout &track,
                            const VehicleParams &vehicle = VehicleParams{});

} // namespace racer

#endif // RACER_EXPERIMENT_HPP_
