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

#ifndef RACER_SIMULATION_HPP_
#define RACER_SIMULATION_HPP_

#include "racer/lap_memory.hpp"
#include "racer/track.hpp"
#include "racer/types.hpp"
#include "racer/vehicle.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace racer
{

enum class SpeedInterval
{
  v1, // [0.2, 0.4] m/s
  v2, // [0.4, 0.6] m/s
  v3, // [0.6, 0.8] m/s
};

std::pair<double, double> speed_bounds(SpeedInterval interval);
std::string to_string(SpeedInterval interval);
SpeedInterval speed_interval_from_string(const std::string &name);

/// Seconds between two control updates and the number of simulator substeps in one.
inline constexpr double kControlPeriod = 0.1;
inline constexpr int kSubsteps = 100;

/**
 * @brief Piecewise-constant random lateral target d = d_low + d_high.
 *
 * d_low starts in U(-0.7, 0.7) and moves by U(-0.2, 0.2) every 12 control
 * steps; d_high starts in U(-0.15, 0.15) and moves by U(-0.1, 0.1) every 6.
 * d_low and the sum are clamped to +-bound, d_high to +-0.15 so it stays a
 * small fluctuation around d_low.
 */
class LateralTargetSchedule
{
public:
  explicit LateralTargetSchedule(double bound);

  /// Value for the next control step (t = 0, 1, 2, ...).
  double next(std::mt19937_64 &rng);
  int step() const { return t_; }

private:
  double bound_;
  double low_ = 0.0;
  double high_ = 0.0;
  int t_ = 0;
};

/// Target speed redrawn from U(interval) at t = 0 and every 12 control steps, held otherwise.
class VelocityTargetSchedule
{
public:
  explicit VelocityTargetSchedule(SpeedInterval interval);

  double next(std::mt19937_64 &rng);

private:
  std::pair<double, double> range_;
  double value_ = 0.0;
  int t_ = 0;
};

/// Clamp bound of the lateral target: width/2 - vehicle_width/2 - 0.1.
double lateral_target_bound(double track_width, double vehicle_width);

struct PidGains
{
  double kp_v = 2.0;
  double kp_d = 1.2;
  double kd_d = 0.3;
  double k_psi = 1.0;
};

/// Speed and lateral-offset tracking controller used by every surrounding car.
Input pid_obstacle_control(const State &x, double v_target, double d_target, const PidGains &gains,
                           const VehicleParams &p);

struct ScenarioConfig
{
  TrackShape shape = TrackShape::m_shape;
  double track_length = 51.0;
  double track_width = 2.0;
  int n_obstacles = 0;
  SpeedInterval speed = SpeedInterval::v1;
  std::uint64_t seed = 0;
  double max_sim_time = 110.0;
  double spawn_min = 5.0;
  double spawn_max = 40.0;
  /// Extra control steps generated past max_sim_time so horizon-N predictions never run out.
  int prediction_margin = 13;
  PidGains gains;
  VehicleParams vehicle;

  void validate() const;
};

nlohmann::json scenario_config_to_json(const ScenarioConfig &c);
ScenarioConfig scenario_config_from_json(const nlohmann::json &doc);

class HorizonExceeded : public std::out_of_range
{
public:
  using std::out_of_range::out_of_range;
};

class ScenarioError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Track plus pre-generated obstacle trajectories.
 *
 * obstacles[i][t] is obstacle i at control step t. Its s is cumulative (not
 * wrapped), so obstacles keep lapping the track.
 */
struct Scenario
{
  ScenarioConfig config;
  TrackLayout track;
  std::vector<StateSequence> obstacles;

  int steps() const { return obstacles.empty() ? 0 : static_cast<int>(obstacles.front().size()); }
};

/// Spawns and rolls out the obstacles; identical configs give bit-identical scenarios.
/// @throws ScenarioError if a collision-free spawn is not found in 100 draws.
Scenario make_scenario(const ScenarioConfig &config);

/// Obstacle states at steps t..t+N (N + 1 per obstacle, index k = 0 is step t).
/// @throws HorizonExceeded when t + N is past the generated range.
std::vector<StateSequence> predict_obstacles(const Scenario &scenario, int t, int N);

/// Left-hand side of the safe-boundary condition ds^2 + dey^2 - l^2 - d^2, with
/// ds taken modulo the track length. Positive means separated.
double separation_margin(const State &ego, const State &obstacle, double track_length, double l, double d);

/// What a controller sees at one control step.
struct ControlContext
{
  int step = 0;
  double time = 0.0;
  int lap = 0;
  State state;
  /// Last executed input (zero at the first step).
  Input previous_input = Input::Zero();
  const std::vector<StateSequence> *predictions = nullptr;
  const LapMemory *memory = nullptr;
  const TrackLayout *track = nullptr;
};

struct ControlDecision
{
  Input input = Input::Zero();
  int candidate = -1;
  double solve_time = 0.0;
  int weight_iters = 0;
  /// Open-loop plan of the executed candidate (may be empty).
  StateSequence plan;
  /// Non-empty when the controller had to fall back.
  std::string note;
};

using Controller = std::function<ControlDecision(const ControlContext &)>;

struct StepRecord
{
  int step = 0;
  double time = 0.0;
  int lap = 0;
  State state;
  Input input;
  StateSequence obstacles;
  int candidate = -1;
  double solve_time = 0.0;
  int weight_iters = 0;
  StateSequence plan;
  bool collision = false;
  bool boundary_violation = false;
};

struct EpisodeEvent
{
  int step = 0;
  std::string kind; // "collision" or "boundary"
  int obstacle = -1;
  double value = 0.0;
};

struct EpisodeLog
{
  std::vector<StepRecord> steps;
  /// Final state after the last executed step.
  State final_state;
  int final_step = 0;
  std::vector<double> lap_times;
  std::vector<int> lap_steps;
  std::vector<EpisodeEvent> events;
  int collisions = 0;
  int boundary_violations = 0;
  int overtaken = 0;
  int n_obstacles = 0;
  bool lap_completed = false;
  bool success = false;
  std::string termination; // "laps", "timeout" or "controller_error: ..."
  double track_length = 0.0;
};

struct EpisodeOptions
{
  State initial_state = make_state(0.0, 0, 0, 0, 0, 0);
  /// Episode ends after this many completed laps.
  int laps = 1;
  /// Cap on the episode duration; <= 0 uses the scenario's max_sim_time.
  double max_time = 0.0;
  /// Record executed steps into the memory and finalize completed laps.
  bool record_memory = true;
  /// Horizon of the obstacle predictions handed to the controller.
  int horizon = 12;
};

/// Steps the ego at 1 kHz under a 10 Hz controller until the requested laps
/// are done or time runs out. Collisions and boundary violations are checked
/// at every executed control-step state.
EpisodeLog run_episode(const Scenario &scenario, const Controller &controller, LapMemory &memory,
                       const EpisodeOptions &options);

/// Lateral PID driver for warm-up laps, with optional seeded excitation.
struct PidEgoOptions
{
  double target_speed = 0.8;
  PidGains gains;
  /// Amplitudes of uniform noise added to (a, delta), redrawn every hold_steps.
  double accel_noise = 0.0;
  double steer_noise = 0.0;
  int hold_steps = 3;
  std::uint64_t seed = 1;
};

Controller make_pid_ego_controller(const VehicleParams &p, const PidEgoOptions &options);

/// CSV: one row per control step. Columns: step,time,lap,vx,vy,wz,epsi,s,ey,a,delta,
/// candidate,solve_time,weight_iters,collision,boundary, then obs<i>_s,obs<i>_ey,obs<i>_vx.
void write_episode_csv(const EpisodeLog &log, std::ostream &out);
nlohmann::json episode_summary(const EpisodeLog &log);

} // namespace racer

#endif // RACER_SIMULATION_HPP_
