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

#include "racer/simulation.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace racer
{

std::pair<double, double> speed_bounds(SpeedInterval interval)
{
  switch (interval)
  {
  case SpeedInterval::v1:
    return {0.2, 0.4};
  case SpeedInterval::v2:
    return {0.4, 0.6};
  case SpeedInterval::v3:
    return {0.6, 0.8};
  }
  throw std::invalid_argument("speed_bounds: unknown interval");
}

std::string to_string(SpeedInterval interval)
{
  switch (interval)
  {
  case SpeedInterval::v1:
    return "v1";
  case SpeedInterval::v2:
    return "v2";
  case SpeedInterval::v3:
    return "v3";
  }
  return "unknown";
}

SpeedInterval speed_interval_from_string(const std::string &name)
{
  if (name == "v1" || name == "V1")
    return SpeedInterval::v1;
  if (name == "v2" || name == "V2")
    return SpeedInterval::v2;
  if (name == "v3" || name == "V3")
    return SpeedInterval::v3;
  throw std::invalid_argument("unknown speed interval: " + name);
}

double lateral_target_bound(double track_width, double vehicle_width)
{
  return track_width / 2.0 - vehicle_width / 2.0 - 0.1;
}

LateralTargetSchedule::LateralTargetSchedule(double bound) : bound_(bound)
{
  if (!(bound > 0.0))
  {
    throw std::invalid_argument("LateralTargetSchedule: bound must be positive");
  }
}

double LateralTargetSchedule::next(std::mt19937_64 &rng)
{
  constexpr double kHighLimit = 0.15;
  if (t_ == 0)
  {
    low_ = std::uniform_real_distribution<double>(-0.7, 0.7)(rng);
    high_ = std::uniform_real_distribution<double>(-kHighLimit, kHighLimit)(rng);
  }
  else
  {
    if (t_ % 12 == 0)
      low_ += std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
    if (t_ % 6 == 0)
      high_ += std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
  }
  low_ = std::clamp(low_, -bound_, bound_);
  high_ = std::clamp(high_, -kHighLimit, kHighLimit);
  ++t_;
  return std::clamp(low_ + high_, -bound_, bound_);
}

VelocityTargetSchedule::VelocityTargetSchedule(SpeedInterval interval) : range_(speed_bounds(interval)) {}

double VelocityTargetSchedule::next(std::mt19937_64 &rng)
{
  if (t_ % 12 == 0)
  {
    value_ = std::uniform_real_distribution<double>(range_.first, range_.second)(rng);
  }
  ++t_;
  return value_;
}

Input pid_obstacle_control(const State &x, double v_target, double d_target, const PidGains &gains,
                           const VehicleParams &p)
{
  const double ey_rate = x(kVx) * std::sin(x(kEpsi)) + x(kVy) * std::cos(x(kEpsi));
  const double a = gains.kp_v * (v_target - x(kVx));
  const double delta = -gains.kp_d * (x(kEy) - d_target) - gains.kd_d * ey_rate - gains.k_psi * x(kEpsi);
  return clamp_input(Input(a, delta), p);
}

void ScenarioConfig::validate() const
{
  if (n_obstacles < 0)
    throw std::invalid_argument("ScenarioConfig: n_obstacles must be non-negative");
  if (!(max_sim_time > 0.0))
    throw std::invalid_argument("ScenarioConfig: max_sim_time must be positive");
  if (!(track_length > 0.0) || !(track_width > 0.0))
    throw std::invalid_argument("ScenarioConfig: track dimensions must be positive");
  if (!(spawn_min >= 0.0) || !(spawn_max > spawn_min) || !(spawn_max < track_length))
    throw std::invalid_argument("ScenarioConfig: spawn range must lie inside [0, L)");
  if (prediction_margin < 0)
    throw std::invalid_argument("ScenarioConfig: prediction_margin must be non-negative");
  vehicle.validate();
}

nlohmann::json scenario_config_to_json(const ScenarioConfig &c)
{
  return {{"shape", to_string(c.shape)},
          {"track_length", c.track_length},
          {"track_width", c.track_width},
          {"n_obstacles", c.n_obstacles},
          {"speed", to_string(c.speed)},
          {"seed", c.seed},
          {"max_sim_time", c.max_sim_time},
          {"spawn_range", {c.spawn_min, c.spawn_max}},
          {"prediction_margin", c.prediction_margin},
          {"pid", {{"kp_v", c.gains.kp_v}, {"kp_d", c.gains.kp_d}, {"kd_d", c.gains.kd_d}, {"k_psi", c.gains.k_psi}}},
          {"vehicle", params_to_json(c.vehicle)}};
}

ScenarioConfig scenario_config_from_json(const nlohmann::json &doc)
{
  ScenarioConfig c;
  if (doc.contains("shape"))
    c.shape = track_shape_from_string(doc.at("shape").get<std::string>());
  c.track_length = doc.value("track_length", c.track_length);
  c.track_width = doc.value("track_width", c.track_width);
  c.n_obstacles = doc.value("n_obstacles", c.n_obstacles);
  if (doc.contains("speed"))
    c.speed = speed_interval_from_string(doc.at("speed").get<std::string>());
  c.seed = doc.value("seed", c.seed);
  c.max_sim_time = doc.value("max_sim_time", c.max_sim_time);
  if (doc.contains("spawn_range"))
  {
    c.spawn_min = doc.at("spawn_range").at(0).get<double>();
    c.spawn_max = doc.at("spawn_range").at(1).get<double>();
  }
  c.prediction_margin = doc.value("prediction_margin", c.prediction_margin);
  if (doc.contains("pid"))
  {
    const auto &g = doc.at("pid");
    c.gains.kp_v = g.value("kp_v", c.gains.kp_v);
    c.gains.kp_d = g.value("kp_d", c.gains.kp_d);
    c.gains.kd_d = g.value("kd_d", c.gains.kd_d);
    c.gains.k_psi = g.value("k_psi", c.gains.k_psi);
  }
  if (doc.contains("vehicle"))
    c.vehicle = vehicle_params_from_json(doc.at("vehicle"));
  c.validate();
  return c;
}

double separation_margin(const State &ego, const State &obstacle, double track_length, double l, double d)
{
  const double ds = std::remainder(ego(kS) - obstacle(kS), track_length);
  const double dey = ego(kEy) - obstacle(kEy);
  return ds * ds + dey * dey - l * l - d * d;
}

Scenario make_scenario(const ScenarioConfig &config)
{
  config.validate();
  Scenario sc{config, build_track(config.shape, config.track_length, config.track_width), {}};
  const double L = sc.track.length();
  const VehicleParams &p = config.vehicle;
  const int total = static_cast<int>(std::lround(config.max_sim_time / kControlPeriod)) + config.prediction_margin + 1;
  const double bound = lateral_target_bound(config.track_width, p.width);

  std::mt19937_64 spawn_rng(config.seed);
  std::vector<State> initial;
  std::vector<std::mt19937_64> rngs;
  std::vector<LateralTargetSchedule> lateral;
  std::vector<VelocityTargetSchedule> velocity;
  std::vector<std::pair<double, double>> first_targets;
  for (int i = 0; i < config.n_obstacles; ++i)
  {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(i + 1)};
    rngs.emplace_back(seq);
    lateral.emplace_back(bound);
    velocity.emplace_back(config.speed);
    const double d0 = lateral.back().next(rngs.back());
    const double v0 = velocity.back().next(rngs.back());
    first_targets.emplace_back(v0, d0);

    std::uniform_real_distribution<double> spawn(config.spawn_min, config.spawn_max);
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt)
    {
      const State x = make_state(v0, 0.0, 0.0, 0.0, spawn(spawn_rng), d0);
      placed = std::all_of(initial.begin(), initial.end(), [&](const State &o) {
        return separation_margin(x, o, L, p.length, p.width) > 0.0;
      });
      if (placed)
        initial.push_back(x);
    }
    if (!placed)
    {
      throw ScenarioError("make_scenario: no collision-free spawn found in 100 draws");
    }
  }

  const double dt_sim = kControlPeriod / kSubsteps;
  for (int i = 0; i < config.n_obstacles; ++i)
  {
    const std::size_t is = static_cast<std::size_t>(i);
    StateSequence traj;
    traj.reserve(static_cast<std::size_t>(total));
    State x = initial[is];
    double v_target = first_targets[is].first;
    double d_target = first_targets[is].second;
    traj.push_back(x);
    for (int t = 1; t < total; ++t)
    {
      const Input u = pid_obstacle_control(x, v_target, d_target, config.gains, p);
      x = sim_interval(x, u, sc.track, p, dt_sim, kSubsteps);
      traj.push_back(x);
      d_target = lateral[is].next(rngs[is]);
      v_target = velocity[is].next(rngs[is]);
    }
    sc.obstacles.push_back(std::move(traj));
  }
  return sc;
}

std::vector<StateSequence> predict_obstacles(const Scenario &scenario, int t, int N)
{
  if (t < 0 || N < 0)
  {
    throw std::invalid_argument("predict_obstacles: negative step or horizon");
  }
  std::vector<StateSequence> out;
  out.reserve(scenario.obstacles.size());
  for (const StateSequence &traj : scenario.obstacles)
  {
    if (t + N >= static_cast<int>(traj.size()))
    {
      throw HorizonExceeded("predict_obstacles: requested steps exceed the pre-generated trajectories");
    }
    out.emplace_back(traj.begin() + t, traj.begin() + t + N + 1);
  }
  return out;
}

EpisodeLog run_episode(const Scenario &scenario, const Controller &controller, LapMemory &memory,
                       const EpisodeOptions &options)
{
  const TrackLayout &track = scenario.track;
  const VehicleParams &p = scenario.config.vehicle;
  const double L = track.length();
  const double dt_sim = kControlPeriod / kSubsteps;
  const double max_time = options.max_time > 0.0 ? options.max_time : scenario.config.max_sim_time;
  const int max_steps = static_cast<int>(std::floor(max_time / kControlPeriod + 1e-9));
  const int n_obs = static_cast<int>(scenario.obstacles.size());

  EpisodeLog log;
  log.n_obstacles = n_obs;
  log.track_length = L;

  if (options.record_memory)
  {
    if (memory.lap_in_progress())
      memory.abandon_lap();
    memory.begin_lap();
  }

  State x = options.initial_state;
  Input u_prev = Input::Zero();
  int laps_done = 0;
  int lap_step = 0;
  double lap_start_time = 0.0;
  int t = 0;
  for (;; ++t)
  {
    if (t >= max_steps)
    {
      log.termination = "timeout";
      break;
    }
    std::vector<StateSequence> predictions;
    try
    {
      predictions = predict_obstacles(scenario, t, options.horizon);
    }
    catch (const HorizonExceeded &)
    {
      log.termination = "timeout";
      break;
    }

    ControlContext ctx;
    ctx.step = t;
    ctx.time = t * kControlPeriod;
    ctx.lap = laps_done;
    ctx.state = x;
    ctx.previous_input = u_prev;
    ctx.predictions = &predictions;
    ctx.memory = &memory;
    ctx.track = &track;

    ControlDecision decision;
    try
    {
      decision = controller(ctx);
    }
    catch (const std::exception &e)
    {
      log.termination = std::string("controller_error: ") + e.what();
      break;
    }
    const Input u = clamp_input(decision.input, p);

    StepRecord rec;
    rec.step = t;
    rec.time = ctx.time;
    rec.lap = laps_done;
    rec.state = x;
    rec.input = u;
    for (const StateSequence &pred : predictions)
      rec.obstacles.push_back(pred.front());
    rec.candidate = decision.candidate;
    rec.solve_time = decision.solve_time;
    rec.weight_iters = decision.weight_iters;
    rec.plan = std::move(decision.plan);

    if (options.record_memory)
      memory.record_step(x, u, memory.in_progress_index(), lap_step);

    bool crossed = false;
    double cross_time = 0.0;
    State xi = x;
    for (int i = 0; i < kSubsteps; ++i)
    {
      xi = sim_step(xi, u, track, p, dt_sim);
      if (!crossed && xi(kS) >= L)
      {
        crossed = true;
        cross_time = t * kControlPeriod + (i + 1) * dt_sim;
      }
    }
    x = xi;
    u_prev = u;
    ++lap_step;

    // Safety checks at the executed control-step state.
    for (int o = 0; o < n_obs; ++o)
    {
      const State &obs = scenario.obstacles[static_cast<std::size_t>(o)][static_cast<std::size_t>(t + 1)];
      const double margin = separation_margin(x, obs, L, p.length, p.width);
      if (margin <= 0.0)
      {
        log.events.push_back({t + 1, "collision", o, margin});
        ++log.collisions;
        rec.collision = true;
      }
    }
    if (std::abs(x(kEy)) > track.width() / 2.0)
    {
      log.events.push_back({t + 1, "boundary", -1, x(kEy)});
      ++log.boundary_violations;
      rec.boundary_violation = true;
    }
    log.steps.push_back(std::move(rec));

    if (crossed && x(kS) >= L)
    {
      log.lap_times.push_back(cross_time - lap_start_time);
      log.lap_steps.push_back(lap_step);
      if (options.record_memory)
      {
        memory.record_step(x, u, memory.in_progress_index(), lap_step);
        memory.finalize_lap(lap_step);
      }
      lap_start_time = cross_time;
      ++laps_done;
      x(kS) -= L;
      lap_step = 0;
      if (laps_done >= options.laps)
      {
        log.termination = "laps";
        ++t;
        break;
      }
      if (options.record_memory)
        memory.begin_lap();
    }
  }
  if (options.record_memory && memory.lap_in_progress())
  {
    memory.abandon_lap();
  }

  log.final_state = x;
  log.final_step = t;
  log.lap_completed = laps_done >= 1;
  const double ego_progress = laps_done * L + x(kS);
  const double ego_start = options.initial_state(kS);
  const int final_index = std::min(t, scenario.steps() - 1);
  for (int o = 0; o < n_obs; ++o)
  {
    const StateSequence &traj = scenario.obstacles[static_cast<std::size_t>(o)];
    const bool ahead_at_start = traj.front()(kS) > ego_start;
    if (ahead_at_start && ego_progress >= traj[static_cast<std::size_t>(final_index)](kS) + p.length)
      ++log.overtaken;
  }
  log.success = log.lap_completed && log.overtaken == n_obs && log.collisions == 0 && log.boundary_violations == 0;
  return log;
}

Controller make_pid_ego_controller(const VehicleParams &p, const PidEgoOptions &options)
{
  auto rng = std::make_shared<std::mt19937_64>(options.seed);
  auto noise = std::make_shared<Input>(Input::Zero());
  return [p, options, rng, noise](const ControlContext &ctx) {
    if (options.hold_steps > 0 && ctx.step % options.hold_steps == 0)
    {
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      (*noise)(kAccel) = options.accel_noise * unit(*rng);
      (*noise)(kSteer) = options.steer_noise * unit(*rng);
    }
    ControlDecision d;
    d.input = clamp_input(pid_obstacle_control(ctx.state, options.target_speed, 0.0, options.gains, p) + *noise, p);
    return d;
  };
}

void write_episode_csv(const EpisodeLog &log, std::ostream &out)
{
  out << "step,time,lap,vx,vy,wz,epsi,s,ey,a,delta,candidate,solve_time,weight_iters,collision,boundary";
  for (int o = 0; o < log.n_obstacles; ++o)
    out << ",obs" << o << "_s,obs" << o << "_ey,obs" << o << "_vx";
  out << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), ",%.17g", v);
    out << buf;
  };
  for (const StepRecord &r : log.steps)
  {
    out << r.step;
    num(r.time);
    out << ',' << r.lap;
    for (int i = 0; i < kStateDim; ++i)
      num(r.state(i));
    for (int i = 0; i < kInputDim; ++i)
      num(r.input(i));
    out << ',' << r.candidate;
    num(r.solve_time);
    out << ',' << r.weight_iters << ',' << (r.collision ? 1 : 0) << ',' << (r.boundary_violation ? 1 : 0);
    for (const State &o : r.obstacles)
    {
      num(o(kS));
      num(o(kEy));
      num(o(kVx));
    }
    out << '\n';
  }
}

nlohmann::json episode_summary(const EpisodeLog &log)
{
  double total = 0.0;
  for (const StepRecord &r : log.steps)
    total += r.solve_time;
  const double mean_solve = log.steps.empty() ? 0.0 : total / static_cast<double>(log.steps.size());
  return {{"lap_time", log.lap_times.empty() ? nlohmann::json(nullptr) : nlohmann::json(log.lap_times.back())},
          {"lap_times", log.lap_times},
          {"overtaken", log.overtaken},
          {"n_obstacles", log.n_obstacles},
          {"success", log.success},
          {"collisions", log.collisions},
          {"boundary_violations", log.boundary_violations},
          {"mean_solve_time", mean_solve},
          {"steps", static_cast<int>(log.steps.size())},
          {"termination", log.termination}};
}

} // namespace racer
