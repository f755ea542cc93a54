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

#include "racer/strategy.hpp"

#include "racer/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace racer
{

namespace
{

double periodic_gap(double a, double b, double track_length)
{
  const double d = a - b;
  return track_length > 0.0 ? std::remainder(d, track_length) : d;
}

nlohmann::json vec_to_json(const Eigen::VectorXd &v)
{
  return std::vector<double>(v.data(), v.data() + v.size());
}

template <typename Vec>
Vec vec_from_json(const nlohmann::json &doc, const Vec &fallback)
{
  const auto values = doc.get<std::vector<double>>();
  if (static_cast<int>(values.size()) != fallback.size())
  {
    throw std::invalid_argument("StrategyParams: weight vector has the wrong length");
  }
  Vec v;
  for (int i = 0; i < v.size(); ++i)
    v(i) = values[static_cast<std::size_t>(i)];
  return v;
}

} // namespace

void StrategyParams::validate() const
{
  if (K < 1 || N < 1)
    throw std::invalid_argument("StrategyParams: K and N must be positive");
  if (!(m_qn > 1.0) || !(m_r > 1.0) || !(m_dr > 1.0))
    throw std::invalid_argument("StrategyParams: m_QN, m_R and m_dR must exceed 1");
  if (!(m_q2 > 0.0 && m_q2 < 1.0))
    throw std::invalid_argument("StrategyParams: m_q2 must lie in (0, 1)");
  if (!(eps2 >= eps1) || !(psi2 >= psi1))
    throw std::invalid_argument("StrategyParams: eps2 >= eps1 and psi2 >= psi1 required");
  if (max_weight_iters < 1)
    throw std::invalid_argument("StrategyParams: max_weight_iters must be positive");
  if ((terminal_weight.array() < 0.0).any() || (input_weight.array() < 0.0).any() ||
      (rate_weight.array() < 0.0).any() || (knn_weights.array() < 0.0).any())
    throw std::invalid_argument("StrategyParams: weights must be non-negative");
  if (!(q1 > 0.0) || !(q2_obstacle > 0.0) || !(q2_box > 0.0) || !(ey_limit > 0.0))
    throw std::invalid_argument("StrategyParams: barrier parameters must be positive");
  if (lap_window < 1)
    throw std::invalid_argument("StrategyParams: lap_window must be positive");
}

nlohmann::json strategy_params_to_json(const StrategyParams &p)
{
  return {{"K", p.K},
          {"N", p.N},
          {"Q_N", vec_to_json(p.terminal_weight)},
          {"R", vec_to_json(p.input_weight)},
          {"dR", vec_to_json(p.rate_weight)},
          {"m_QN", p.m_qn},
          {"m_R", p.m_r},
          {"m_dR", p.m_dr},
          {"m_q2", p.m_q2},
          {"epsilon", p.epsilon},
          {"gamma", p.gamma},
          {"s_safe", p.s_safe},
          {"t_safe", p.t_safe},
          {"eps1", p.eps1},
          {"eps2", p.eps2},
          {"psi1", p.psi1},
          {"psi2", p.psi2},
          {"max_weight_iters", p.max_weight_iters},
          {"mode", p.mode == SelectionMode::parallel ? "parallel" : "sequential"},
          {"threads", p.threads},
          {"q1", p.q1},
          {"q2_obstacle", p.q2_obstacle},
          {"q2_box", p.q2_box},
          {"ey_limit", p.ey_limit},
          {"v_floor", p.v_floor},
          {"safe_boundary_barrier", p.safe_boundary_barrier},
          {"safe_boundary_clearance", p.safe_boundary_clearance},
          {"knn_weights", vec_to_json(p.knn_weights)},
          {"lap_window", p.lap_window},
          {"n_reg", p.atv.n_reg},
          {"atv_lap_window", p.atv.lap_window},
          {"atv_max_bandwidth", p.atv.max_bandwidth},
          {"max_ilqr_iters", p.ilqr.max_iterations}};
}

StrategyParams strategy_params_from_json(const nlohmann::json &doc)
{
  StrategyParams p;
  p.K = doc.value("K", p.K);
  p.N = doc.value("N", p.N);
  if (doc.contains("Q_N"))
    p.terminal_weight = vec_from_json(doc.at("Q_N"), p.terminal_weight);
  if (doc.contains("R"))
    p.input_weight = vec_from_json(doc.at("R"), p.input_weight);
  if (doc.contains("dR"))
    p.rate_weight = vec_from_json(doc.at("dR"), p.rate_weight);
  p.m_qn = doc.value("m_QN", p.m_qn);
  p.m_r = doc.value("m_R", p.m_r);
  p.m_dr = doc.value("m_dR", p.m_dr);
  p.m_q2 = doc.value("m_q2", p.m_q2);
  p.epsilon = doc.value("epsilon", p.epsilon);
  p.gamma = doc.value("gamma", p.gamma);
  p.s_safe = doc.value("s_safe", p.s_safe);
  p.t_safe = doc.value("t_safe", p.t_safe);
  p.eps1 = doc.value("eps1", p.eps1);
  p.eps2 = doc.value("eps2", p.eps2);
  p.psi1 = doc.value("psi1", p.psi1);
  p.psi2 = doc.value("psi2", p.psi2);
  p.max_weight_iters = doc.value("max_weight_iters", p.max_weight_iters);
  const std::string mode = doc.value("mode", std::string("sequential"));
  if (mode == "sequential")
    p.mode = SelectionMode::sequential;
  else if (mode == "parallel")
    p.mode = SelectionMode::parallel;
  else
    throw std::invalid_argument("StrategyParams: unknown mode '" + mode + "'");
  p.threads = doc.value("threads", p.threads);
  p.q1 = doc.value("q1", p.q1);
  p.q2_obstacle = doc.value("q2_obstacle", p.q2_obstacle);
  p.q2_box = doc.value("q2_box", p.q2_box);
  p.ey_limit = doc.value("ey_limit", p.ey_limit);
  p.v_floor = doc.value("v_floor", p.v_floor);
  p.safe_boundary_barrier = doc.value("safe_boundary_barrier", p.safe_boundary_barrier);
  p.safe_boundary_clearance = doc.value("safe_boundary_clearance", p.safe_boundary_clearance);
  if (doc.contains("knn_weights"))
    p.knn_weights = vec_from_json(doc.at("knn_weights"), p.knn_weights);
  p.lap_window = doc.value("lap_window", p.lap_window);
  p.atv.n_reg = doc.value("n_reg", p.atv.n_reg);
  p.atv.lap_window = doc.value("atv_lap_window", p.atv.lap_window);
  p.atv.max_bandwidth = doc.value("atv_max_bandwidth", p.atv.max_bandwidth);
  p.ilqr.max_iterations = doc.value("max_ilqr_iters", p.ilqr.max_iterations);
  p.validate();
  return p;
}

StateWeights obstacle_weight_matrix(double vx, const StrategyParams &params, const VehicleParams &vehicle)
{
  StateWeights P = StateWeights::Zero();
  const double ls = vehicle.length + vx * params.t_safe + params.s_safe;
  const double ds = vehicle.width + params.s_safe;
  P(kS) = 1.0 / (ls * ls);
  P(kEy) = 1.0 / (ds * ds);
  return P;
}

double obstacle_barrier(const State &x, const State &x_obs, const StateWeights &P, double track_length)
{
  const double ds = periodic_gap(x(kS), x_obs(kS), track_length);
  const double dey = x(kEy) - x_obs(kEy);
  return 1.0 - P(kS) * ds * ds - P(kEy) * dey * dey;
}

double minimum_margin(const StateSequence &plan, const std::vector<StateSequence> &obstacles, double track_length,
                      const VehicleParams &vehicle, int first)
{
  double worst = std::numeric_limits<double>::infinity();
  for (const StateSequence &obs : obstacles)
  {
    const std::size_t n = std::min(plan.size(), obs.size());
    for (std::size_t k = static_cast<std::size_t>(std::max(first, 0)); k < n; ++k)
    {
      worst = std::min(worst, separation_margin(plan[k], obs[k], track_length, vehicle.length, vehicle.width));
    }
  }
  return worst;
}

bool safe_boundary_clear(const StateSequence &plan, const std::vector<StateSequence> &obstacles,
                         double track_length, const VehicleParams &vehicle)
{
  return minimum_margin(plan, obstacles, track_length, vehicle, 1) > 0.0;
}

bool within_overtaking_range(const State &ego, const State &obstacle, const StrategyParams &params,
                             const VehicleParams &vehicle, double track_length)
{
  const double gap = periodic_gap(obstacle(kS), ego(kS), track_length);
  const double lower = -params.epsilon * vehicle.length;
  const double upper = params.epsilon * vehicle.length + params.gamma * std::abs(ego(kVx) - obstacle(kVx));
  return gap >= lower && gap <= upper;
}

bool check_reachability(const Trajectory &traj, const State &target, const Trajectory *previous_iteration,
                        bool obstacles_present, const StrategyParams &params)
{
  if (traj.states.empty())
    return false;
  const State &xN = traj.states.back();
  const double eps = obstacles_present ? params.eps2 : params.eps1;
  if ((xN - target).squaredNorm() < eps)
    return true;
  if (previous_iteration == nullptr || previous_iteration->states.empty())
    return false;
  const State &prevN = previous_iteration->states.back();
  const double denom = prevN.squaredNorm();
  if (!(denom > 0.0))
    return false;
  const double psi = obstacles_present ? params.psi2 : params.psi1;
  return (prevN - xN).squaredNorm() / denom < psi;
}

std::vector<int> gate_obstacles(const State &ego, const std::vector<StateSequence> &predictions,
                                const StrategyParams &params, const VehicleParams &vehicle, double track_length)
{
  std::vector<int> gated;
  const double reach = params.N * kControlPeriod * (std::max(ego(kVx), 0.0) + vehicle.v_max);
  for (std::size_t i = 0; i < predictions.size(); ++i)
  {
    if (predictions[i].empty())
      continue;
    const State &obs = predictions[i].front();
    const bool near = std::abs(periodic_gap(obs(kS), ego(kS), track_length)) <= reach;
    if (near || within_overtaking_range(ego, obs, params, vehicle, track_length))
      gated.push_back(static_cast<int>(i));
  }
  return gated;
}

std::vector<PlanBarrier> box_barriers(const VehicleParams &vehicle, double ey_limit, double q1, double q2, int N,
                                      double v_floor)
{
  using Eval = PlanBarrier::Eval;
  std::vector<PlanBarrier> out;
  auto input_bound = [&](int index, double sign, double bound) {
    PlanBarrier b;
    b.q1 = q1;
    b.q2 = q2;
    b.first_step = 0;
    b.last_step = N - 1;
    b.constraint = [index, sign, bound](const State &, const Input &u, int) {
      Eval e;
      e.value = sign * u(index) - bound;
      e.du(index) = sign;
      return e;
    };
    out.push_back(std::move(b));
  };
  input_bound(kAccel, 1.0, vehicle.a_max);
  input_bound(kAccel, -1.0, vehicle.a_max);
  input_bound(kSteer, 1.0, vehicle.delta_max);
  input_bound(kSteer, -1.0, vehicle.delta_max);

  auto state_bound = [&](int index, double sign, double bound) {
    PlanBarrier b;
    b.q1 = q1;
    b.q2 = q2;
    b.first_step = 1;
    b.last_step = N;
    b.constraint = [index, sign, bound](const State &x, const Input &, int) {
      Eval e;
      e.value = sign * x(index) - bound;
      e.dx(index) = sign;
      return e;
    };
    out.push_back(std::move(b));
  };
  state_bound(kEy, 1.0, ey_limit);
  state_bound(kEy, -1.0, ey_limit);
  state_bound(kVx, 1.0, vehicle.v_max);
  state_bound(kVx, -1.0, -std::max(vehicle.v_min, v_floor));
  return out;
}

PlanBarrier obstacle_barrier_term(const StateSequence &prediction, const StrategyParams &params,
                                  const VehicleParams &vehicle, double track_length, double q2)
{
  using Eval = PlanBarrier::Eval;
  PlanBarrier b;
  b.q1 = params.q1;
  b.q2 = q2;
  b.first_step = 1;
  b.last_step = static_cast<int>(prediction.size()) - 1;
  const double l = vehicle.length;
  const double t_safe = params.t_safe;
  const double s_safe = params.s_safe;
  const double d = vehicle.width + params.s_safe;
  const double p6 = 1.0 / (d * d);
  b.constraint = [prediction, l, t_safe, s_safe, p6, track_length](const State &x, const Input &, int k) {
    const State &obs = prediction[static_cast<std::size_t>(k)];
    const double vx = std::max(x(kVx), 0.0);
    const double ls = l + vx * t_safe + s_safe;
    const double p5 = 1.0 / (ls * ls);
    const double ds = periodic_gap(x(kS), obs(kS), track_length);
    const double dey = x(kEy) - obs(kEy);
    Eval e;
    e.value = 1.0 - p5 * ds * ds - p6 * dey * dey;
    e.dx(kS) = -2.0 * p5 * ds;
    e.dx(kEy) = -2.0 * p6 * dey;
    if (x(kVx) > 0.0)
      e.dx(kVx) = 2.0 * t_safe * ds * ds / (ls * ls * ls);
    return e;
  };
  return b;
}

PlanBarrier safe_boundary_barrier_term(const StateSequence &prediction, const VehicleParams &vehicle,
                                       double track_length, double clearance, double q1, double q2)
{
  using Eval = PlanBarrier::Eval;
  PlanBarrier b;
  b.q1 = q1;
  b.q2 = q2;
  b.first_step = 1;
  b.last_step = static_cast<int>(prediction.size()) - 1;
  const double r = std::hypot(vehicle.length, vehicle.width) + clearance;
  const double inv_r2 = 1.0 / (r * r);
  b.constraint = [prediction, inv_r2, track_length](const State &x, const Input &, int k) {
    const State &obs = prediction[static_cast<std::size_t>(k)];
    const double ds = periodic_gap(x(kS), obs(kS), track_length);
    const double dey = x(kEy) - obs(kEy);
    Eval e;
    e.value = 1.0 - inv_r2 * (ds * ds + dey * dey);
    e.dx(kS) = -2.0 * inv_r2 * ds;
    e.dx(kEy) = -2.0 * inv_r2 * dey;
    return e;
  };
  return b;
}

std::vector<TargetCandidate> build_target_set(const State &x, const LapMemory &memory, const StrategyParams &params)
{
  const std::vector<Neighbor> neighbors = memory.knn_query(x, params.K, params.knn_weights, params.lap_window);
  std::vector<TargetCandidate> out;
  out.reserve(neighbors.size());
  for (const Neighbor &n : neighbors)
  {
    const LapMemory::Successor succ = memory.successor(n.point.lap, n.point.step, params.N);
    TargetCandidate c;
    c.state = succ.state;
    c.state(kS) += n.s_offset;
    c.cost_to_go = succ.cost_to_go;
    c.lap = n.point.lap;
    c.step = n.point.step;
    c.distance = n.distance;
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [](const TargetCandidate &a, const TargetCandidate &b) {
    if (a.cost_to_go != b.cost_to_go)
      return a.cost_to_go < b.cost_to_go;
    return a.distance < b.distance;
  });
  return out;
}

InputSequence shift_inputs(const InputSequence &inputs, int N, const Input &fallback)
{
  InputSequence out;
  out.reserve(static_cast<std::size_t>(N));
  for (std::size_t i = 1; i < inputs.size() && static_cast<int>(out.size()) < N; ++i)
    out.push_back(inputs[i]);
  const Input pad = inputs.empty() ? fallback : inputs.back();
  while (static_cast<int>(out.size()) < N)
    out.push_back(pad);
  return out;
}

InputSequence recorded_inputs(const TargetCandidate &target, const LapMemory &memory, int N)
{
  InputSequence out;
  for (int k = 0; k < N; ++k)
    out.push_back(memory.successor(target.lap, target.step, k).input);
  return out;
}

InputSequence seed_warm_inputs(const std::vector<TargetCandidate> &targets, const LapMemory &memory, int N)
{
  if (targets.empty())
    throw InsufficientHistory("seed_warm_inputs: empty target set");
  const TargetCandidate &nearest = *std::min_element(
      targets.begin(), targets.end(),
      [](const TargetCandidate &a, const TargetCandidate &b) { return a.distance < b.distance; });
  return recorded_inputs(nearest, memory, N);
}

Trajectory solve_seeded(const PlanModel &model, const PlanCost &spec, const StepInputs &in, const InputSequence &warm,
                        const TargetCandidate &target, const IlqrOptions &options)
{
  if (in.memory == nullptr)
    return solve(model, spec, in.state, warm, options);
  const InputSequence recorded = recorded_inputs(target, *in.memory, model.horizon());
  auto seed_cost = [&](const InputSequence &u) {
    if (static_cast<int>(u.size()) != model.horizon())
      return std::numeric_limits<double>::infinity();
    const double c = total_cost(rollout(model, in.state, u), u, spec);
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
  };
  const double c_warm = seed_cost(warm);
  const double c_rec = seed_cost(recorded);
  return solve(model, spec, in.state, c_rec < c_warm ? recorded : warm, options);
}

PlanningModel build_planning_model(const State &x, const InputSequence &warm_inputs, const LapMemory &memory,
                                   const TrackLayout &track, const VehicleParams &vehicle, const AtvOptions &options)
{
  const int N = static_cast<int>(warm_inputs.size());
  if (N < 1)
    throw std::invalid_argument("build_planning_model: empty warm start");
  PlanningModel pm;
  pm.reference_inputs.reserve(static_cast<std::size_t>(N));
  pm.reference_states.reserve(static_cast<std::size_t>(N));
  const double dt_sim = options.dt / options.substeps;
  State xr = x;
  for (int k = 0; k < N; ++k)
  {
    const Input u = clamp_input(warm_inputs[static_cast<std::size_t>(k)], vehicle);
    pm.reference_states.push_back(xr);
    pm.reference_inputs.push_back(u);
    xr = sim_interval(xr, u, track, vehicle, dt_sim, options.substeps);
  }
  const AtvModel atv = fit_atv_model(memory, pm.reference_states, pm.reference_inputs, track, vehicle, options);
  pm.affine.A.assign(atv.A.begin(), atv.A.end());
  pm.affine.B.assign(atv.B.begin(), atv.B.end());
  pm.affine.C.assign(atv.C.begin(), atv.C.end());
  pm.learned_steps = static_cast<int>(std::count(atv.learned.begin(), atv.learned.end(), true));
  return pm;
}

WeightSet weights_for_pass(const StrategyParams &params, int pass)
{
  WeightSet w{params.terminal_weight, params.input_weight, params.rate_weight, params.q2_obstacle};
  for (int i = 0; i < pass; ++i)
  {
    w.terminal /= params.m_qn;
    w.input /= params.m_r;
    w.rate /= params.m_dr;
    w.q2_obstacle *= 1.0 + params.m_q2;
  }
  return w;
}

CandidateSolution solve_candidate(const TargetCandidate &target, const StepInputs &in, const PlanningModel &model,
                                  const std::vector<int> &gated, const StrategyParams &params)
{
  CandidateSolution sol;
  sol.target = target;
  const VehicleParams &vehicle = *in.vehicle;
  const double L = in.track->length();
  static const std::vector<StateSequence> kNoObstacles;
  const std::vector<StateSequence> &predictions = in.predictions ? *in.predictions : kNoObstacles;
  const bool obstacles_present = !gated.empty();

  PlanCost spec;
  spec.target = target.state;
  spec.terminal_weight = params.terminal_weight;
  spec.input_weight = params.input_weight;
  spec.rate_weight = params.rate_weight;
  spec.previous_input = in.previous_input;
  spec.barriers = box_barriers(vehicle, params.ey_limit, params.q1, params.q2_box, params.N, params.v_floor);
  const std::size_t first_obstacle = spec.barriers.size();
  for (int i : gated)
  {
    spec.barriers.push_back(
        obstacle_barrier_term(predictions[static_cast<std::size_t>(i)], params, vehicle, L, params.q2_obstacle));
    if (params.safe_boundary_barrier)
    {
      spec.barriers.push_back(safe_boundary_barrier_term(predictions[static_cast<std::size_t>(i)], vehicle, L,
                                                         params.safe_boundary_clearance, params.q1,
                                                         params.q2_obstacle));
    }
  }

  const int passes = obstacles_present ? params.max_weight_iters : 1;
  InputSequence warm = in.warm_inputs;
  Trajectory previous;
  bool have_previous = false;
  try
  {
    for (int it = 0; it < passes; ++it)
    {
      const WeightSet w = weights_for_pass(params, it);
      spec.terminal_weight = w.terminal;
      spec.input_weight = w.input;
      spec.rate_weight = w.rate;
      for (std::size_t b = first_obstacle; b < spec.barriers.size(); ++b)
        spec.barriers[b].q2 = w.q2_obstacle;
      if (it > 0)
      {
        previous = sol.trajectory;
        have_previous = true;
        warm.assign(sol.trajectory.inputs.begin(), sol.trajectory.inputs.end());
      }
      sol.trajectory = solve_seeded(model.affine, spec, in, warm, target, params.ilqr);
      sol.weight_iters = it + 1;
      sol.weights = w;
      sol.solved = true;
      if (safe_boundary_clear(sol.trajectory.states, predictions, L, vehicle))
        break;
    }
  }
  catch (const std::exception &e)
  {
    sol.error = e.what();
    if (!have_previous)
    {
      sol.solved = false;
      return sol;
    }
    sol.trajectory = previous;
    have_previous = false;
  }

  sol.min_margin = minimum_margin(sol.trajectory.states, predictions, L, vehicle, 1);
  sol.collision_free = sol.min_margin > 0.0;
  sol.next_step_clear = minimum_margin(StateSequence(sol.trajectory.states.begin(),
                                                     sol.trajectory.states.begin() +
                                                         std::min<std::size_t>(2, sol.trajectory.states.size())),
                                       predictions, L, vehicle, 1) > 0.0;
  sol.reachable =
      check_reachability(sol.trajectory, target.state, have_previous ? &previous : nullptr, obstacles_present, params);
  return sol;
}

std::string to_string(Fallback f)
{
  switch (f)
  {
  case Fallback::none:
    return "none";
  case Fallback::max_margin:
    return "max_margin";
  case Fallback::brake:
    return "brake";
  }
  return "unknown";
}

int select_feasible(const std::vector<CandidateSolution> &candidates)
{
  int best = -1;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i)
  {
    const CandidateSolution &c = candidates[static_cast<std::size_t>(i)];
    if (!c.feasible())
      continue;
    if (best < 0)
    {
      best = i;
      continue;
    }
    const CandidateSolution &b = candidates[static_cast<std::size_t>(best)];
    if (c.target.cost_to_go < b.target.cost_to_go ||
        (c.target.cost_to_go == b.target.cost_to_go && c.trajectory.cost < b.trajectory.cost))
      best = i;
  }
  return best;
}

int select_max_margin(const std::vector<CandidateSolution> &candidates)
{
  int best = -1;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i)
  {
    const CandidateSolution &c = candidates[static_cast<std::size_t>(i)];
    if (!c.solved || !c.collision_free)
      continue;
    if (best < 0 || c.min_margin > candidates[static_cast<std::size_t>(best)].min_margin)
      best = i;
  }
  return best;
}

StepResult control_step(const StepInputs &in, const StrategyParams &params)
{
  if (in.memory == nullptr || in.track == nullptr || in.vehicle == nullptr)
    throw std::invalid_argument("control_step: memory, track and vehicle are required");
  const auto start = std::chrono::steady_clock::now();
  const VehicleParams &vehicle = *in.vehicle;
  const double L = in.track->length();

  StepResult result;
  const std::vector<TargetCandidate> targets = build_target_set(in.state, *in.memory, params);
  if (targets.empty())
    throw InsufficientHistory("control_step: empty target set");

  StepInputs local = in;
  if (static_cast<int>(local.warm_inputs.size()) != params.N)
    local.warm_inputs = seed_warm_inputs(targets, *in.memory, params.N);

  const PlanningModel model = build_planning_model(in.state, local.warm_inputs, *in.memory, *in.track, vehicle,
                                                   params.atv);
  result.learned_steps = model.learned_steps;
  static const std::vector<StateSequence> kNoObstacles;
  const std::vector<StateSequence> &predictions = in.predictions ? *in.predictions : kNoObstacles;
  result.gated = gate_obstacles(in.state, predictions, params, vehicle, L);
  result.obstacles_present = !result.gated.empty();

  const int K = static_cast<int>(targets.size());
  result.candidates.resize(static_cast<std::size_t>(K));
  std::vector<bool> solved(static_cast<std::size_t>(K), false);
  auto solve_one = [&](int i) {
    result.candidates[static_cast<std::size_t>(i)] =
        solve_candidate(targets[static_cast<std::size_t>(i)], local, model, result.gated, params);
  };

  if (params.mode == SelectionMode::parallel)
  {
    parallel_for(K, params.threads, solve_one);
    std::fill(solved.begin(), solved.end(), true);
    result.solves = K;
  }
  else
  {
    // Solve tie groups of equal cost-to-go in order; stop at the first group with a feasible member.
    int i = 0;
    while (i < K)
    {
      int j = i;
      while (j < K && targets[static_cast<std::size_t>(j)].cost_to_go == targets[static_cast<std::size_t>(i)].cost_to_go)
        ++j;
      bool any = false;
      for (int k = i; k < j; ++k)
      {
        solve_one(k);
        solved[static_cast<std::size_t>(k)] = true;
        ++result.solves;
        any = any || result.candidates[static_cast<std::size_t>(k)].feasible();
      }
      if (any)
        break;
      i = j;
    }
  }
  for (int i = 0; i < K; ++i)
  {
    if (!solved[static_cast<std::size_t>(i)])
      result.candidates[static_cast<std::size_t>(i)].target = targets[static_cast<std::size_t>(i)];
  }

  int chosen = select_feasible(result.candidates);
  if (chosen < 0)
  {
    chosen = select_max_margin(result.candidates);
    result.fallback = chosen >= 0 ? Fallback::max_margin : Fallback::brake;
  }
  result.chosen = chosen;
  if (chosen >= 0)
  {
    const Trajectory &traj = result.candidates[static_cast<std::size_t>(chosen)].trajectory;
    result.input = clamp_input(traj.inputs.front(), vehicle);
    result.plan.assign(traj.states.begin(), traj.states.end());
    result.plan_inputs.assign(traj.inputs.begin(), traj.inputs.end());
  }
  else
  {
    result.input = clamp_input(make_input(-vehicle.a_max, in.previous_input(kSteer)), vehicle);
  }
  result.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RacingStrategy::RacingStrategy(StrategyParams params, VehicleParams vehicle)
    : params_(std::move(params)), vehicle_(std::move(vehicle))
{
  params_.validate();
}

void RacingStrategy::reset()
{
  warm_.clear();
  last_ = StepResult{};
}

ControlDecision RacingStrategy::operator()(const ControlContext &ctx)
{
  StepInputs in;
  in.state = ctx.state;
  in.previous_input = ctx.previous_input;
  in.memory = ctx.memory;
  in.predictions = ctx.predictions;
  in.track = ctx.track;
  in.vehicle = &vehicle_;
  if (!warm_.empty())
    in.warm_inputs = shift_inputs(warm_, params_.N, ctx.previous_input);

  last_ = control_step(in, params_);
  warm_ = last_.plan_inputs;

  ControlDecision d;
  d.input = last_.input;
  d.candidate = last_.chosen;
  d.solve_time = last_.solve_time;
  d.weight_iters =
      last_.chosen >= 0 ? last_.candidates[static_cast<std::size_t>(last_.chosen)].weight_iters : 0;
  d.plan = last_.plan;
  if (last_.fallback != Fallback::none)
    d.note = to_string(last_.fallback);
  return d;
}

} // namespace racer
