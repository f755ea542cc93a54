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

#include "racer/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace racer
{

double BaselineParams::omega_at(int k) const
{
  if (omega.empty())
    return 1.0;
  return omega.at(static_cast<std::size_t>(k));
}

void BaselineParams::validate() const
{
  common.validate();
  if (!(slack_weight.array() > 0.0).all())
    throw std::invalid_argument("BaselineParams: slack weight must be positive definite");
  if (!(gamma_cbf >= 0.0 && gamma_cbf < 1.0))
    throw std::invalid_argument("BaselineParams: gamma_cbf must lie in [0, 1)");
  if (!omega.empty() && static_cast<int>(omega.size()) != common.N)
    throw std::invalid_argument("BaselineParams: omega needs one entry per step");
  for (double w : omega)
  {
    if (!(w >= 0.0))
      throw std::invalid_argument("BaselineParams: omega must be non-negative");
  }
  if (!(q2_dcbf > 0.0))
    throw std::invalid_argument("BaselineParams: q2_dcbf must be positive");
}

nlohmann::json baseline_params_to_json(const BaselineParams &p)
{
  return {{"common", strategy_params_to_json(p.common)},
          {"Q_slack", std::vector<double>(p.slack_weight.data(), p.slack_weight.data() + kStateDim)},
          {"gamma_cbf", p.gamma_cbf},
          {"omega", p.omega},
          {"q2_dcbf", p.q2_dcbf}};
}

BaselineParams baseline_params_from_json(const nlohmann::json &doc)
{
  BaselineParams p;
  if (doc.contains("common"))
    p.common = strategy_params_from_json(doc.at("common"));
  if (doc.contains("Q_slack"))
  {
    const auto q = doc.at("Q_slack").get<std::vector<double>>();
    if (static_cast<int>(q.size()) != kStateDim)
      throw std::invalid_argument("BaselineParams: Q_slack needs six entries");
    for (int i = 0; i < kStateDim; ++i)
      p.slack_weight(i) = q[static_cast<std::size_t>(i)];
  }
  p.gamma_cbf = doc.value("gamma_cbf", p.gamma_cbf);
  p.omega = doc.value("omega", p.omega);
  p.q2_dcbf = doc.value("q2_dcbf", p.q2_dcbf);
  p.validate();
  return p;
}

double dcbf_transform(double b_k, double b_k1, double gamma_cbf, double omega_k)
{
  return gamma_cbf * omega_k * b_k - b_k1;
}

MarginEval separation_margin_eval(const State &ego, const State &obstacle, double track_length,
                                  const VehicleParams &vehicle)
{
  MarginEval m;
  const double ds = std::remainder(ego(kS) - obstacle(kS), track_length);
  const double dey = ego(kEy) - obstacle(kEy);
  m.value = separation_margin(ego, obstacle, track_length, vehicle.length, vehicle.width);
  m.dx(kS) = 2.0 * ds;
  m.dx(kEy) = 2.0 * dey;
  return m;
}

PlanBarrier dcbf_barrier_term(const StateSequence &prediction, const PlanModel &model, const BaselineParams &params,
                              const VehicleParams &vehicle, double track_length)
{
  using Eval = PlanBarrier::Eval;
  const int N = static_cast<int>(model.A.size());
  if (static_cast<int>(prediction.size()) < N + 1)
    throw std::invalid_argument("dcbf_barrier_term: prediction shorter than the horizon");
  std::vector<double> decay(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k)
    decay[static_cast<std::size_t>(k)] = params.gamma_cbf * params.omega_at(k);

  PlanBarrier b;
  b.q1 = params.common.q1;
  b.q2 = params.q2_dcbf;
  b.first_step = 0;
  b.last_step = N - 1;
  b.constraint = [prediction, model, decay, vehicle, track_length](const State &x, const Input &u, int k) {
    const std::size_t i = static_cast<std::size_t>(k);
    const State next = model.A[i] * x + model.B[i] * u + model.C[i];
    const MarginEval now = separation_margin_eval(x, prediction[i], track_length, vehicle);
    const MarginEval later = separation_margin_eval(next, prediction[i + 1], track_length, vehicle);
    Eval e;
    e.value = dcbf_transform(now.value, later.value, decay[i], 1.0);
    e.dx = decay[i] * now.dx - model.A[i].transpose() * later.dx;
    e.du = -model.B[i].transpose() * later.dx;
    return e;
  };
  return b;
}

double slack_objective(const State &x_N, const State &target, const StateWeights &Q)
{
  const State xi = target - x_N;
  return xi.dot(Q.asDiagonal() * xi);
}

std::vector<int> cost_to_go_vector(const std::vector<HistoryPoint> &points)
{
  std::vector<int> out;
  out.reserve(points.size());
  for (const HistoryPoint &p : points)
    out.push_back(p.cost_to_go);
  return out;
}

CandidateSolution baseline_solve_candidate(const TargetCandidate &target, const StepInputs &in,
                                           const PlanningModel &model, const std::vector<int> &gated,
                                           const BaselineParams &params)
{
  const StrategyParams &common = params.common;
  CandidateSolution sol;
  sol.target = target;
  const VehicleParams &vehicle = *in.vehicle;
  const double L = in.track->length();
  static const std::vector<StateSequence> kNoObstacles;
  const std::vector<StateSequence> &predictions = in.predictions ? *in.predictions : kNoObstacles;

  PlanCost spec;
  spec.target = target.state;
  spec.terminal_weight = params.slack_weight;
  spec.input_weight = common.input_weight;
  spec.rate_weight = common.rate_weight;
  spec.previous_input = in.previous_input;
  spec.barriers = box_barriers(vehicle, common.ey_limit, common.q1, common.q2_box, common.N, common.v_floor);
  for (int i : gated)
    spec.barriers.push_back(dcbf_barrier_term(predictions[static_cast<std::size_t>(i)], model.affine, params,
                                              vehicle, L));
  try
  {
    sol.trajectory = solve_seeded(model.affine, spec, in, in.warm_inputs, target, common.ilqr);
    sol.solved = true;
    sol.weight_iters = 1;
    sol.weights = {params.slack_weight, common.input_weight, common.rate_weight, params.q2_dcbf};
  }
  catch (const std::exception &e)
  {
    sol.error = e.what();
    return sol;
  }
  sol.min_margin = minimum_margin(sol.trajectory.states, predictions, L, vehicle, 1);
  sol.collision_free = sol.min_margin > 0.0;
  sol.next_step_clear = minimum_margin(StateSequence(sol.trajectory.states.begin(),
                                                     sol.trajectory.states.begin() +
                                                         std::min<std::size_t>(2, sol.trajectory.states.size())),
                                       predictions, L, vehicle, 1) > 0.0;
  sol.reachable = check_reachability(sol.trajectory, target.state, nullptr, !gated.empty(), common);
  return sol;
}

StepResult baseline_control_step(const StepInputs &in, const BaselineParams &params)
{
  if (in.memory == nullptr || in.track == nullptr || in.vehicle == nullptr)
    throw std::invalid_argument("baseline_control_step: memory, track and vehicle are required");
  const auto start = std::chrono::steady_clock::now();
  const StrategyParams &common = params.common;
  const VehicleParams &vehicle = *in.vehicle;

  StepResult result;
  const std::vector<TargetCandidate> targets = build_target_set(in.state, *in.memory, common);
  if (targets.empty())
    throw InsufficientHistory("baseline_control_step: empty target set");
  StepInputs local = in;
  if (static_cast<int>(local.warm_inputs.size()) != common.N)
    local.warm_inputs = seed_warm_inputs(targets, *in.memory, common.N);

  const PlanningModel model =
      build_planning_model(in.state, local.warm_inputs, *in.memory, *in.track, vehicle, common.atv);
  result.learned_steps = model.learned_steps;
  static const std::vector<StateSequence> kNoObstacles;
  const std::vector<StateSequence> &predictions = in.predictions ? *in.predictions : kNoObstacles;
  result.gated = gate_obstacles(in.state, predictions, common, vehicle, in.track->length());
  result.obstacles_present = !result.gated.empty();

  int first_clear = -1;
  for (const TargetCandidate &t : targets)
  {
    result.candidates.push_back(baseline_solve_candidate(t, local, model, result.gated, params));
    ++result.solves;
    const CandidateSolution &c = result.candidates.back();
    if (!c.solved || !c.collision_free)
      continue;
    const int index = static_cast<int>(result.candidates.size()) - 1;
    if (first_clear < 0)
      first_clear = index;
    if (c.reachable)
    {
      result.chosen = index;
      break;
    }
  }
  if (result.chosen < 0)
    result.chosen = first_clear;

  if (result.chosen >= 0)
  {
    const Trajectory &traj = result.candidates[static_cast<std::size_t>(result.chosen)].trajectory;
    result.input = clamp_input(traj.inputs.front(), vehicle);
    result.plan.assign(traj.states.begin(), traj.states.end());
    result.plan_inputs.assign(traj.inputs.begin(), traj.inputs.end());
  }
  else
  {
    result.fallback = Fallback::brake;
    result.input = clamp_input(make_input(-vehicle.a_max, in.previous_input(kSteer)), vehicle);
  }
  result.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

BaselineController::BaselineController(BaselineParams params, VehicleParams vehicle)
    : params_(std::move(params)), vehicle_(std::move(vehicle))
{
  params_.validate();
}

void BaselineController::reset()
{
  warm_.clear();
  last_ = StepResult{};
}

ControlDecision BaselineController::operator()(const ControlContext &ctx)
{
  StepInputs in;
  in.state = ctx.state;
  in.previous_input = ctx.previous_input;
  in.memory = ctx.memory;
  in.predictions = ctx.predictions;
  in.track = ctx.track;
  in.vehicle = &vehicle_;
  if (!warm_.empty())
    in.warm_inputs = shift_inputs(warm_, params_.common.N, ctx.previous_input);

  last_ = baseline_control_step(in, params_);
  warm_ = last_.plan_inputs;

  ControlDecision d;
  d.input = last_.input;
  d.candidate = last_.chosen;
  d.solve_time = last_.solve_time;
  d.weight_iters = last_.chosen >= 0 ? 1 : 0;
  d.plan = last_.plan;
  if (last_.fallback != Fallback::none)
    d.note = to_string(last_.fallback);
  return d;
}

} // namespace racer
