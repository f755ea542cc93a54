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

#ifndef RACER_BASELINE_HPP_
#define RACER_BASELINE_HPP_

#include "racer/strategy.hpp"

#include "json.hpp"

#include <vector>

namespace racer
{

/// Slacked-target LMPC with discrete control-barrier obstacle constraints.
struct BaselineParams
{
  /// K, N, input weights, box barriers, KNN, gating, ATV and solver options.
  /// Its adaptive-weight fields are unused.
  StrategyParams common;
  /// Q_slack on the terminal slack x_N - z.
  StateWeights slack_weight = (50.0 * (StateWeights() << 1, 1, 1, 1, 10, 10).finished()).eval();
  double gamma_cbf = 0.6;
  /// Per-step decay factors omega_k, k = 0..N-1; empty means all ones.
  std::vector<double> omega;
  double q2_dcbf = 5.0;

  double omega_at(int k) const;
  void validate() const;
};

nlohmann::json baseline_params_to_json(const BaselineParams &p);
BaselineParams baseline_params_from_json(const nlohmann::json &doc);

/// gamma * omega * b_k - b_k1; the step is admissible iff the result is <= 0.
double dcbf_transform(double b_k, double b_k1, double gamma_cbf, double omega_k);

/// Safe-boundary margin as a differentiable function of (s, ey).
struct MarginEval
{
  double value = 0.0;
  State dx = State::Zero();
};
MarginEval separation_margin_eval(const State &ego, const State &obstacle, double track_length,
                                  const VehicleParams &vehicle);

/**
 * @brief DCBF barrier against one obstacle on steps 0..N-1.
 *
 * x_{k+1} is expressed through the affine step model, so the constraint and
 * its gradient depend on (x_k, u_k) only.
 */
PlanBarrier dcbf_barrier_term(const StateSequence &prediction, const PlanModel &model, const BaselineParams &params,
                              const VehicleParams &vehicle, double track_length);

/// (x_N - z)^T Q (x_N - z): the slack objective with the slack eliminated.
double slack_objective(const State &x_N, const State &target, const StateWeights &Q);

/// Stored cost-to-go of each point, in query order.
std::vector<int> cost_to_go_vector(const std::vector<HistoryPoint> &points);

/// Solves one candidate with fixed weights and DCBF obstacle barriers.
CandidateSolution baseline_solve_candidate(const TargetCandidate &target, const StepInputs &in,
                                           const PlanningModel &model, const std::vector<int> &gated,
                                           const BaselineParams &params);

/**
 * @brief One control step of the baseline.
 *
 * Candidates are solved in ascending cost-to-go. The first collision-free one
 * that also reaches its target is executed; otherwise the first collision-free
 * one; otherwise the car brakes fully.
 * @throws InsufficientHistory when the target set cannot be built.
 */
StepResult baseline_control_step(const StepInputs &in, const BaselineParams &params);

class BaselineController
{
public:
  BaselineController(BaselineParams params, VehicleParams vehicle);

  ControlDecision operator()(const ControlContext &ctx);
  const StepResult &last_result() const { return last_; }
  void reset();

private:
  BaselineParams params_;
  VehicleParams vehicle_;
  InputSequence warm_;
  StepResult last_;
};

} // namespace racer

#endif // RACER_BASELINE_HPP_
