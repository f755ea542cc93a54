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

#ifndef RACER_STRATEGY_HPP_
#define RACER_STRATEGY_HPP_

#include "racer/atv_model.hpp"
#include "racer/ilqr.hpp"
#include "racer/lap_memory.hpp"
#include "racer/simulation.hpp"
#include "racer/track.hpp"
#include "racer/types.hpp"
#include "racer/vehicle.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace racer
{

using Trajectory = OpenLoopTrajectory<kStateDim, kInputDim, double>;
using PlanCost = CostSpec<kStateDim, kInputDim, double>;
using PlanBarrier = BarrierTerm<kStateDim, kInputDim, double>;
using PlanModel = AffineModel<kStateDim, kInputDim, double>;

enum class SelectionMode
{
  sequential,
  parallel,
};

/// Tuning of the learning racing controller. Defaults follow the published table
/// where it gives a value and are documented choices otherwise.
struct StrategyParams
{
  int K = 32;
  int N = 12;
  StateWeights terminal_weight = (StateWeights() << 10, 10, 10, 10, 100, 100).finished();
  InputWeights input_weight = (InputWeights() << 1, 10).finished();
  InputWeights rate_weight = (InputWeights() << 5, 50).finished();
  double m_qn = 20.0;
  double m_r = 5.0;
  double m_dr = 1.1;
  double m_q2 = 0.1;
  /// Overtaking range: margin ratio and closing-speed ratio.
  double epsilon = 5.0;
  double gamma = 2.0;
  double s_safe = 0.1;
  double t_safe = 2.0;
  /// Terminal tracking thresholds without / with surrounding cars.
  double eps1 = 0.4;
  double eps2 = 1.0;
  /// Convergence-ratio thresholds without / with surrounding cars.
  double psi1 = 0.0;
  double psi2 = 0.03;
  int max_weight_iters = 2;
  SelectionMode mode = SelectionMode::sequential;
  /// Worker threads of the parallel mode (0: hardware concurrency).
  int threads = 0;

  double q1 = 1.0;
  double q2_obstacle = 5.0;
  double q2_box = 30.0;
  /// |ey| bound enforced by the planner barrier (tighter than the track half-width).
  double ey_limit = 0.8;
  /// Lower speed bound of the planner barrier; keeps plans away from the
  /// standstill where steering has no first-order effect.
  double v_floor = 0.1;
  /// Adds a circular barrier of radius sqrt(l^2 + d^2) + clearance around each
  /// attached obstacle so plans respect the safe-boundary check, whose radius
  /// exceeds the lateral half-axis of the ellipse.
  bool safe_boundary_barrier = true;
  double safe_boundary_clearance = 0.1;
  StateWeights knn_weights = (StateWeights() << 0.1, 0.1, 0.1, 0.1, 1.0, 1.0).finished();
  int lap_window = 2;
  IlqrOptions ilqr;
  AtvOptions atv;

  void validate() const;
};

nlohmann::json strategy_params_to_json(const StrategyParams &p);
StrategyParams strategy_params_from_json(const nlohmann::json &doc);

/// diag(0, 0, 0, 0, (l + vx t_safe + s_safe)^-2, (d + s_safe)^-2).
StateWeights obstacle_weight_matrix(double vx, const StrategyParams &params, const VehicleParams &vehicle);

/// 1 - ||x - x_obs||_P^2 over (s, ey); feasible (outside the ellipse) iff negative.
/// The s difference is taken modulo track_length when it is positive.
double obstacle_barrier(const State &x, const State &x_obs, const StateWeights &P, double track_length = 0.0);

/// True iff every step k = 1..N of the plan clears every obstacle with a positive separation margin.
bool safe_boundary_clear(const StateSequence &plan, const std::vector<StateSequence> &obstacles,
                         double track_length, const VehicleParams &vehicle);

/// Smallest separation margin over steps first..N and all obstacles (+inf without obstacles).
double minimum_margin(const StateSequence &plan, const std::vector<StateSequence> &obstacles, double track_length,
                      const VehicleParams &vehicle, int first = 1);

/// -epsilon l <= s_obs - s <= epsilon l + gamma |vx - vx_obs|, with the s gap taken modulo track_length.
bool within_overtaking_range(const State &ego, const State &obstacle, const StrategyParams &params,
                             const VehicleParams &vehicle, double track_length = 0.0);

/// Terminal tracking test, then the convergence-ratio test against the previous weight iteration.
bool check_reachability(const Trajectory &traj, const State &target, const Trajectory *previous_iteration,
                        bool obstacles_present, const StrategyParams &params);

/// Obstacles whose barriers are attached this step: inside the overtaking range
/// or able to meet the ego within the horizon.
std::vector<int> gate_obstacles(const State &ego, const std::vector<StateSequence> &predictions,
                                const StrategyParams &params, const VehicleParams &vehicle, double track_length);

/// Input box, |ey| and speed barriers (vx in [max(v_min, v_floor), v_max]).
std::vector<PlanBarrier> box_barriers(const VehicleParams &vehicle, double ey_limit, double q1, double q2, int N,
                                      double v_floor = 0.0);

/// Ellipse barrier against one predicted obstacle, active on steps 1..N.
PlanBarrier obstacle_barrier_term(const StateSequence &prediction, const StrategyParams &params,
                                  const VehicleParams &vehicle, double track_length, double q2);

/// 1 - (ds^2 + dey^2) / r^2 with r = sqrt(l^2 + d^2) + clearance, active on steps 1..N.
PlanBarrier safe_boundary_barrier_term(const StateSequence &prediction, const VehicleParams &vehicle,
                                       double track_length, double clearance, double q1, double q2);

/// A target state with its cost-to-go, plus where it came from in the memory.
struct TargetCandidate
{
  State state;
  int cost_to_go = 0;
  int lap = 0;
  int step = 0;
  double distance = 0.0;
};

/// K nearest recorded states, each advanced N steps along its own lap, ordered
/// by ascending cost-to-go (ties by distance).
/// @throws InsufficientHistory from the memory.
std::vector<TargetCandidate> build_target_set(const State &x, const LapMemory &memory, const StrategyParams &params);

/// Shared per-step planning model around the warm-start inputs.
struct PlanningModel
{
  PlanModel affine;
  StateSequence reference_states;
  InputSequence reference_inputs;
  int learned_steps = 0;
};

PlanningModel build_planning_model(const State &x, const InputSequence &warm_inputs, const LapMemory &memory,
                                   const TrackLayout &track, const VehicleParams &vehicle, const AtvOptions &options);

/// Recorded inputs following the nearest target's source sample.
InputSequence seed_warm_inputs(const std::vector<TargetCandidate> &targets, const LapMemory &memory, int N);

/// Recorded inputs following the target's source sample.
InputSequence recorded_inputs(const TargetCandidate &target, const LapMemory &memory, int N);

/// Warm start for the next step: drop the first input, repeat the last.
InputSequence shift_inputs(const InputSequence &inputs, int N, const Input &fallback);

/// Cost weights of one adaptive-weight pass.
struct WeightSet
{
  StateWeights terminal;
  InputWeights input;
  InputWeights rate;
  double q2_obstacle = 0.0;
};

/// Weights of pass 0, 1, ...: each pass after the first divides Q_N, R and dR
/// by m_QN, m_R and m_dR and scales the obstacle q2 by 1 + m_q2.
WeightSet weights_for_pass(const StrategyParams &params, int pass);

struct CandidateSolution
{
  TargetCandidate target;
  Trajectory trajectory;
  bool solved = false;
  bool collision_free = false; // safe boundary on steps 1..N
  bool next_step_clear = false; // safe boundary at k = 1
  bool reachable = false;
  double min_margin = 0.0;
  int weight_iters = 0;
  /// Weights of the last pass that was solved.
  WeightSet weights;
  std::string error;

  bool feasible() const { return solved && collision_free && next_step_clear && reachable; }
};

/// Everything one control step needs; all references are read-only.
struct StepInputs
{
  State state;
  Input previous_input = Input::Zero();
  InputSequence warm_inputs;
  const LapMemory *memory = nullptr;
  const std::vector<StateSequence> *predictions = nullptr;
  const TrackLayout *track = nullptr;
  const VehicleParams *vehicle = nullptr;
};

/// iLQR seeded with whichever of `warm` and the target's recorded inputs has
/// the lower rollout cost.
Trajectory solve_seeded(const PlanModel &model, const PlanCost &spec, const StepInputs &in, const InputSequence &warm,
                        const TargetCandidate &target, const IlqrOptions &options);

/// Solves one candidate with the adaptive-weight loop.
CandidateSolution solve_candidate(const TargetCandidate &target, const StepInputs &in, const PlanningModel &model,
                                  const std::vector<int> &gated, const StrategyParams &params);

enum class Fallback
{
  none,
  max_margin,
  brake,
};

std::string to_string(Fallback f);

struct StepResult
{
  Input input = Input::Zero();
  /// Index into candidates of the executed plan, -1 when braking.
  int chosen = -1;
  Fallback fallback = Fallback::none;
  std::vector<CandidateSolution> candidates;
  bool obstacles_present = false;
  std::vector<int> gated;
  int solves = 0;
  double solve_time = 0.0;
  int learned_steps = 0;
  StateSequence plan;
  InputSequence plan_inputs;
};

/// Minimal (cost_to_go, cost, index) among feasible solved candidates, or -1.
int select_feasible(const std::vector<CandidateSolution> &candidates);
/// Collision-free solved candidate with the largest minimum margin, or -1.
int select_max_margin(const std::vector<CandidateSolution> &candidates);

/**
 * @brief One control step of the learning racing controller.
 *
 * Sequential mode solves candidates in ascending cost-to-go, one tie group at
 * a time, and stops at the first group containing a feasible candidate.
 * Parallel mode solves every candidate. Both apply the same selection rule.
 * @throws InsufficientHistory when the target set cannot be built.
 */
StepResult control_step(const StepInputs &in, const StrategyParams &params);

/// Stateful wrapper carrying the warm start between steps.
class RacingStrategy
{
public:
  RacingStrategy(StrategyParams params, VehicleParams vehicle);

  ControlDecision operator()(const ControlContext &ctx);
  const StepResult &last_result() const { return last_; }
  void reset();

private:
  StrategyParams params_;
  VehicleParams vehicle_;
  InputSequence warm_;
  StepResult last_;
};

} // namespace racer

#endif // RACER_STRATEGY_HPP_
