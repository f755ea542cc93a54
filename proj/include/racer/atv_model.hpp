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

#ifndef RACER_ATV_MODEL_HPP_
#define RACER_ATV_MODEL_HPP_

#include "racer/lap_memory.hpp"
#include "racer/track.hpp"
#include "racer/types.hpp"
#include "racer/vehicle.hpp"

#include <array>
#include <span>
#include <vector>

namespace racer
{

/// Affine time-varying model x_{k+1} = A_k x_k + B_k u_k + C_k, k = 0..N-1.
struct AtvModel
{
  std::vector<StateMatrix, Eigen::aligned_allocator<StateMatrix>> A;
  std::vector<InputMatrix, Eigen::aligned_allocator<InputMatrix>> B;
  StateSequence C;
  /// Per step: true when the data-driven fit was used, false for the analytic fallback.
  std::vector<bool> learned;

  int horizon() const { return static_cast<int>(A.size()); }
  State step(int k, const State &x, const Input &u) const { return A[k] * x + B[k] * u + C[k]; }
};

struct AtvOptions
{
  /// Regression neighbourhood size.
  int n_reg = 40;
  /// Laps (most recent first) whose transitions feed the regression.
  int lap_window = 4;
  /// State rows identified from data; the others come from the analytic linearization.
  std::array<bool, kStateDim> regressed_rows{true, true, true, false, false, false};
  /// State components used as regressors for the regressed rows.
  std::array<bool, kStateDim> feature_states{true, true, true, false, false, false};
  /// Relative eigenvalue floor of the normalized normal matrix.
  double degeneracy_tolerance = 1e-10;
  /// Largest allowed (vx, vy, wz) distance to the farthest regression neighbour; <= 0 disables.
  double max_bandwidth = 0.3;
  double dt = 0.1;
  int substeps = 100;
  /// false skips the regression entirely (pure analytic model).
  bool learned = true;
};

struct LocalFit
{
  StateMatrix A = StateMatrix::Zero();
  InputMatrix B = InputMatrix::Zero();
  State C = State::Zero();
  bool degenerate = false;
};

/// Kernel-weighted (Epanechnikov) least squares over the n_reg transitions
/// nearest to x_ref in (vx, vy, wz). Only rows flagged in regressed_rows are filled.
LocalFit local_linear_regression(std::span<const Transition> data, const State &x_ref, const Input &u_ref,
                                 const AtvOptions &options);

/// Analytic model: exact linearization of the simulator interval around each
/// reference pair, with C_k chosen so the model is exact at the reference.
AtvModel analytic_atv_model(const StateSequence &ref_states, const InputSequence &ref_inputs,
                            const TrackLayout &track, const VehicleParams &p, const AtvOptions &options);

/// Learned model around a reference trajectory (states and inputs of length N).
/// Steps with too little or degenerate data fall back to the analytic model.
AtvModel fit_atv_model(std::span<const Transition> data, const StateSequence &ref_states,
                       const InputSequence &ref_inputs, const TrackLayout &track, const VehicleParams &p,
                       const AtvOptions &options);

AtvModel fit_atv_model(const LapMemory &memory, const StateSequence &ref_states, const InputSequence &ref_inputs,
                       const TrackLayout &track, const VehicleParams &p, const AtvOptions &options);

} // namespace racer

#endif // RACER_ATV_MODEL_HPP_
