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

#include "racer/atv_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace racer
{

LocalFit local_linear_regression(std::span<const Transition> data, const State &x_ref, const Input &u_ref,
                                 const AtvOptions &options)
{
  LocalFit fit;
  const int n = static_cast<int>(data.size());
  if (options.n_reg < 1 || n < options.n_reg)
  {
    fit.degenerate = true;
    return fit;
  }

  auto velocity_distance = [&](const State &x) {
    return std::sqrt((x.head<3>() - x_ref.head<3>()).squaredNorm());
  };

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
  {
    dist[static_cast<std::size_t>(i)] = velocity_distance(data[static_cast<std::size_t>(i)].state);
  }
  auto closer = [&](int a, int b) {
    const double da = dist[static_cast<std::size_t>(a)];
    const double db = dist[static_cast<std::size_t>(b)];
    return da != db ? da < db : a < b;
  };
  std::nth_element(order.begin(), order.begin() + (options.n_reg - 1), order.end(), closer);
  order.resize(static_cast<std::size_t>(options.n_reg));

  double max_d = 0.0;
  for (int idx : order)
  {
    max_d = std::max(max_d, dist[static_cast<std::size_t>(idx)]);
  }
  if (options.max_bandwidth > 0.0 && max_d > options.max_bandwidth)
  {
    fit.degenerate = true;
    return fit;
  }
  const double bandwidth = std::max(max_d * 1.001, 1e-9);

  std::vector<int> features;
  for (int i = 0; i < kStateDim; ++i)
  {
    if (options.feature_states[static_cast<std::size_t>(i)])
      features.push_back(i);
  }
  const int nf = static_cast<int>(features.size());
  const int p = nf + kInputDim + 1;

  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(p, kStateDim);
  Eigen::VectorXd phi(p);
  for (int idx : order)
  {
    const Transition &t = data[static_cast<std::size_t>(idx)];
    const double r = dist[static_cast<std::size_t>(idx)] / bandwidth;
    const double w = 0.75 * (1.0 - r * r);
    for (int j = 0; j < nf; ++j)
    {
      phi(j) = t.state(features[static_cast<std::size_t>(j)]) - x_ref(features[static_cast<std::size_t>(j)]);
    }
    phi.segment<kInputDim>(nf) = t.input - u_ref;
    phi(p - 1) = 1.0;
    normal.noalias() += w * phi * phi.transpose();
    rhs.noalias() += w * phi * t.next.transpose();
  }

  const Eigen::VectorXd diag = normal.diagonal();
  if ((diag.array() <= 0.0).any())
  {
    fit.degenerate = true;
    return fit;
  }
  const Eigen::VectorXd inv_sqrt = diag.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = inv_sqrt.asDiagonal() * normal * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > options.degeneracy_tolerance * hi))
  {
    fit.degenerate = true;
    return fit;
  }

  const Eigen::MatrixXd theta = normal.ldlt().solve(rhs); // p x 6, one column per output row
  for (int row = 0; row < kStateDim; ++row)
  {
    if (!options.regressed_rows[static_cast<std::size_t>(row)])
      continue;
    double offset = theta(p - 1, row);
    for (int j = 0; j < nf; ++j)
    {
      const int col = features[static_cast<std::size_t>(j)];
      fit.A(row, col) = theta(j, row);
      offset -= theta(j, row) * x_ref(col);
    }
    for (int j = 0; j < kInputDim; ++j)
    {
      fit.B(row, j) = theta(nf + j, row);
      offset -= theta(nf + j, row) * u_ref(j);
    }
    fit.C(row) = offset;
  }
  if (!fit.A.allFinite() || !fit.B.allFinite() || !fit.C.allFinite())
  {
    fit.degenerate = true;
  }
  return fit;
}

namespace
{

void check_reference(const StateSequence &ref_states, const InputSequence &ref_inputs)
{
  if (ref_states.empty() || ref_states.size() != ref_inputs.size())
  {
    throw std::invalid_argument("ATV model: reference states and inputs must have equal, non-zero length");
  }
}

} // namespace

AtvModel analytic_atv_model(const StateSequence &ref_states, const InputSequence &ref_inputs,
                            const TrackLayout &track, const VehicleParams &p, const AtvOptions &options)
{
  check_reference(ref_states, ref_inputs);
  const double dt_sim = options.dt / options.substeps;
  AtvModel model;
  for (std::size_t k = 0; k < ref_states.size(); ++k)
  {
    const DiscreteAffine lin = linearize_interval(ref_states[k], ref_inputs[k], track, p, dt_sim, options.substeps);
    model.A.push_back(lin.A);
    model.B.push_back(lin.B);
    model.C.push_back(lin.C);
    model.learned.push_back(false);
  }
  return model;
}

AtvModel fit_atv_model(std::span<const Transition> data, const StateSequence &ref_states,
                       const InputSequence &ref_inputs, const TrackLayout &track, const VehicleParams &p,
                       const AtvOptions &options)
{
  AtvModel model = analytic_atv_model(ref_states, ref_inputs, track, p, options);
  if (!options.learned)
  {
    return model;
  }
  for (std::size_t k = 0; k < ref_states.size(); ++k)
  {
    const LocalFit fit = local_linear_regression(data, ref_states[k], ref_inputs[k], options);
    if (fit.degenerate)
    {
      continue;
    }
    for (int row = 0; row < kStateDim; ++row)
    {
      if (!options.regressed_rows[static_cast<std::size_t>(row)])
        continue;
      model.A[k].row(row) = fit.A.row(row);
      model.B[k].row(row) = fit.B.row(row);
      model.C[k](row) = fit.C(row);
    }
    model.learned[k] = true;
  }
  return model;
}

AtvModel fit_atv_model(const LapMemory &memory, const StateSequence &ref_states, const InputSequence &ref_inputs,
                       const TrackLayout &track, const VehicleParams &p, const AtvOptions &options)
{
  const std::vector<Transition> data = memory.transitions(options.lap_window);
  return fit_atv_model(data, ref_states, ref_inputs, track, p, options);
}

} // namespace racer
