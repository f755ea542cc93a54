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

#ifndef RACER_ILQR_HPP_
#define RACER_ILQR_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace racer
{

/// Raised when the seed trajectory of a solve has a non-finite cost.
class InvalidSeed : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar, int N>
using AlignedVector = std::vector<Eigen::Matrix<Scalar, N, 1>, Eigen::aligned_allocator<Eigen::Matrix<Scalar, N, 1>>>;

/// x_{k+1} = A_k x_k + B_k u_k + C_k for k = 0..N-1.
template <int Nx, int Nu, typename Scalar = double>
struct AffineModel
{
  using MatX = Eigen::Matrix<Scalar, Nx, Nx>;
  using MatXU = Eigen::Matrix<Scalar, Nx, Nu>;
  using VecX = Eigen::Matrix<Scalar, Nx, 1>;

  std::vector<MatX, Eigen::aligned_allocator<MatX>> A;
  std::vector<MatXU, Eigen::aligned_allocator<MatXU>> B;
  AlignedVector<Scalar, Nx> C;

  int horizon() const { return static_cast<int>(A.size()); }
};

/// Value and first derivatives of a scalar constraint f(x, u); feasible iff f <= 0.
template <int Nx, int Nu, typename Scalar = double>
struct ConstraintEval
{
  Scalar value = Scalar(0);
  Eigen::Matrix<Scalar, Nx, 1> dx = Eigen::Matrix<Scalar, Nx, 1>::Zero();
  Eigen::Matrix<Scalar, Nu, 1> du = Eigen::Matrix<Scalar, Nu, 1>::Zero();
};

/**
 * @brief Exponential penalty q1 exp(q2 f(x_k, u_k, k)) on the steps first_step..last_step.
 *
 * Step N is the terminal state; the evaluator receives a zero input there and
 * its du is ignored.
 */
template <int Nx, int Nu, typename Scalar = double>
struct BarrierTerm
{
  using Eval = ConstraintEval<Nx, Nu, Scalar>;
  using Fn = std::function<Eval(const Eigen::Matrix<Scalar, Nx, 1> &, const Eigen::Matrix<Scalar, Nu, 1> &, int)>;

  Fn constraint;
  Scalar q1 = Scalar(1);
  Scalar q2 = Scalar(1);
  int first_step = 0;
  int last_step = std::numeric_limits<int>::max();

  bool active(int k) const { return k >= first_step && k <= last_step; }
};

/// Quadratic tracking cost with input and input-rate penalties plus barrier terms.
template <int Nx, int Nu, typename Scalar = double>
struct CostSpec
{
  using VecX = Eigen::Matrix<Scalar, Nx, 1>;
  using VecU = Eigen::Matrix<Scalar, Nu, 1>;

  VecX target = VecX::Zero();
  /// Diagonals of Q_N, R and dR.
  VecX terminal_weight = VecX::Zero();
  VecU input_weight = VecU::Zero();
  VecU rate_weight = VecU::Zero();
  /// Last executed input, u_{-1} of the rate term.
  VecU previous_input = VecU::Zero();
  std::vector<BarrierTerm<Nx, Nu, Scalar>> barriers;
};

template <int Nx, int Nu, typename Scalar = double>
struct OpenLoopTrajectory
{
  AlignedVector<Scalar, Nx> states; // N + 1
  AlignedVector<Scalar, Nu> inputs; // N
  Scalar cost = std::numeric_limits<Scalar>::infinity();
  int iterations = 0;
  int backtracks = 0;
  bool converged = false;
  /// Cost after the seed rollout and after every accepted iteration.
  std::vector<Scalar> cost_history;
};

struct IlqrOptions
{
  int max_iterations = 50;
  double tolerance = 1e-6;
  double mu_min = 1e-6;
  double mu_max = 1e6;
  double mu_initial = 1e-6;
  int max_backtracks = 8; // alpha down to 2^-8
};

/// States reached from x0 under `inputs` through the affine model.
template <int Nx, int Nu, typename Scalar>
AlignedVector<Scalar, Nx> rollout(const AffineModel<Nx, Nu, Scalar> &model, const Eigen::Matrix<Scalar, Nx, 1> &x0,
                                  const AlignedVector<Scalar, Nu> &inputs)
{
  AlignedVector<Scalar, Nx> states;
  states.reserve(inputs.size() + 1);
  states.push_back(x0);
  for (std::size_t k = 0; k < inputs.size(); ++k)
  {
    states.push_back(model.A[k] * states.back() + model.B[k] * inputs[k] + model.C[k]);
  }
  return states;
}

template <int Nx, int Nu, typename Scalar>
Scalar total_cost(const AlignedVector<Scalar, Nx> &states, const AlignedVector<Scalar, Nu> &inputs,
                  const CostSpec<Nx, Nu, Scalar> &spec)
{
  using std::exp;
  using VecU = Eigen::Matrix<Scalar, Nu, 1>;
  if (states.size() != inputs.size() + 1)
  {
    throw std::invalid_argument("total_cost: expected N + 1 states for N inputs");
  }
  const int N = static_cast<int>(inputs.size());
  Scalar cost(0);
  VecU prev = spec.previous_input;
  for (int k = 0; k < N; ++k)
  {
    const VecU &u = inputs[static_cast<std::size_t>(k)];
    const VecU du = u - prev;
    cost += u.dot(spec.input_weight.cwiseProduct(u)) + du.dot(spec.rate_weight.cwiseProduct(du));
    prev = u;
  }
  const auto err = states.back() - spec.target;
  cost += err.dot(spec.terminal_weight.cwiseProduct(err));
  for (const auto &b : spec.barriers)
  {
    for (int k = 0; k <= N; ++k)
    {
      if (!b.active(k))
        continue;
      const VecU u = k < N ? inputs[static_cast<std::size_t>(k)] : VecU::Zero().eval();
      cost += b.q1 * exp(b.q2 * b.constraint(states[static_cast<std::size_t>(k)], u, k).value);
    }
  }
  return cost;
}

template <int Nx, int Nu, typename Scalar>
Scalar total_cost(const OpenLoopTrajectory<Nx, Nu, Scalar> &traj, const CostSpec<Nx, Nu, Scalar> &spec)
{
  return total_cost(traj.states, traj.inputs, spec);
}

namespace detail
{

/// First and Gauss-Newton second derivatives of the barriers at one step.
template <int Nx, int Nu, typename Scalar>
struct BarrierDerivatives
{
  Eigen::Matrix<Scalar, Nx, 1> lx = Eigen::Matrix<Scalar, Nx, 1>::Zero();
  Eigen::Matrix<Scalar, Nu, 1> lu = Eigen::Matrix<Scalar, Nu, 1>::Zero();
  Eigen::Matrix<Scalar, Nx, Nx> lxx = Eigen::Matrix<Scalar, Nx, Nx>::Zero();
  Eigen::Matrix<Scalar, Nu, Nu> luu = Eigen::Matrix<Scalar, Nu, Nu>::Zero();
  Eigen::Matrix<Scalar, Nu, Nx> lux = Eigen::Matrix<Scalar, Nu, Nx>::Zero();
};

template <int Nx, int Nu, typename Scalar>
BarrierDerivatives<Nx, Nu, Scalar> barrier_derivatives(const CostSpec<Nx, Nu, Scalar> &spec,
                                                       const Eigen::Matrix<Scalar, Nx, 1> &x,
                                                       const Eigen::Matrix<Scalar, Nu, 1> &u, int k, bool terminal)
{
  using std::exp;
  BarrierDerivatives<Nx, Nu, Scalar> d;
  for (const auto &b : spec.barriers)
  {
    if (!b.active(k))
      continue;
    auto e = b.constraint(x, u, k);
    if (terminal)
      e.du.setZero();
    const Scalar c = b.q1 * exp(b.q2 * e.value);
    const Scalar g = c * b.q2;
    const Scalar h = g * b.q2;
    d.lx += g * e.dx;
    d.lu += g * e.du;
    d.lxx += h * e.dx * e.dx.transpose();
    d.luu += h * e.du * e.du.transpose();
    d.lux += h * e.du * e.dx.transpose();
  }
  return d;
}

} // namespace detail

/**
 * Gradient of total_cost with respect to the stacked inputs [u_0; ...; u_{N-1}]
 * for a fixed initial state, by one adjoint sweep.
 */
template <int Nx, int Nu, typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cost_gradient(const AffineModel<Nx, Nu, Scalar> &model,
                                                      const CostSpec<Nx, Nu, Scalar> &spec,
                                                      const Eigen::Matrix<Scalar, Nx, 1> &x0,
                                                      const AlignedVector<Scalar, Nu> &inputs)
{
  using VecX = Eigen::Matrix<Scalar, Nx, 1>;
  using VecU = Eigen::Matrix<Scalar, Nu, 1>;
  const int N = static_cast<int>(inputs.size());
  if (N != model.horizon())
  {
    throw std::invalid_argument("cost_gradient: model horizon and input count differ");
  }
  const auto states = rollout(model, x0, inputs);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad(N * Nu);

  const auto term = detail::barrier_derivatives(spec, states.back(), VecU::Zero().eval(), N, true);
  VecX lambda = Scalar(2) * spec.terminal_weight.cwiseProduct(states.back() - spec.target) + term.lx;
  for (int k = N - 1; k >= 0; --k)
  {
    const VecU &u = inputs[static_cast<std::size_t>(k)];
    const VecU prev = k == 0 ? spec.previous_input : inputs[static_cast<std::size_t>(k - 1)];
    const auto d = detail::barrier_derivatives(spec, states[static_cast<std::size_t>(k)], u, k, false);
    VecU g = Scalar(2) * spec.input_weight.cwiseProduct(u) + Scalar(2) * spec.rate_weight.cwiseProduct(u - prev) +
             d.lu + model.B[static_cast<std::size_t>(k)].transpose() * lambda;
    if (k + 1 < N)
    {
      g -= Scalar(2) * spec.rate_weight.cwiseProduct(inputs[static_cast<std::size_t>(k + 1)] - u);
    }
    grad.template segment<Nu>(k * Nu) = g;
    lambda = d.lx + model.A[static_cast<std::size_t>(k)].transpose() * lambda;
  }
  return grad;
}

/**
 * @brief Iterative LQR over a fixed affine time-varying model.
 *
 * The rate penalty is handled by augmenting the state with the previous
 * input, z_k = [x_k; u_{k-1}]. Barrier curvature uses the Gauss-Newton
 * outer product. Levenberg regularization on Q_uu, backtracking line search
 * accepting any decrease. Always returns the best trajectory found.
 *
 * @param warm_start inputs seeding the solve; empty means zero inputs.
 * @throws InvalidSeed if the seed rollout has a non-finite cost.
 */
template <int Nx, int Nu, typename Scalar>
OpenLoopTrajectory<Nx, Nu, Scalar> solve(const AffineModel<Nx, Nu, Scalar> &model,
                                         const CostSpec<Nx, Nu, Scalar> &spec,
                                         const Eigen::Matrix<Scalar, Nx, 1> &x0,
                                         const AlignedVector<Scalar, Nu> &warm_start = {},
                                         const IlqrOptions &options = {})
{
  static_assert(Nx > 0 && Nu > 0, "solve: fixed state and input dimensions required");
  constexpr int Nz = Nx + Nu;
  using VecX = Eigen::Matrix<Scalar, Nx, 1>;
  using VecU = Eigen::Matrix<Scalar, Nu, 1>;
  using VecZ = Eigen::Matrix<Scalar, Nz, 1>;
  using MatZ = Eigen::Matrix<Scalar, Nz, Nz>;
  using MatU = Eigen::Matrix<Scalar, Nu, Nu>;
  using MatUZ = Eigen::Matrix<Scalar, Nu, Nz>;
  using MatZU = Eigen::Matrix<Scalar, Nz, Nu>;

  const int N = model.horizon();
  if (N < 1 || static_cast<int>(model.B.size()) != N || static_cast<int>(model.C.size()) != N)
  {
    throw std::invalid_argument("solve: inconsistent model horizon");
  }
  if (!warm_start.empty() && static_cast<int>(warm_start.size()) != N)
  {
    throw std::invalid_argument("solve: warm start length differs from the horizon");
  }

  OpenLoopTrajectory<Nx, Nu, Scalar> best;
  best.inputs = warm_start.empty() ? AlignedVector<Scalar, Nu>(static_cast<std::size_t>(N), VecU::Zero()) : warm_start;
  best.states = rollout(model, x0, best.inputs);
  best.cost = total_cost(best.states, best.inputs, spec);
  if (!std::isfinite(static_cast<double>(best.cost)))
  {
    throw InvalidSeed("solve: seed trajectory has a non-finite cost");
  }
  best.cost_history.push_back(best.cost);

  const MatU R2 = Scalar(2) * spec.input_weight.asDiagonal().toDenseMatrix();
  const MatU dR2 = Scalar(2) * spec.rate_weight.asDiagonal().toDenseMatrix();

  std::vector<VecU, Eigen::aligned_allocator<VecU>> kff(static_cast<std::size_t>(N));
  std::vector<MatUZ, Eigen::aligned_allocator<MatUZ>> Kfb(static_cast<std::size_t>(N));

  Scalar mu = Scalar(options.mu_initial);
  for (int iter = 0; iter < options.max_iterations; ++iter)
  {
    best.iterations = iter + 1;

    // Backward pass, retried with larger mu until every Q_uu is positive definite.
    Scalar dV1(0);
    Scalar dV2(0);
    bool backward_ok = false;
    while (!backward_ok)
    {
      const VecX &xN = best.states.back();
      const auto term = detail::barrier_derivatives(spec, xN, VecU::Zero().eval(), N, true);
      VecZ Vz = VecZ::Zero();
      MatZ Vzz = MatZ::Zero();
      Vz.template head<Nx>() = Scalar(2) * spec.terminal_weight.cwiseProduct(xN - spec.target) + term.lx;
      Vzz.template topLeftCorner<Nx, Nx>() =
          Scalar(2) * spec.terminal_weight.asDiagonal().toDenseMatrix() + term.lxx;
      dV1 = Scalar(0);
      dV2 = Scalar(0);
      backward_ok = true;

      for (int k = N - 1; k >= 0; --k)
      {
        const std::size_t ks = static_cast<std::size_t>(k);
        const VecX &x = best.states[ks];
        const VecU &u = best.inputs[ks];
        const VecU prev = k == 0 ? spec.previous_input : best.inputs[ks - 1];
        const auto d = detail::barrier_derivatives(spec, x, u, k, false);

        // Stage derivatives in (z, u).
        VecZ lz = VecZ::Zero();
        lz.template head<Nx>() = d.lx;
        lz.template tail<Nu>() = -dR2 * (u - prev);
        const VecU lu = R2 * u + dR2 * (u - prev) + d.lu;
        MatZ lzz = MatZ::Zero();
        lzz.template topLeftCorner<Nx, Nx>() = d.lxx;
        lzz.template bottomRightCorner<Nu, Nu>() = dR2;
        const MatU luu = R2 + dR2 + d.luu;
        MatUZ luz = MatUZ::Zero();
        luz.template leftCols<Nx>() = d.lux;
        luz.template rightCols<Nu>() = -dR2;

        // z_{k+1} = Fz z_k + Fu u_k + const.
        MatZ Fz = MatZ::Zero();
        Fz.template topLeftCorner<Nx, Nx>() = model.A[ks];
        MatZU Fu;
        Fu.template topRows<Nx>() = model.B[ks];
        Fu.template bottomRows<Nu>().setIdentity();

        const VecZ Qz = lz + Fz.transpose() * Vz;
        const VecU Qu = lu + Fu.transpose() * Vz;
        const MatZ Qzz = lzz + Fz.transpose() * Vzz * Fz;
        const MatU Quu = luu + Fu.transpose() * Vzz * Fu;
        const MatUZ Quz = luz + Fu.transpose() * Vzz * Fz;

        const MatU Quu_reg = Quu + mu * MatU::Identity();
        Eigen::LLT<MatU> llt(Quu_reg);
        if (llt.info() != Eigen::Success)
        {
          backward_ok = false;
          break;
        }
        kff[ks] = -llt.solve(Qu);
        Kfb[ks] = -llt.solve(Quz);
        const VecU &kk = kff[ks];
        const MatUZ &KK = Kfb[ks];

        dV1 += kk.dot(Qu);
        dV2 += Scalar(0.5) * kk.dot(Quu * kk);
        Vz = Qz + KK.transpose() * Quu * kk + KK.transpose() * Qu + Quz.transpose() * kk;
        Vzz = Qzz + KK.transpose() * Quu * KK + KK.transpose() * Quz + Quz.transpose() * KK;
        Vzz = (Scalar(0.5) * (Vzz + Vzz.transpose())).eval();
      }
      if (!backward_ok)
      {
        mu *= Scalar(10);
        if (mu > Scalar(options.mu_max))
        {
          return best;
        }
      }
    }

    const Scalar expected = -(dV1 + dV2);
    const Scalar scale = std::max(std::abs(best.cost), Scalar(1e-12));
    if (expected < Scalar(options.tolerance) * scale)
    {
      best.converged = true;
      return best;
    }

    // Forward pass with backtracking.
    bool accepted = false;
    Scalar alpha(1);
    for (int ls = 0; ls <= options.max_backtracks; ++ls, alpha *= Scalar(0.5))
    {
      AlignedVector<Scalar, Nx> xs;
      AlignedVector<Scalar, Nu> us;
      xs.reserve(static_cast<std::size_t>(N + 1));
      us.reserve(static_cast<std::size_t>(N));
      xs.push_back(x0);
      VecU prev_new = spec.previous_input;
      for (int k = 0; k < N; ++k)
      {
        const std::size_t ks = static_cast<std::size_t>(k);
        VecZ dz;
        dz.template head<Nx>() = xs[ks] - best.states[ks];
        dz.template tail<Nu>() = prev_new - (k == 0 ? spec.previous_input : best.inputs[ks - 1]);
        const VecU un = best.inputs[ks] + alpha * kff[ks] + Kfb[ks] * dz;
        us.push_back(un);
        xs.push_back(model.A[ks] * xs[ks] + model.B[ks] * un + model.C[ks]);
        prev_new = un;
      }
      const Scalar c = total_cost(xs, us, spec);
      if (std::isfinite(static_cast<double>(c)) && c < best.cost)
      {
        const Scalar rel = (best.cost - c) / scale;
        best.states = std::move(xs);
        best.inputs = std::move(us);
        best.cost = c;
        best.cost_history.push_back(c);
        accepted = true;
        mu = std::max(mu / Scalar(2), Scalar(options.mu_min));
        if (rel < Scalar(options.tolerance))
        {
          best.converged = true;
          return best;
        }
        break;
      }
      ++best.backtracks;
    }
    if (!accepted)
    {
      mu *= Scalar(10);
      if (mu > Scalar(options.mu_max))
      {
        return best;
      }
    }
  }
  return best;
}

} // namespace racer

#endif // RACER_ILQR_HPP_
