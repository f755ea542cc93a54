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

// Independent reference implementations shared by the unit and acceptance tests.

#ifndef RACER_TESTS_TEST_SUPPORT_HPP_
#define RACER_TESTS_TEST_SUPPORT_HPP_

#include "racer/ilqr.hpp"
#include "racer/lap_memory.hpp"
#include "racer/simulation.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace racer::testing
{

/// Memory holding `laps` PID laps on an obstacle-free copy of the config's track;
/// every lap after the first is excited with seeded input noise.
inline LapMemory pid_memory(const ScenarioConfig &config, int laps, State *end_state = nullptr)
{
  ScenarioConfig empty = config;
  empty.n_obstacles = 0;
  const Scenario sc = make_scenario(empty);
  LapMemory memory(sc.track.length());
  EpisodeOptions eo;
  for (int i = 0; i < laps; ++i)
  {
    PidEgoOptions po;
    po.seed = static_cast<std::uint64_t>(i + 1);
    po.accel_noise = i > 0 ? 0.1 : 0.0;
    po.steer_noise = i > 0 ? 0.05 : 0.0;
    const EpisodeLog log = run_episode(sc, make_pid_ego_controller(config.vehicle, po), memory, eo);
    eo.initial_state = log.final_state;
  }
  if (end_state != nullptr)
    *end_state = eo.initial_state;
  return memory;
}

/// Exhaustive K-nearest scan: repeated minimum extraction, then an insertion
/// sort on (cost_to_go, distance).
inline std::vector<Neighbor> brute_force_knn(const LapMemory &m, const State &x, int K, const StateWeights &Dz,
                                             int window)
{
  const double L = m.track_length();
  std::vector<Neighbor> pool;
  for (int l = std::max(0, m.finalized_laps() - window); l < m.finalized_laps(); ++l)
  {
    for (const HistoryPoint &p : m.lap(l))
    {
      double ds = p.state(kS) - x(kS);
      // Closest periodic image of the sample.
      double best = ds;
      for (double shift : {-2.0 * L, -L, L, 2.0 * L})
      {
        if (std::abs(ds + shift) < std::abs(best))
          best = ds + shift;
      }
      ds = best;
      double d = 0.0;
      for (int i = 0; i < kStateDim; ++i)
      {
        const double diff = i == kS ? ds : p.state(i) - x(i);
        d += Dz(i) * diff * diff;
      }
      pool.push_back({p, d, x(kS) + ds - p.state(kS)});
    }
  }
  auto before = [](const Neighbor &a, const Neighbor &b) {
    if (a.distance != b.distance)
      return a.distance < b.distance;
    if (a.point.cost_to_go != b.point.cost_to_go)
      return a.point.cost_to_go < b.point.cost_to_go;
    if (a.point.lap != b.point.lap)
      return a.point.lap < b.point.lap;
    return a.point.step < b.point.step;
  };
  std::vector<Neighbor> chosen;
  std::vector<bool> used(pool.size(), false);
  while (static_cast<int>(chosen.size()) < K)
  {
    int arg = -1;
    for (std::size_t i = 0; i < pool.size(); ++i)
    {
      if (!used[i] && (arg < 0 || before(pool[i], pool[static_cast<std::size_t>(arg)])))
        arg = static_cast<int>(i);
    }
    if (arg < 0)
      break;
    used[static_cast<std::size_t>(arg)] = true;
    bool dup = false;
    for (const Neighbor &c : chosen)
      dup = dup || c.point.state == pool[static_cast<std::size_t>(arg)].point.state;
    if (!dup)
      chosen.push_back(pool[static_cast<std::size_t>(arg)]);
  }
  for (std::size_t i = 1; i < chosen.size(); ++i)
  {
    for (std::size_t j = i; j > 0 && chosen[j].point.cost_to_go < chosen[j - 1].point.cost_to_go; --j)
      std::swap(chosen[j], chosen[j - 1]);
  }
  return chosen;
}

/// Finite-horizon LQR with an input-rate penalty solved by a dense KKT system:
/// minimize sum u'Ru + (u - u_prev)'dR(u - u_prev) + (x_N - g)'Q(x_N - g)
/// subject to x_{k+1} = A_k x_k + B_k u_k + C_k. Returns the optimal inputs.
template <int Nx, int Nu>
AlignedVector<double, Nu> dense_lqr_optimum(const AffineModel<Nx, Nu, double> &model, const CostSpec<Nx, Nu, double> &spec,
                                            const Eigen::Matrix<double, Nx, 1> &x0)
{
  const int N = model.horizon();
  const int n = N * Nu;
  // x_N = Phi x0 + G U + c, built by forward composition.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Nx, n);
  Eigen::VectorXd c = x0;
  for (int k = 0; k < N; ++k)
  {
    G = (model.A[static_cast<std::size_t>(k)] * G).eval();
    G.block(0, k * Nu, Nx, Nu) = model.B[static_cast<std::size_t>(k)];
    c = model.A[static_cast<std::size_t>(k)] * c + model.C[static_cast<std::size_t>(k)];
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < N; ++k)
  {
    for (int j = 0; j < Nu; ++j)
    {
      const int i = k * Nu + j;
      H(i, i) += spec.input_weight(j) + spec.rate_weight(j);
      if (k + 1 < N)
      {
        H(i, i) += spec.rate_weight(j);
        H(i, i + Nu) -= spec.rate_weight(j);
        H(i + Nu, i) -= spec.rate_weight(j);
      }
    }
  }
  for (int j = 0; j < Nu; ++j)
    g(j) -= spec.rate_weight(j) * spec.previous_input(j);
  const Eigen::MatrixXd Q = spec.terminal_weight.asDiagonal();
  H += G.transpose() * Q * G;
  g += G.transpose() * Q * (c - spec.target);
  const Eigen::VectorXd U = H.ldlt().solve(-g);
  AlignedVector<double, Nu> out;
  for (int k = 0; k < N; ++k)
    out.push_back(U.template segment<Nu>(k * Nu));
  return out;
}

/// Textbook backward Riccati recursion for the same problem on the augmented
/// state z = [x; u_prev; 1].
template <int Nx, int Nu>
AlignedVector<double, Nu> riccati_lqr_optimum(const AffineModel<Nx, Nu, double> &model,
                                              const CostSpec<Nx, Nu, double> &spec,
                                              const Eigen::Matrix<double, Nx, 1> &x0)
{
  constexpr int Nz = Nx + Nu + 1;
  using MatZ = Eigen::Matrix<double, Nz, Nz>;
  const int N = model.horizon();
  // Terminal: (x - g)'Q(x - g) as z'Pz.
  MatZ P = MatZ::Zero();
  const Eigen::Matrix<double, Nx, Nx> Q = spec.terminal_weight.asDiagonal();
  P.template topLeftCorner<Nx, Nx>() = Q;
  P.template topRightCorner<Nx, 1>() = -Q * spec.target;
  P.template bottomLeftCorner<1, Nx>() = -(Q * spec.target).transpose();
  P(Nz - 1, Nz - 1) = spec.target.dot(Q * spec.target);
  std::vector<Eigen::Matrix<double, Nu, Nz>> gains(static_cast<std::size_t>(N));
  const Eigen::Matrix<double, Nu, Nu> R = spec.input_weight.asDiagonal();
  const Eigen::Matrix<double, Nu, Nu> dR = spec.rate_weight.asDiagonal();
  for (int k = N - 1; k >= 0; --k)
  {
    Eigen::Matrix<double, Nz, Nz> F = Eigen::Matrix<double, Nz, Nz>::Zero();
    F.template topLeftCorner<Nx, Nx>() = model.A[static_cast<std::size_t>(k)];
    F.template topRightCorner<Nx, 1>() = model.C[static_cast<std::size_t>(k)];
    F(Nz - 1, Nz - 1) = 1.0;
    Eigen::Matrix<double, Nz, Nu> G = Eigen::Matrix<double, Nz, Nu>::Zero();
    G.template topRows<Nx>() = model.B[static_cast<std::size_t>(k)];
    G.template block<Nu, Nu>(Nx, 0).setIdentity();
    // Stage: u'Ru + (u - p)'dR(u - p), p = z[Nx:Nx+Nu].
    MatZ Szz = MatZ::Zero();
    Szz.template block<Nu, Nu>(Nx, Nx) = dR;
    Eigen::Matrix<double, Nu, Nz> Suz = Eigen::Matrix<double, Nu, Nz>::Zero();
    Suz.template block<Nu, Nu>(0, Nx) = -dR;
    const Eigen::Matrix<double, Nu, Nu> Suu = R + dR;
    const Eigen::Matrix<double, Nu, Nu> H = Suu + G.transpose() * P * G;
    const Eigen::Matrix<double, Nu, Nz> M = Suz + G.transpose() * P * F;
    const Eigen::Matrix<double, Nu, Nz> K = -H.ldlt().solve(M);
    gains[static_cast<std::size_t>(k)] = K;
    P = Szz + F.transpose() * P * F + M.transpose() * K;
    P = (0.5 * (P + P.transpose())).eval();
  }
  AlignedVector<double, Nu> out;
  Eigen::Matrix<double, Nz, 1> z;
  z.template head<Nx>() = x0;
  z.template segment<Nu>(Nx) = spec.previous_input;
  z(Nz - 1) = 1.0;
  for (int k = 0; k < N; ++k)
  {
    const Eigen::Matrix<double, Nu, 1> u = gains[static_cast<std::size_t>(k)] * z;
    out.push_back(u);
    z.template head<Nx>() = model.A[static_cast<std::size_t>(k)] * z.template head<Nx>() + model.B[static_cast<std::size_t>(k)] * u +
                   model.C[static_cast<std::size_t>(k)];
    z.template segment<Nu>(Nx) = u;
  }
  return out;
}

template <int Nx, int Nu>
AffineModel<Nx, Nu, double> random_affine_model(std::mt19937_64 &rng, int N)
{
  std::normal_distribution<double> g(0.0, 1.0);
  AffineModel<Nx, Nu, double> m;
  for (int k = 0; k < N; ++k)
  {
    Eigen::Matrix<double, Nx, Nx> A;
    Eigen::Matrix<double, Nx, Nu> B;
    Eigen::Matrix<double, Nx, 1> C;
    for (int i = 0; i < A.size(); ++i)
      A(i) = 0.2 * g(rng);
    A += Eigen::Matrix<double, Nx, Nx>::Identity();
    for (int i = 0; i < B.size(); ++i)
      B(i) = 0.3 * g(rng);
    for (int i = 0; i < C.size(); ++i)
      C(i) = 0.1 * g(rng);
    m.A.push_back(A);
    m.B.push_back(B);
    m.C.push_back(C);
  }
  return m;
}

template <int Nx, int Nu>
CostSpec<Nx, Nu, double> random_quadratic_cost(std::mt19937_64 &rng)
{
  std::uniform_real_distribution<double> w(0.1, 5.0), t(-2.0, 2.0);
  CostSpec<Nx, Nu, double> c;
  for (int i = 0; i < Nx; ++i)
  {
    c.terminal_weight(i) = w(rng);
    c.target(i) = t(rng);
  }
  for (int i = 0; i < Nu; ++i)
  {
    c.input_weight(i) = w(rng);
    c.rate_weight(i) = w(rng);
    c.previous_input(i) = t(rng);
  }
  return c;
}

} // namespace racer::testing

#endif // RACER_TESTS_TEST_SUPPORT_HPP_
