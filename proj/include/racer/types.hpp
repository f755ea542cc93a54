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

#ifndef RACER_TYPES_HPP_
#define RACER_TYPES_HPP_

#include <Eigen/Dense>

#include <vector>

namespace racer
{

inline constexpr int kStateDim = 6;
inline constexpr int kInputDim = 2;

/// Component layout of the Frenet-frame state [vx, vy, wz, epsi, s, ey].
enum StateIndex : int
{
  kVx = 0,
  kVy = 1,
  kWz = 2,
  kEpsi = 3,
  kS = 4,
  kEy = 5,
};

/// Component layout of the input [a, delta].
enum InputIndex : int
{
  kAccel = 0,
  kSteer = 1,
};

template <typename Scalar>
using StateT = Eigen::Matrix<Scalar, kStateDim, 1>;
template <typename Scalar>
using InputT = Eigen::Matrix<Scalar, kInputDim, 1>;

using State = StateT<double>;
using Input = InputT<double>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputMatrix = Eigen::Matrix<double, kStateDim, kInputDim>;
using StateWeights = Eigen::Matrix<double, kStateDim, 1>;
using InputWeights = Eigen::Matrix<double, kInputDim, 1>;

using StateSequence = std::vector<State, Eigen::aligned_allocator<State>>;
using InputSequence = std::vector<Input, Eigen::aligned_allocator<Input>>;

inline State make_state(double vx, double vy, double wz, double epsi, double s, double ey)
{
  State x;
  x << vx, vy, wz, epsi, s, ey;
  return x;
}

inline Input make_input(double a, double delta)
{
  return Input(a, delta);
}

} // namespace racer

#endif // RACER_TYPES_HPP_
