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

#ifndef RACER_VEHICLE_HPP_
#define RACER_VEHICLE_HPP_

#include "racer/track.hpp"
#include "racer/types.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace racer
{

/// Lateral tire curve Fy = D sin(C atan(B alpha)).
struct PacejkaCoefficients
{
  double B = 5.0;
  double C = 1.25;
  double D = 0.8 * 1.98 * 9.81 / 2.0;
};

/// 1:10 scale car. Geometry and limits default to the values the experiments use.
struct VehicleParams
{
  double mass = 1.98;          // [kg]
  double yaw_inertia = 0.024;  // [kg m^2]
  double lf = 0.125;           // [m] CoM to front axle
  double lr = 0.125;           // [m] CoM to rear axle
  double length = 0.4;         // [m]
  double width = 0.2;          // [m]
  PacejkaCoefficients front;
  PacejkaCoefficients rear;
  double a_max = 1.0;          // [m/s^2]
  double delta_max = 0.5;      // [rad]
  double v_min = 0.0;          // [m/s]
  double v_max = 1.5;          // [m/s]

  void validate() const;
};

nlohmann::json params_to_json(const VehicleParams &p);
VehicleParams vehicle_params_from_json(const nlohmann::json &doc);

/// Raised when 1 - kappa * ey approaches zero.
class FrenetSingularity : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kFrenetGuard = 1e-6;

/**
 * @brief Frenet-frame dynamic bicycle model with decoupled Pacejka lateral tires.
 *
 * Slip angles: alpha_f = delta - atan2(vy + lf wz, vx), alpha_r = -atan2(vy - lr wz, vx).
 * Templated on the scalar so the same expression serves double, long double
 * or an automatic-differentiation type.
 */
template <typename Scalar>
StateT<Scalar> continuous_dynamics(const StateT<Scalar> &x, const InputT<Scalar> &u, Scalar curvature,
                                   const VehicleParams &p)
{
  using std::atan;
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::abs;

  const Scalar vx = x(kVx);
  const Scalar vy = x(kVy);
  const Scalar wz = x(kWz);
  const Scalar epsi = x(kEpsi);
  const Scalar ey = x(kEy);
  const Scalar a = u(kAccel);
  const Scalar delta = u(kSteer);

  const Scalar scale = Scalar(1) - curvature * ey;
  if (abs(scale) < Scalar(kFrenetGuard))
  {
    throw FrenetSingularity("continuous_dynamics: 1 - kappa * ey vanishes");
  }

  const Scalar alpha_f = delta - atan2(vy + Scalar(p.lf) * wz, vx);
  const Scalar alpha_r = -atan2(vy - Scalar(p.lr) * wz, vx);
  const Scalar fy_f = Scalar(p.front.D) * sin(Scalar(p.front.C) * atan(Scalar(p.front.B) * alpha_f));
  const Scalar fy_r = Scalar(p.rear.D) * sin(Scalar(p.rear.C) * atan(Scalar(p.rear.B) * alpha_r));

  const Scalar s_dot = (vx * cos(epsi) - vy * sin(epsi)) / scale;

  StateT<Scalar> dx;
  dx(kVx) = a - fy_f * sin(delta) / Scalar(p.mass) + wz * vy;
  dx(kVy) = (fy_f * cos(delta) + fy_r) / Scalar(p.mass) - wz * vx;
  dx(kWz) = (Scalar(p.lf) * fy_f * cos(delta) - Scalar(p.lr) * fy_r) / Scalar(p.yaw_inertia);
  dx(kEpsi) = wz - curvature * s_dot;
  dx(kS) = s_dot;
  dx(kEy) = vx * sin(epsi) + vy * cos(epsi);
  return dx;
}

/// Continuous-time Jacobians of continuous_dynamics.
struct Jacobians
{
  StateMatrix A;
  InputMatrix B;
};

Jacobians analytic_jacobians(const State &x, const Input &u, double curvature, const VehicleParams &p);

/// Saturates an input to the actuator box.
Input clamp_input(const Input &u, const VehicleParams &p);

/// One explicit Euler step of the nonlinear model. The input is clamped to the
/// box and the acceleration is further limited so vx stays in [v_min, v_max].
State sim_step(const State &x, const Input &u, const TrackLayout &track, const VehicleParams &p,
               double dt_sim);

/// Applies sim_step `substeps` times with a constant input.
State sim_interval(const State &x, const Input &u, const TrackLayout &track, const VehicleParams &p,
                   double dt_sim, int substeps);

/// Exact Jacobians of the substep chain used by sim_interval, evaluated along
/// the nominal substep trajectory, plus the affine offset that makes
/// A x + B u + C reproduce sim_interval(x, u) exactly.
struct DiscreteAffine
{
  StateMatrix A;
  InputMatrix B;
  State C;
  State next;
};

DiscreteAffine linearize_interval(const State &x, const Input &u, const TrackLayout &track,
                                  const VehicleParams &p, double dt_sim, int substeps);

} // namespace racer

#endif // RACER_VEHICLE_HPP_
