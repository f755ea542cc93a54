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

#include "racer/vehicle.hpp"

#include <algorithm>

namespace racer
{

void VehicleParams::validate() const
{
  if (!(mass > 0.0) || !(yaw_inertia > 0.0) || !(lf > 0.0) || !(lr > 0.0))
  {
    throw std::invalid_argument("VehicleParams: mass, inertia and axle distances must be positive");
  }
  if (!(lf + lr < length))
  {
    throw std::invalid_argument("VehicleParams: wheelbase must be shorter than the body");
  }
  if (!(a_max > 0.0) || !(delta_max > 0.0) || !(v_max > v_min))
  {
    throw std::invalid_argument("VehicleParams: invalid actuator or speed limits");
  }
}

namespace
{

nlohmann::json tire_to_json(const PacejkaCoefficients &t)
{
  return {{"B", t.B}, {"C", t.C}, {"D", t.D}};
}

PacejkaCoefficients tire_from_json(const nlohmann::json &doc, const PacejkaCoefficients &fallback)
{
  PacejkaCoefficients t = fallback;
  t.B = doc.value("B", t.B);
  t.C = doc.value("C", t.C);
  t.D = doc.value("D", t.D);
  return t;
}

struct TireSlope
{
  double force;
  double slope; // dF/dalpha
};

TireSlope tire(const PacejkaCoefficients &c, double alpha)
{
  const double inner = c.C * std::atan(c.B * alpha);
  return {c.D * std::sin(inner), c.D * std::cos(inner) * c.C * c.B / (1.0 + c.B * c.B * alpha * alpha)};
}

} // namespace

nlohmann::json params_to_json(const VehicleParams &p)
{
  return {{"mass", p.mass},
          {"yaw_inertia", p.yaw_inertia},
          {"lf", p.lf},
          {"lr", p.lr},
          {"length", p.length},
          {"width", p.width},
          {"front_tire", tire_to_json(p.front)},
          {"rear_tire", tire_to_json(p.rear)},
          {"a_max", p.a_max},
          {"delta_max", p.delta_max},
          {"v_min", p.v_min},
          {"v_max", p.v_max}};
}

VehicleParams vehicle_params_from_json(const nlohmann::json &doc)
{
  VehicleParams p;
  p.mass = doc.value("mass", p.mass);
  p.yaw_inertia = doc.value("yaw_inertia", p.yaw_inertia);
  p.lf = doc.value("lf", p.lf);
  p.lr = doc.value("lr", p.lr);
  p.length = doc.value("length", p.length);
  p.width = doc.value("width", p.width);
  if (doc.contains("front_tire"))
    p.front = tire_from_json(doc.at("front_tire"), p.front);
  if (doc.contains("rear_tire"))
    p.rear = tire_from_json(doc.at("rear_tire"), p.rear);
  p.a_max = doc.value("a_max", p.a_max);
  p.delta_max = doc.value("delta_max", p.delta_max);
  p.v_min = doc.value("v_min", p.v_min);
  p.v_max = doc.value("v_max", p.v_max);
  p.validate();
  return p;
}

Jacobians analytic_jacobians(const State &x, const Input &u, double curvature, const VehicleParams &p)
{
  const double vx = x(kVx);
  const double vy = x(kVy);
  const double wz = x(kWz);
  const double epsi = x(kEpsi);
  const double ey = x(kEy);
  const double delta = u(kSteer);

  const double scale = 1.0 - curvature * ey;
  if (std::abs(scale) < kFrenetGuard)
  {
    throw FrenetSingularity("analytic_jacobians: 1 - kappa * ey vanishes");
  }

  const double yf = vy + p.lf * wz;
  const double yr = vy - p.lr * wz;
  const double den_f = vx * vx + yf * yf;
  const double den_r = vx * vx + yr * yr;

  // Partial derivatives of the slip angles w.r.t. (vx, vy, wz).
  Eigen::Vector3d daf = Eigen::Vector3d::Zero();
  Eigen::Vector3d dar = Eigen::Vector3d::Zero();
  if (den_f > 1e-12)
  {
    daf << yf / den_f, -vx / den_f, -p.lf * vx / den_f;
  }
  if (den_r > 1e-12)
  {
    dar << yr / den_r, -vx / den_r, p.lr * vx / den_r;
  }

  const double alpha_f = delta - std::atan2(yf, vx);
  const double alpha_r = -std::atan2(yr, vx);
  const TireSlope tf = tire(p.front, alpha_f);
  const TireSlope tr = tire(p.rear, alpha_r);

  const double sd = std::sin(delta);
  const double cd = std::cos(delta);
  const double se = std::sin(epsi);
  const double ce = std::cos(epsi);

  Jacobians J;
  J.A.setZero();
  J.B.setZero();

  // vx row
  for (int i = 0; i < 3; ++i)
  {
    J.A(kVx, i) = -tf.slope * daf(i) * sd / p.mass;
  }
  J.A(kVx, kVy) += wz;
  J.A(kVx, kWz) += vy;
  J.B(kVx, kAccel) = 1.0;
  J.B(kVx, kSteer) = -(tf.slope * sd + tf.force * cd) / p.mass;

  // vy row
  for (int i = 0; i < 3; ++i)
  {
    J.A(kVy, i) = (tf.slope * daf(i) * cd + tr.slope * dar(i)) / p.mass;
  }
  J.A(kVy, kVx) -= wz;
  J.A(kVy, kWz) -= vx;
  J.B(kVy, kSteer) = (tf.slope * cd - tf.force * sd) / p.mass;

  // wz row
  for (int i = 0; i < 3; ++i)
  {
    J.A(kWz, i) = (p.lf * tf.slope * daf(i) * cd - p.lr * tr.slope * dar(i)) / p.yaw_inertia;
  }
  J.B(kWz, kSteer) = p.lf * (tf.slope * cd - tf.force * sd) / p.yaw_inertia;

  // s row
  const double num = vx * ce - vy * se;
  J.A(kS, kVx) = ce / scale;
  J.A(kS, kVy) = -se / scale;
  J.A(kS, kEpsi) = (-vx * se - vy * ce) / scale;
  J.A(kS, kEy) = num * curvature / (scale * scale);

  // epsi row
  J.A.row(kEpsi) = -curvature * J.A.row(kS);
  J.A(kEpsi, kWz) += 1.0;

  // ey row
  J.A(kEy, kVx) = se;
  J.A(kEy, kVy) = ce;
  J.A(kEy, kEpsi) = vx * ce - vy * se;
  return J;
}

Input clamp_input(const Input &u, const VehicleParams &p)
{
  return Input(std::clamp(u(kAccel), -p.a_max, p.a_max), std::clamp(u(kSteer), -p.delta_max, p.delta_max));
}

State sim_step(const State &x, const Input &u, const TrackLayout &track, const VehicleParams &p, double dt_sim)
{
  if (!(dt_sim > 0.0))
  {
    throw std::invalid_argument("sim_step: dt_sim must be positive");
  }
  const Input uc = clamp_input(u, p);
  State dx = continuous_dynamics<double>(x, uc, track.curvature_at(x(kS)), p);

  const double vx_next = x(kVx) + dt_sim * dx(kVx);
  double a_eff = uc(kAccel);
  if (vx_next > p.v_max)
  {
    a_eff -= (vx_next - p.v_max) / dt_sim;
  }
  else if (vx_next < p.v_min)
  {
    a_eff += (p.v_min - vx_next) / dt_sim;
  }
  a_eff = std::clamp(a_eff, -p.a_max, p.a_max);
  dx(kVx) += a_eff - uc(kAccel);
  return x + dt_sim * dx;
}

State sim_interval(const State &x, const Input &u, const TrackLayout &track, const VehicleParams &p,
                   double dt_sim, int substeps)
{
  State out = x;
  for (int i = 0; i < substeps; ++i)
  {
    out = sim_step(out, u, track, p, dt_sim);
  }
  return out;
}

DiscreteAffine linearize_interval(const State &x, const Input &u, const TrackLayout &track,
                                  const VehicleParams &p, double dt_sim, int substeps)
{
  const Input uc = clamp_input(u, p);
  DiscreteAffine out;
  out.A.setIdentity();
  out.B.setZero();
  State xi = x;
  for (int i = 0; i < substeps; ++i)
  {
    const Jacobians J = analytic_jacobians(xi, uc, track.curvature_at(xi(kS)), p);
    const StateMatrix Ad = StateMatrix::Identity() + dt_sim * J.A;
    out.A = (Ad * out.A).eval();
    out.B = (Ad * out.B + dt_sim * J.B).eval();
    xi = sim_step(xi, u, track, p, dt_sim);
  }
  out.next = xi;
  out.C = xi - out.A * x - out.B * u;
  return out;
}

} // namespace racer
