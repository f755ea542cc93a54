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

#include "racer/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace racer
{

namespace
{

constexpr double kMargin = 0.5;
constexpr double kPixelsPerMeter = 40.0;

struct Bounds
{
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(const Point2 &p)
  {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
};

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// SVG y grows downwards; flip so the drawing matches the track frame.
std::string points_attr(const std::vector<Point2> &pts)
{
  std::string out;
  for (const Point2 &p : pts)
  {
    if (!out.empty())
      out += ' ';
    out += fmt(p.x) + "," + fmt(-p.y);
  }
  return out;
}

std::vector<Point2> offset_line(const TrackLayout &track, double ey, int samples)
{
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(samples) + 1);
  for (int i = 0; i <= samples; ++i)
  {
    const Pose2 p = track.frenet_to_global(track.length() * i / samples, ey, 0.0);
    pts.push_back({p.x, p.y});
  }
  return pts;
}

} // namespace

std::array<Point2, 4> vehicle_corners(const TrackLayout &track, const State &x, double length, double width)
{
  const Pose2 c = track.frenet_to_global(track.wrap_s(x(kS)), x(kEy), x(kEpsi));
  const double ch = std::cos(c.heading), sh = std::sin(c.heading);
  const double hl = 0.5 * length, hw = 0.5 * width;
  auto at = [&](double f, double l) { return Point2{c.x + f * ch - l * sh, c.y + f * sh + l * ch}; };
  return {at(-hl, -hw), at(hl, -hw), at(hl, hw), at(-hl, hw)};
}

std::string render_snapshot(const EpisodeLog &log, int t, const TrackLayout &track, const VehicleParams &vehicle)
{
  const auto it = std::find_if(log.steps.begin(), log.steps.end(), [t](const StepRecord &r) { return r.step == t; });
  if (it == log.steps.end())
    throw std::out_of_range("render_snapshot: step " + std::to_string(t) + " is not in the log");
  const StepRecord &rec = *it;

  const int samples = std::max(64, static_cast<int>(track.length() / 0.1));
  const double half = 0.5 * track.width();
  const std::vector<Point2> left = offset_line(track, half, samples);
  const std::vector<Point2> right = offset_line(track, -half, samples);
  const std::vector<Point2> center = offset_line(track, 0.0, samples);
  Bounds b;
  for (const Point2 &p : left)
    b.add(p);
  for (const Point2 &p : right)
    b.add(p);

  const double w = b.x1 - b.x0 + 2.0 * kMargin;
  const double h = b.y1 - b.y0 + 2.0 * kMargin;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w * kPixelsPerMeter) << "\" height=\""
      << fmt(h * kPixelsPerMeter) << "\" viewBox=\"" << fmt(b.x0 - kMargin) << ' ' << fmt(-b.y1 - kMargin) << ' '
      << fmt(w) << ' ' << fmt(h) << "\">\n";
  svg << "<title>step " << rec.step << " t=" << fmt(rec.time) << " s</title>\n";
  svg << "<rect x=\"" << fmt(b.x0 - kMargin) << "\" y=\"" << fmt(-b.y1 - kMargin) << "\" width=\"" << fmt(w)
      << "\" height=\"" << fmt(h) << "\" fill=\"white\"/>\n";
  svg << "<polyline class=\"edge\" fill=\"none\" stroke=\"black\" stroke-width=\"0.03\" points=\""
      << points_attr(left) << "\"/>\n";
  svg << "<polyline class=\"edge\" fill=\"none\" stroke=\"black\" stroke-width=\"0.03\" points=\""
      << points_attr(right) << "\"/>\n";
  svg << "<polyline class=\"center\" fill=\"none\" stroke=\"gray\" stroke-width=\"0.015\" "
         "stroke-dasharray=\"0.2 0.2\" points=\""
      << points_attr(center) << "\"/>\n";

  if (rec.plan.size() > 1)
  {
    std::vector<Point2> plan;
    for (const State &x : rec.plan)
    {
      const Pose2 p = track.frenet_to_global(track.wrap_s(x(kS)), x(kEy), x(kEpsi));
      plan.push_back({p.x, p.y});
    }
    svg << "<polyline class=\"plan\" fill=\"none\" stroke=\"orange\" stroke-width=\"0.03\" points=\""
        << points_attr(plan) << "\"/>\n";
  }
  auto vehicle_polygon = [&](const State &x, const char *colour, const char *role) {
    const std::array<Point2, 4> c = vehicle_corners(track, x, vehicle.length, vehicle.width);
    svg << "<polygon class=\"vehicle " << role << "\" fill=\"" << colour << "\" points=\""
        << points_attr(std::vector<Point2>(c.begin(), c.end())) << "\"/>\n";
  };
  for (const State &obs : rec.obstacles)
    vehicle_polygon(obs, "green", "obstacle");
  vehicle_polygon(rec.state, "red", "ego");
  svg << "</svg>\n";
  return svg.str();
}

} // namespace racer
