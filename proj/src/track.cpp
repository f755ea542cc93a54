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

#include "racer/track.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace racer
{

namespace
{

constexpr double kPi = std::numbers::pi;

struct Vertex
{
  double x;
  double y;
};

// Rectilinear outline (counter-clockwise) with every corner rounded by radius.
std::vector<Segment> rounded_polygon(const std::vector<Vertex> &vertices, double radius)
{
  const std::size_t n = vertices.size();
  std::vector<Segment> out;
  for (std::size_t i = 0; i < n; ++i)
  {
    const Vertex &a = vertices[i];
    const Vertex &b = vertices[(i + 1) % n];
    const Vertex &c = vertices[(i + 2) % n];
    const double edge = std::hypot(b.x - a.x, b.y - a.y);
    const double straight = edge - 2.0 * radius;
    if (straight < -1e-12)
    {
      throw std::logic_error("rounded_polygon: corner radius too large for edge");
    }
    if (straight > 1e-12)
    {
      out.push_back({SegmentKind::straight, straight, 0.0});
    }
    const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
    const double sign = cross > 0.0 ? 1.0 : -1.0;
    out.push_back({SegmentKind::arc, 0.5 * kPi * radius, sign / radius});
  }
  return out;
}

std::vector<Segment> canonical_segments(TrackShape shape)
{
  switch (shape)
  {
  case TrackShape::l_shape:
    return rounded_polygon({{0, 0}, {16, 0}, {16, 5}, {5, 5}, {5, 11}, {0, 11}}, 2.3);
  case TrackShape::m_shape:
    return rounded_polygon(
        {{0, 0}, {15, 0}, {15, 9.6}, {10, 9.6}, {10, 4.8}, {5, 4.8}, {5, 9.6}, {0, 9.6}}, 2.3);
  case TrackShape::ellipse:
  {
    // Four-arc oval: flat arcs on the long sides, tight arcs at the ends.
    const double r_side = 10.0;
    const double r_end = 3.0;
    const double side = kPi / 3.0;
    const double end = kPi - side;
    return {
        {SegmentKind::arc, 0.5 * side * r_side, 1.0 / r_side},
        {SegmentKind::arc, end * r_end, 1.0 / r_end},
        {SegmentKind::arc, side * r_side, 1.0 / r_side},
        {SegmentKind::arc, end * r_end, 1.0 / r_end},
        {SegmentKind::arc, 0.5 * side * r_side, 1.0 / r_side},
    };
  }
  }
  throw std::invalid_argument("unknown track shape");
}

} // namespace

double wrap_to_pi(double angle)
{
  double a = std::remainder(angle, 2.0 * kPi);
  if (a >= kPi)
  {
    a -= 2.0 * kPi;
  }
  return a;
}

std::string to_string(TrackShape shape)
{
  switch (shape)
  {
  case TrackShape::l_shape:
    return "l_shape";
  case TrackShape::m_shape:
    return "m_shape";
  case TrackShape::ellipse:
    return "ellipse";
  }
  return "unknown";
}

TrackShape track_shape_from_string(const std::string &name)
{
  if (name == "l" || name == "l_shape")
    return TrackShape::l_shape;
  if (name == "m" || name == "m_shape")
    return TrackShape::m_shape;
  if (name == "ellipse")
    return TrackShape::ellipse;
  throw std::invalid_argument("unknown track shape: " + name);
}

TrackLayout::TrackLayout(std::vector<Segment> segments, double width, std::string name)
    : segments_(std::move(segments)), width_(width), name_(std::move(name))
{
  if (!(width_ > 0.0))
  {
    throw std::invalid_argument("TrackLayout: width must be positive");
  }
  if (segments_.empty())
  {
    throw std::invalid_argument("TrackLayout: no segments");
  }
  Pose2 pose;
  for (std::size_t i = 0; i < segments_.size(); ++i)
  {
    Segment &seg = segments_[i];
    if (!(seg.length > 0.0))
    {
      throw std::invalid_argument("TrackLayout: segment length must be positive");
    }
    if (seg.kind == SegmentKind::straight)
    {
      seg.curvature = 0.0;
    }
    else if (seg.curvature == 0.0)
    {
      throw std::invalid_argument("TrackLayout: arc with zero curvature");
    }
    starts_.push_back(length_);
    start_poses_.push_back(pose);
    length_ += seg.length;
    pose = pose_on_segment(i, seg.length);
  }
}

double TrackLayout::wrap_s(double s) const
{
  double r = s - length_ * std::floor(s / length_);
  if (r >= length_ || r < 0.0)
  {
    r = 0.0;
  }
  return r;
}

std::size_t TrackLayout::segment_index(double wrapped_s) const
{
  auto it = std::upper_bound(starts_.begin(), starts_.end(), wrapped_s);
  return static_cast<std::size_t>(std::distance(starts_.begin(), it)) - 1;
}

double TrackLayout::curvature_at(double s) const
{
  return segments_[segment_index(wrap_s(s))].curvature;
}

Pose2 TrackLayout::pose_on_segment(std::size_t index, double t) const
{
  const Pose2 &p0 = start_poses_[index];
  const Segment &seg = segments_[index];
  if (seg.kind == SegmentKind::straight)
  {
    return {p0.x + t * std::cos(p0.heading), p0.y + t * std::sin(p0.heading), p0.heading};
  }
  const double k = seg.curvature;
  const double heading = p0.heading + k * t;
  return {p0.x + (std::sin(heading) - std::sin(p0.heading)) / k,
          p0.y - (std::cos(heading) - std::cos(p0.heading)) / k, heading};
}

Pose2 TrackLayout::center_pose(double s) const
{
  const double ws = wrap_s(s);
  const std::size_t i = segment_index(ws);
  return pose_on_segment(i, ws - starts_[i]);
}

Pose2 TrackLayout::frenet_to_global(double s, double ey, double epsi) const
{
  const Pose2 c = center_pose(s);
  return {c.x - ey * std::sin(c.heading), c.y + ey * std::cos(c.heading),
          wrap_to_pi(c.heading + epsi)};
}

FrenetPose TrackLayout::global_to_frenet(const Pose2 &pose) const
{
  double best_dist = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  bool ambiguous = false;

  auto consider = [&](std::size_t i, double t) {
    const Pose2 q = pose_on_segment(i, t);
    const double d = std::hypot(pose.x - q.x, pose.y - q.y);
    const double s = wrap_s(starts_[i] + t);
    if (d < best_dist - 1e-9)
    {
      best_dist = d;
      best_s = s;
      ambiguous = false;
    }
    else if (std::abs(d - best_dist) <= 1e-9)
    {
      const double gap = std::abs(std::remainder(s - best_s, length_));
      if (gap > 1e-6)
      {
        ambiguous = true;
      }
    }
  };

  for (std::size_t i = 0; i < segments_.size(); ++i)
  {
    const Segment &seg = segments_[i];
    const Pose2 &p0 = start_poses_[i];
    if (seg.kind == SegmentKind::straight)
    {
      const double t = (pose.x - p0.x) * std::cos(p0.heading) + (pose.y - p0.y) * std::sin(p0.heading);
      consider(i, std::clamp(t, 0.0, seg.length));
      continue;
    }
    const double k = seg.curvature;
    const double cx = p0.x - std::sin(p0.heading) / k;
    const double cy = p0.y + std::cos(p0.heading) / k;
    const double dx = pose.x - cx;
    const double dy = pose.y - cy;
    if (std::hypot(dx, dy) < 1e-12)
    {
      consider(i, 0.0);
      continue;
    }
    // Angle of the start point around the center, then the swept angle to the query.
    const double phi0 = std::atan2(p0.y - cy, p0.x - cx);
    const double sign = k > 0.0 ? 1.0 : -1.0;
    double sweep = sign * (std::atan2(dy, dx) - phi0);
    sweep -= 2.0 * kPi * std::floor(sweep / (2.0 * kPi));
    const double t = sweep / std::abs(k);
    if (t <= seg.length)
    {
      consider(i, t);
    }
    else
    {
      consider(i, 0.0);
      consider(i, seg.length);
    }
  }

  const Pose2 c = center_pose(best_s);
  FrenetPose out;
  out.s = best_s;
  out.ey = -(pose.x - c.x) * std::sin(c.heading) + (pose.y - c.y) * std::cos(c.heading);
  out.epsi = wrap_to_pi(pose.heading - c.heading);
  out.ambiguous = ambiguous;
  return out;
}

Pose2 TrackLayout::end_pose() const
{
  return pose_on_segment(segments_.size() - 1, segments_.back().length);
}

double TrackLayout::heading_integral() const
{
  double total = 0.0;
  for (const Segment &seg : segments_)
  {
    total += seg.curvature * seg.length;
  }
  return total;
}

TrackLayout build_track(TrackShape shape, double target_length, double width)
{
  if (!(target_length > 0.0) || !(width > 0.0))
  {
    throw std::invalid_argument("build_track: dimensions must be positive");
  }
  std::vector<Segment> segments = canonical_segments(shape);
  double design_length = 0.0;
  for (const Segment &seg : segments)
  {
    design_length += seg.length;
  }
  const double scale = target_length / design_length;
  for (Segment &seg : segments)
  {
    seg.length *= scale;
    seg.curvature /= scale;
  }
  return TrackLayout(std::move(segments), width, to_string(shape));
}

nlohmann::json track_to_json(const TrackLayout &track)
{
  nlohmann::json segments = nlohmann::json::array();
  for (const Segment &seg : track.segments())
  {
    segments.push_back({{"kind", seg.kind == SegmentKind::straight ? "straight" : "arc"},
                        {"length", seg.length},
                        {"curvature", seg.curvature}});
  }
  return {{"shape", track.name()}, {"width", track.width()}, {"segments", segments}};
}

TrackLayout track_from_json(const nlohmann::json &doc)
{
  std::vector<Segment> segments;
  for (const auto &item : doc.at("segments"))
  {
    Segment seg;
    const std::string kind = item.at("kind").get<std::string>();
    if (kind == "straight")
      seg.kind = SegmentKind::straight;
    else if (kind == "arc")
      seg.kind = SegmentKind::arc;
    else
      throw std::invalid_argument("unknown segment kind: " + kind);
    seg.length = item.at("length").get<double>();
    seg.curvature = item.value("curvature", 0.0);
    segments.push_back(seg);
  }
  return TrackLayout(std::move(segments), doc.at("width").get<double>(),
                     doc.value("shape", std::string("custom")));
}

} // namespace racer
