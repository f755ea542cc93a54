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

#ifndef RACER_TRACK_HPP_
#define RACER_TRACK_HPP_

#include "json.hpp"

#include <string>
#include <vector>

namespace racer
{

enum class SegmentKind
{
  straight,
  arc,
};

struct Segment
{
  SegmentKind kind = SegmentKind::straight;
  double length = 0.0;    // [m]
  double curvature = 0.0; // [1/m], positive turns left
};

enum class TrackShape
{
  l_shape,
  m_shape,
  ellipse,
};

std::string to_string(TrackShape shape);
TrackShape track_shape_from_string(const std::string &name);

/// Planar pose in the global frame.
struct Pose2
{
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

/// Result of projecting a global pose onto the center line.
struct FrenetPose
{
  double s = 0.0;
  double ey = 0.0;
  double epsi = 0.0;
  /// Set when a second center-line point lies within 1e-9 m of the same
  /// distance; the projection with the smaller s is returned.
  bool ambiguous = false;
};

/**
 * @brief Closed constant-width race track made of straights and circular arcs.
 *
 * The center line starts at the origin heading along +x. Arc length s is
 * periodic with period length(); ey > 0 is left of the direction of travel.
 * Instances are immutable and safe to share across threads.
 */
class TrackLayout
{
public:
  TrackLayout(std::vector<Segment> segments, double width, std::string name = "custom");

  const std::vector<Segment> &segments() const { return segments_; }
  double length() const { return length_; }
  double width() const { return width_; }
  const std::string &name() const { return name_; }

  /// Maps s into [0, length()).
  double wrap_s(double s) const;
  double curvature_at(double s) const;

  /// Center-line pose at arc length s (wrapped).
  Pose2 center_pose(double s) const;
  Pose2 frenet_to_global(double s, double ey, double epsi) const;
  FrenetPose global_to_frenet(const Pose2 &pose) const;

  /// End pose after integrating every segment from the start pose; equals the
  /// start pose for a closed layout.
  Pose2 end_pose() const;
  /// Sum of curvature * length over all segments (2*pi for a counter-clockwise loop).
  double heading_integral() const;

private:
  std::size_t segment_index(double wrapped_s) const;
  Pose2 pose_on_segment(std::size_t index, double t) const;

  std::vector<Segment> segments_;
  std::vector<double> starts_;
  std::vector<Pose2> start_poses_;
  double width_;
  double length_ = 0.0;
  std::string name_;
};

/// Builds one of the canonical closed layouts scaled to target_length.
///
/// l_shape and m_shape are rectilinear outlines with rounded 90 degree corners:
/// the L has a long horizontal leg and a shorter vertical one, the M is a
/// rectangle with a notch cut from the top edge (two reversals of vertical
/// direction). The ellipse is a four-arc oval with no straights.
TrackLayout build_track(TrackShape shape, double target_length, double width);

nlohmann::json track_to_json(const TrackLayout &track);
TrackLayout track_from_json(const nlohmann::json &doc);

double wrap_to_pi(double angle);

} // namespace racer

#endif // RACER_TRACK_HPP_
