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

#include "doctest.h"

#include "racer/track.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace racer;

namespace
{

// Independent reference: march along the segment list with midpoint heading
// integration, splitting steps at segment ends.
Pose2 integrate_center_line(const TrackLayout &track, double s_end, int steps)
{
  double x = 0.0, y = 0.0, th = 0.0, s = 0.0;
  const double h_max = s_end / steps;
  for (const Segment &seg : track.segments())
  {
    const double seg_end = std::min(s + seg.length, s_end);
    while (s < seg_end)
    {
      const double h = std::min(h_max, seg_end - s);
      const double th_mid = th + 0.5 * seg.curvature * h;
      x += h * std::cos(th_mid);
      y += h * std::sin(th_mid);
      th += seg.curvature * h;
      s += h;
    }
    if (s >= s_end)
      break;
  }
  return {x, y, th};
}

const TrackShape kShapes[] = {TrackShape::l_shape, TrackShape::m_shape, TrackShape::ellipse};

} // namespace

TEST_CASE("build_track yields closed layouts near the target length")
{
  for (TrackShape shape : kShapes)
  {
    const TrackLayout t = build_track(shape, 51.0, 2.0);
    CHECK(t.length() >= 49.98);
    CHECK(t.length() <= 52.02);
    double sum = 0.0;
    for (const Segment &seg : t.segments())
    {
      sum += seg.length;
      if (seg.kind == SegmentKind::straight)
        CHECK(seg.curvature == 0.0);
    }
    CHECK(sum == doctest::Approx(t.length()).epsilon(1e-12));
    const Pose2 end = t.end_pose();
    CHECK(std::hypot(end.x, end.y) < 1e-6);
    CHECK(std::abs(wrap_to_pi(end.heading)) < 1e-6);
    CHECK(t.heading_integral() == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-9));
  }
  const TrackLayout ellipse = build_track(TrackShape::ellipse, 51.0, 2.0);
  for (const Segment &seg : ellipse.segments())
  {
    CHECK(seg.kind == SegmentKind::arc);
  }
}

TEST_CASE("build_track rejects non-positive dimensions")
{
  CHECK_THROWS_AS(build_track(TrackShape::m_shape, 0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(build_track(TrackShape::m_shape, 51.0, -1.0), std::invalid_argument);
}

TEST_CASE("wrap_s is periodic and lands in [0, L)")
{
  const TrackLayout t({{SegmentKind::straight, 51.0, 0.0}}, 2.0);
  CHECK(t.wrap_s(51.0) == 0.0);
  CHECK(t.wrap_s(-1.0) == doctest::Approx(50.0));
  CHECK(t.wrap_s(25.0) == 25.0);

  const TrackLayout m = build_track(TrackShape::m_shape, 51.0, 2.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-500.0, 500.0);
  for (int i = 0; i < 1000; ++i)
  {
    const double s = dist(rng);
    const double w = m.wrap_s(s);
    CHECK(w >= 0.0);
    CHECK(w < m.length());
    CHECK(m.wrap_s(s + m.length()) == doctest::Approx(w).epsilon(1e-9));
  }
}

TEST_CASE("curvature_at follows the segment list")
{
  const TrackLayout t({{SegmentKind::straight, 3.0, 0.0},
                       {SegmentKind::arc, std::numbers::pi, 0.5},
                       {SegmentKind::straight, 3.0, 0.0},
                       {SegmentKind::arc, std::numbers::pi, 0.5}},
                      1.0);
  CHECK(t.curvature_at(1.0) == 0.0);
  CHECK(t.curvature_at(4.0) == 0.5);
  CHECK(t.curvature_at(t.length() + 1e-3) == 0.0);
}

TEST_CASE("frenet_to_global matches numeric integration of the center line")
{
  for (TrackShape shape : kShapes)
  {
    const TrackLayout t = build_track(shape, 51.0, 2.0);
    const Pose2 start = t.frenet_to_global(0.0, 0.0, 0.0);
    CHECK(start.x == 0.0);
    CHECK(start.y == 0.0);
    CHECK(start.heading == 0.0);
    for (double frac : {0.25, 0.5, 0.8})
    {
      const double s = frac * t.length();
      const Pose2 ref = integrate_center_line(t, s, 200000);
      const Pose2 p = t.frenet_to_global(s, 0.0, 0.0);
      CHECK(std::hypot(p.x - ref.x, p.y - ref.y) < 1e-6);
      CHECK(std::abs(wrap_to_pi(p.heading - ref.heading)) < 1e-6);
    }
  }
}

TEST_CASE("lateral sign convention is left-positive")
{
  const TrackLayout t = build_track(TrackShape::l_shape, 51.0, 2.0);
  const Pose2 c = t.center_pose(10.0);
  const Pose2 left{c.x - 0.3 * std::sin(c.heading), c.y + 0.3 * std::cos(c.heading), c.heading};
  const FrenetPose f = t.global_to_frenet(left);
  CHECK(f.s == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(f.ey == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::abs(f.epsi) < 1e-12);

  const FrenetPose origin = t.global_to_frenet({0.0, 0.0, 0.0});
  CHECK(origin.s == 0.0);
  CHECK(origin.ey == 0.0);
  CHECK(origin.epsi == 0.0);
}

TEST_CASE("Frenet round trip on random poses")
{
  std::mt19937_64 rng(11);
  for (TrackShape shape : kShapes)
  {
    const TrackLayout t = build_track(shape, 51.0, 2.0);
    std::uniform_real_distribution<double> ds(0.0, t.length());
    std::uniform_real_distribution<double> dey(-0.99 * t.width(), 0.99 * t.width());
    std::uniform_real_distribution<double> dpsi(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i)
    {
      const double s = ds(rng), ey = dey(rng), epsi = dpsi(rng);
      const FrenetPose f = t.global_to_frenet(t.frenet_to_global(s, ey, epsi));
      const double ds_err = std::abs(std::remainder(f.s - s, t.length()));
      worst = std::max({worst, ds_err, std::abs(f.ey - ey), std::abs(wrap_to_pi(f.epsi - epsi))});
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("track JSON round trip")
{
  const TrackLayout t = build_track(TrackShape::m_shape, 51.0, 2.0);
  const TrackLayout u = track_from_json(track_to_json(t));
  REQUIRE(u.segments().size() == t.segments().size());
  CHECK(u.length() == doctest::Approx(t.length()).epsilon(1e-15));
  CHECK(u.width() == t.width());
  CHECK(track_shape_from_string("m") == TrackShape::m_shape);
  CHECK(track_shape_from_string("ellipse") == TrackShape::ellipse);
}
