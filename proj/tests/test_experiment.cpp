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

#include "racer/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace racer;

namespace
{

std::size_t count_of(const std::string &text, const std::string &needle)
{
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++n;
  return n;
}

RunOutcome outcome(std::uint64_t seed, StrategyKind kind, bool success)
{
  RunOutcome r;
  r.seed = seed;
  r.strategy = kind;
  r.success = success;
  return r;
}

EpisodeLog one_step_log(const State &ego, const StateSequence &obstacles, double solve_time)
{
  EpisodeLog log;
  StepRecord r;
  r.step = 0;
  r.state = ego;
  r.obstacles = obstacles;
  r.solve_time = solve_time;
  log.steps.push_back(r);
  log.track_length = 51.0;
  return log;
}

} // namespace

TEST_CASE("percentiles interpolate linearly")
{
  CHECK(percentile({}, 50.0) == 0.0);
  CHECK(percentile({7.0}, 95.0) == 7.0);
  CHECK(percentile({4.0, 1.0, 3.0, 2.0}, 50.0) == doctest::Approx(2.5));
  CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 95.0) == doctest::Approx(4.8));
  CHECK(percentile({1.0, 2.0, 3.0}, 0.0) == 1.0);
  CHECK(percentile({1.0, 2.0, 3.0}, 100.0) == 3.0);

  const ComputeStats one = compute_stats({0.0123});
  CHECK(one.count == 1);
  CHECK(one.mean == 0.0123);
  CHECK(one.median == 0.0123);
  CHECK(one.p95 == 0.0123);
  CHECK(one.max == 0.0123);
  CHECK(compute_stats({}).count == 0);

  const ComputeStats s = compute_stats({1.0, 2.0, 3.0, 10.0});
  CHECK(s.mean == doctest::Approx(4.0));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.max == 10.0);
}

TEST_CASE("overtaking phase uses the overtaking range")
{
  StrategyParams p;
  const VehicleParams car;
  const State ego = make_state(1.0, 0, 0, 0, 10.0, 0);
  StepRecord r;
  r.state = ego;
  CHECK_FALSE(in_overtaking_phase(r, p, car, 51.0));
  r.obstacles = {make_state(0.8, 0, 0, 0, 20.0, 0), make_state(0.8, 0, 0, 0, 11.0, 0)};
  CHECK(in_overtaking_phase(r, p, car, 51.0));
  r.obstacles.pop_back();
  CHECK_FALSE(in_overtaking_phase(r, p, car, 51.0));

  const EpisodeLog single = one_step_log(ego, {make_state(0.8, 0, 0, 0, 11.0, 0)}, 0.042);
  const ComputeStats c = summarize_compute({single}, p, car);
  CHECK(c.count == 1);
  CHECK(c.mean == 0.042);
  CHECK(overtaking_solve_times(one_step_log(ego, {}, 0.5), p, car).empty());
}

TEST_CASE("paired classification partitions the seeds")
{
  std::mt19937 rng(8);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial)
  {
    std::vector<RunOutcome> a, b;
    for (std::uint64_t s = 0; s < 20; ++s)
    {
      a.push_back(outcome(s, StrategyKind::itera, coin(rng)));
      b.push_back(outcome(s, StrategyKind::baseline, coin(rng)));
    }
    const Categories c = classify(a, b);
    CHECK(c.both + c.only_itera + c.only_baseline + c.neither == 20);
    int both = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      both += a[i].success && b[i].success;
    CHECK(c.both == both);
  }
  std::vector<RunOutcome> a{outcome(1, StrategyKind::itera, true)};
  std::vector<RunOutcome> b{outcome(2, StrategyKind::baseline, true)};
  CHECK_THROWS_AS(classify(a, b), std::invalid_argument);
  b.push_back(outcome(3, StrategyKind::baseline, true));
  CHECK_THROWS_AS(classify(a, b), std::invalid_argument);
}

TEST_CASE("vehicle corners match an independent placement")
{
  const TrackLayout track = build_track(TrackShape::m_shape, 51.0, 2.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> s(0.0, track.length());
  std::uniform_real_distribution<double> ey(-0.8, 0.8);
  std::uniform_real_distribution<double> ep(-0.5, 0.5);
  for (int trial = 0; trial < 200; ++trial)
  {
    const State x = make_state(1.0, 0, 0, ep(rng), s(rng), ey(rng));
    const auto c = vehicle_corners(track, x, 0.4, 0.2);
    const Pose2 p = track.frenet_to_global(x(kS), x(kEy), x(kEpsi));
    // Centroid, side lengths and the forward direction.
    const double cx = 0.25 * (c[0].x + c[1].x + c[2].x + c[3].x);
    const double cy = 0.25 * (c[0].y + c[1].y + c[2].y + c[3].y);
    CHECK(cx == doctest::Approx(p.x).epsilon(1e-12));
    CHECK(cy == doctest::Approx(p.y).epsilon(1e-12));
    CHECK(std::hypot(c[1].x - c[0].x, c[1].y - c[0].y) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(std::hypot(c[2].x - c[1].x, c[2].y - c[1].y) == doctest::Approx(0.2).epsilon(1e-12));
    const double fwd = std::atan2(c[1].y - c[0].y, c[1].x - c[0].x);
    CHECK(std::abs(std::remainder(fwd - p.heading, 2.0 * M_PI)) < 1e-9);
    // Left side is counter-clockwise from forward.
    const double cross = (c[1].x - c[0].x) * (c[2].y - c[1].y) - (c[1].y - c[0].y) * (c[2].x - c[1].x);
    CHECK(cross > 0.0);
  }
}

TEST_CASE("snapshot of an obstacle-free log draws one vehicle")
{
  const TrackLayout track = build_track(TrackShape::l_shape, 51.0, 2.0);
  EpisodeLog log = one_step_log(make_state(1.0, 0, 0, 0, 3.0, 0.2), {}, 0.0);
  log.steps[0].plan = {make_state(1.0, 0, 0, 0, 3.0, 0.2), make_state(1.0, 0, 0, 0, 3.1, 0.2)};
  const std::string svg = render_snapshot(log, 0, track);
  CHECK(count_of(svg, "class=\"vehicle ") == 1);
  CHECK(count_of(svg, "class=\"vehicle ego\" fill=\"red\"") == 1);
  CHECK(count_of(svg, "class=\"plan\"") == 1);
  CHECK(count_of(svg, "class=\"edge\"") == 2);
  CHECK_THROWS_AS(render_snapshot(log, 5, track), std::out_of_range);

  log.steps[0].obstacles = {make_state(0.5, 0, 0, 0, 8.0, 0), make_state(0.5, 0, 0, 0, 60.0, 0)};
  const std::string two = render_snapshot(log, 0, track);
  CHECK(count_of(two, "class=\"vehicle obstacle\" fill=\"green\"") == 2);
}

TEST_CASE("batch spec validation and names")
{
  BatchSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.n_runs = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK(strategy_kind_from_string(to_string(StrategyKind::baseline)) == StrategyKind::baseline);
  CHECK(strategy_kind_from_string("itera") == StrategyKind::itera);
  CHECK_THROWS(strategy_kind_from_string("bezier"));
}

TEST_CASE("small batch writes consistent outputs")
{
  namespace fs = std::filesystem;
  const fs::path out = fs::temp_directory_path() / "racer_test_batch";
  fs::remove_all(out);
  BatchSpec spec;
  spec.n_runs = 2;
  spec.n_obstacles = 2;
  spec.seed_base = 40;
  spec.training_laps = 1;
  spec.strategies = {StrategyKind::itera};
  spec.threads = 1;
  spec.snapshot_every = 100;
  spec.out_dir = out.string();
  const BatchSummary summary = run_batch(spec);
  REQUIRE(summary.cells.size() == 1);
  const CellSummary &cell = summary.cells[0];
  CHECK_FALSE(cell.categories.has_value());
  REQUIRE(cell.runs.size() == 1);
  REQUIRE(cell.runs[0].size() == 2);
  int total = 0;
  for (int n : cell.histograms[0])
    total += n;
  CHECK(total == 2);
  std::size_t overtaking_steps = 0;
  for (const RunOutcome &r : cell.runs[0])
  {
    CHECK(r.termination.rfind("controller_error", 0) == std::string::npos);
    CHECK(fs::exists(out / "runs" / std::to_string(r.seed) / "itera.csv"));
    overtaking_steps += r.overtaking_solve_times.size();
  }
  CHECK(cell.compute[0].count == static_cast<int>(overtaking_steps));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "compute.json"));
  CHECK(fs::exists(out / "histogram.csv"));
  CHECK(fs::exists(out / "snapshots" / "m_shape_v1_itera_seed40_t0.svg"));

  std::ifstream in(out / "summary.json");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str().find("solve_time") == std::string::npos);
  CHECK(batch_summary_to_json(summary, spec).dump(2) + "\n" == text.str());
  fs::remove_all(out);
}
