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

#include "racer/lap_memory.hpp"
#include "test_support.hpp"

#include <random>
#include <sstream>

using namespace racer;

namespace
{

void record_lap(LapMemory &m, int steps, double length, double speed_jitter, std::mt19937_64 &rng)
{
  std::normal_distribution<double> noise(0.0, speed_jitter);
  const int lap = m.begin_lap();
  for (int k = 0; k <= steps; ++k)
  {
    const double s = length * k / (steps - 0.5);
    m.record_step(make_state(0.8 + noise(rng), noise(rng), noise(rng), noise(rng), s, noise(rng)),
                  make_input(noise(rng), noise(rng)), lap, k);
  }
  m.finalize_lap(steps);
}

} // namespace

TEST_CASE("record_step and finalize_lap")
{
  LapMemory m(10.0);
  CHECK_THROWS_AS(m.record_step(State::Zero(), Input::Zero(), 0, 0), LapMemoryError);
  const int lap = m.begin_lap();
  for (int k = 0; k <= 300; ++k)
  {
    const State x = make_state(1, 0, 0, 0, 10.0 * k / 299.0, 0);
    m.record_step(x, Input::Zero(), lap, k);
    CHECK(m.buffer_size() == static_cast<std::size_t>(k + 1));
    CHECK(m.buffer().back().state == x);
  }
  m.finalize_lap(300);
  CHECK(m.lap(0)[120].cost_to_go == 180);
  CHECK(m.lap(0)[300].cost_to_go == 0);
  for (int k = 1; k <= 300; ++k)
  {
    CHECK(m.lap(0)[static_cast<std::size_t>(k)].cost_to_go < m.lap(0)[static_cast<std::size_t>(k - 1)].cost_to_go);
  }

  m.begin_lap();
  m.record_step(make_state(1, 0, 0, 0, 0, 0), Input::Zero(), 1, 0);
  m.record_step(make_state(1, 0, 0, 0, 5, 0), Input::Zero(), 1, 1);
  CHECK_THROWS_AS(m.finalize_lap(1), LapMemoryError); // did not reach the finish line
  CHECK_THROWS_AS(m.record_step(make_state(1, 0, 0, 0, 6, 0), Input::Zero(), 1, 5), LapMemoryError);
}

TEST_CASE("knn_query matches exhaustive search")
{
  const double L = 51.0;
  std::mt19937_64 rng(21);
  LapMemory m(L);
  for (int lap = 0; lap < 4; ++lap)
  {
    record_lap(m, 1500 + 37 * lap, L, 0.05, rng);
  }
  StateWeights Dz;
  Dz << 0.1, 0.1, 0.1, 0.1, 1.0, 1.0;
  std::uniform_real_distribution<double> s(-1.0, L + 1.0);
  for (int q = 0; q < 100; ++q)
  {
    const State x = make_state(0.8, 0.0, 0.0, 0.0, s(rng), 0.05);
    const int window = 1 + q % 4;
    const auto got = m.knn_query(x, 32, Dz, window);
    const auto want = testing::brute_force_knn(m, x, 32, Dz, window);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
    {
      CHECK(got[i].point.lap == want[i].point.lap);
      CHECK(got[i].point.step == want[i].point.step);
      CHECK(got[i].distance == doctest::Approx(want[i].distance).epsilon(1e-12));
    }
  }
}

TEST_CASE("knn_query ordering, deduplication and errors")
{
  LapMemory m(10.0);
  const int lap = m.begin_lap();
  for (int k = 0; k <= 10; ++k)
  {
    // steps 3 and 4 store the identical state
    const double s = k == 4 ? 3.0 : static_cast<double>(k);
    m.record_step(make_state(1, 0, 0, 0, s, 0), Input::Zero(), lap, k);
  }
  m.finalize_lap(10);
  StateWeights Dz = StateWeights::Ones();

  const auto exact = m.knn_query(make_state(1, 0, 0, 0, 6.0, 0), 1, Dz, 2);
  CHECK(exact[0].point.step == 6);
  CHECK(exact[0].distance == 0.0);

  const auto near_dup = m.knn_query(make_state(1, 0, 0, 0, 3.0, 0), 3, Dz, 2);
  int copies = 0;
  for (const auto &n : near_dup)
  {
    copies += n.point.state(kS) == 3.0;
    if (n.point.state(kS) == 3.0)
      CHECK(n.point.step == 4); // the smaller cost-to-go copy survives
  }
  CHECK(copies == 1);
  for (std::size_t i = 1; i < near_dup.size(); ++i)
  {
    CHECK(near_dup[i - 1].point.cost_to_go <= near_dup[i].point.cost_to_go);
  }

  // Near the finish line, the opening of the lap is close in s.
  const auto seam = m.knn_query(make_state(1, 0, 0, 0, 9.9, 0), 2, Dz, 2);
  bool has_start = false;
  for (const auto &n : seam)
  {
    if (n.point.step == 0)
    {
      has_start = true;
      CHECK(n.s_offset == doctest::Approx(10.0));
    }
  }
  CHECK(has_start);

  CHECK_THROWS_AS(m.knn_query(make_state(1, 0, 0, 0, 3.0, 0), 11, Dz, 2), InsufficientHistory);
}

TEST_CASE("successor continues into the next lap")
{
  LapMemory m(10.0);
  for (int l = 0; l < 2; ++l)
  {
    const int lap = m.begin_lap();
    for (int k = 0; k <= 20; ++k)
    {
      m.record_step(make_state(1, 0, 0, 0, 10.0 * k / 19.5, 0), Input::Zero(), lap, k);
    }
    m.finalize_lap(20);
  }
  const auto inside = m.successor(0, 5, 12);
  CHECK(inside.step == 17);
  CHECK(inside.cost_to_go == 3);
  CHECK_FALSE(inside.clamped);
  const auto across = m.successor(0, 15, 12);
  CHECK(across.cost_to_go == -7);
  CHECK(across.state(kS) == doctest::Approx(10.0 + 10.0 * 7 / 19.5));
  const auto end = m.successor(1, 15, 12);
  CHECK(end.clamped);
  CHECK(end.cost_to_go == 0);
}

TEST_CASE("memory CSV round trip")
{
  std::mt19937_64 rng(4);
  LapMemory m(51.0);
  record_lap(m, 200, 51.0, 0.05, rng);
  record_lap(m, 180, 51.0, 0.05, rng);
  std::stringstream ss;
  m.save_csv(ss);
  const LapMemory r = LapMemory::load_csv(ss, 51.0);
  REQUIRE(r.finalized_laps() == 2);
  CHECK(r.lap_steps(1) == 180);
  CHECK(r.lap(1)[17].state == m.lap(1)[17].state);
  CHECK(r.lap(0)[3].cost_to_go == 197);
}
