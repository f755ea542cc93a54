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

#include "racer/atv_model.hpp"

#include <random>

using namespace racer;

TEST_CASE("regression recovers an exactly linear generator")
{
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  StateMatrix A;
  InputMatrix B;
  State C;
  for (int i = 0; i < A.size(); ++i)
    A(i) = 0.3 * g(rng);
  for (int i = 0; i < B.size(); ++i)
    B(i) = 0.3 * g(rng);
  for (int i = 0; i < C.size(); ++i)
    C(i) = 0.1 * g(rng);

  std::vector<Transition> data;
  for (int n = 0; n < 200; ++n)
  {
    State x;
    for (int i = 0; i < kStateDim; ++i)
      x(i) = g(rng);
    const Input u(g(rng), g(rng));
    data.push_back({x, u, A * x + B * u + C});
  }
  AtvOptions opt;
  opt.regressed_rows.fill(true);
  opt.feature_states.fill(true);
  opt.max_bandwidth = 0.0;
  const State x_ref = data[17].state;
  const Input u_ref(0.1, -0.2);
  const LocalFit fit = local_linear_regression(data, x_ref, u_ref, opt);
  REQUIRE_FALSE(fit.degenerate);
  CHECK((fit.A - A).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit.B - B).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit.C - C).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("constant inputs make the regression degenerate")
{
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Transition> data;
  for (int n = 0; n < 60; ++n)
  {
    State x = State::Zero();
    x.head<3>() << g(rng), g(rng), g(rng);
    data.push_back({x, Input(0.5, 0.0), x});
  }
  const LocalFit fit = local_linear_regression(data, State::Zero(), Input::Zero(), AtvOptions{});
  CHECK(fit.degenerate);
  CHECK(local_linear_regression(std::span<const Transition>(data.data(), 10), State::Zero(), Input::Zero(),
                                AtvOptions{})
            .degenerate);
}

TEST_CASE("neighbourhoods wider than max_bandwidth are rejected")
{
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Transition> data;
  for (int n = 0; n < 60; ++n)
  {
    State x = State::Zero();
    x.head<3>() << 1.0 + g(rng), g(rng), g(rng);
    data.push_back({x, Input(g(rng), g(rng)), x});
  }
  AtvOptions opt;
  opt.max_bandwidth = 0.3;
  CHECK(local_linear_regression(data, State::Zero(), Input::Zero(), opt).degenerate);
  opt.max_bandwidth = 0.0;
  CHECK_FALSE(local_linear_regression(data, State::Zero(), Input::Zero(), opt).degenerate);
}

TEST_CASE("analytic fallback is exact at the reference points")
{
  const VehicleParams p;
  const TrackLayout track = build_track(TrackShape::l_shape, 51.0, 2.0);
  StateSequence xs;
  InputSequence us;
  State x = make_state(0.8, 0.0, 0.0, 0.0, 4.0, 0.1);
  for (int k = 0; k < 12; ++k)
  {
    const Input u(0.3, 0.2 * std::sin(0.5 * k));
    xs.push_back(x);
    us.push_back(u);
    x = sim_interval(x, u, track, p, 1e-3, 100);
  }
  const std::vector<Transition> none;
  const AtvModel m = fit_atv_model(none, xs, us, track, p, AtvOptions{});
  REQUIRE(m.horizon() == 12);
  for (int k = 0; k < 12; ++k)
  {
    CHECK_FALSE(m.learned[static_cast<std::size_t>(k)]);
    const State next = sim_interval(xs[static_cast<std::size_t>(k)], us[static_cast<std::size_t>(k)], track, p, 1e-3, 100);
    CHECK((m.step(k, xs[static_cast<std::size_t>(k)], us[static_cast<std::size_t>(k)]) - next).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(m.A[static_cast<std::size_t>(k)].allFinite());
  }
  CHECK_THROWS_AS(fit_atv_model(none, xs, InputSequence{}, track, p, AtvOptions{}), std::invalid_argument);
}
