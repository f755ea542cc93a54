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

#ifndef RACER_LAP_MEMORY_HPP_
#define RACER_LAP_MEMORY_HPP_

#include "racer/types.hpp"

#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace racer
{

/// One recorded closed-loop sample. cost_to_go counts control steps to the
/// finish line of its lap and is only meaningful once the lap is finalized.
struct HistoryPoint
{
  State state = State::Zero();
  Input input = Input::Zero();
  int lap = 0;
  int step = 0;
  int cost_to_go = 0;
};

/// A query hit. The center-line coordinate comparable to the query state is
/// point.state(kS) + s_offset (the offset is a multiple of the track length).
struct Neighbor
{
  HistoryPoint point;
  double distance = 0.0;
  double s_offset = 0.0;
};

struct Transition
{
  State state;
  Input input;
  State next;
};

class InsufficientHistory : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class LapMemoryError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

/**
 * @brief Per-lap closed-loop history with cost-to-go and weighted KNN lookup.
 *
 * Single writer: record_step/finalize_lap are called by the episode loop
 * between control steps. Const members are safe to call concurrently.
 */
class LapMemory
{
public:
  explicit LapMemory(double track_length);

  double track_length() const { return track_length_; }

  /// Opens a new in-progress lap and returns its index.
  int begin_lap();
  bool lap_in_progress() const { return in_progress_; }
  int in_progress_index() const { return static_cast<int>(laps_.size()); }
  std::size_t buffer_size() const { return buffer_.size(); }
  const std::vector<HistoryPoint> &buffer() const { return buffer_; }

  void record_step(const State &x, const Input &u, int lap_index, int step_index);

  /// Closes the in-progress lap whose last recorded point (step T_lap) is past
  /// the finish line and assigns cost_to_go = T_lap - step to every point.
  void finalize_lap(int T_lap);
  /// Drops the in-progress buffer without storing it.
  void abandon_lap();

  int finalized_laps() const { return static_cast<int>(laps_.size()); }
  const std::vector<HistoryPoint> &lap(int index) const { return laps_.at(static_cast<std::size_t>(index)); }
  /// Number of control steps T of a finalized lap.
  int lap_steps(int index) const { return static_cast<int>(lap(index).size()) - 1; }

  /**
   * K distinct points of the last lap_window finalized laps minimizing
   * sum_i Dz_i (z_i - x_i)^2, where the s difference is taken modulo the track
   * length so samples on either side of the finish line are neighbors.
   * Exact duplicate states keep the copy with the smaller cost-to-go.
   * The result is ordered by ascending cost_to_go, ties by smaller distance.
   */
  std::vector<Neighbor> knn_query(const State &x, int K, const StateWeights &Dz, int lap_window) const;

  struct Successor
  {
    State state;
    Input input;
    /// T_lap - (step + steps); negative once the successor lies past the finish.
    int cost_to_go = 0;
    int lap = 0;
    int step = 0;
    bool clamped = false;
  };

  /// The sample `steps` control steps after (lap, step). Past the end of the
  /// lap it continues into the opening of the following lap (finalized or in
  /// progress) with s shifted by +track_length; clamps to the last available sample.
  Successor successor(int lap, int step, int steps) const;

  /// One-step transitions (x_k, u_k, x_{k+1}) of the last lap_window finalized laps.
  std::vector<Transition> transitions(int lap_window) const;

  /// CSV with header lap,step,cost_to_go,vx,vy,wz,epsi,s,ey,a,delta.
  void save_csv(std::ostream &out) const;
  static LapMemory load_csv(std::istream &in, double track_length);

private:
  double track_length_;
  std::vector<std::vector<HistoryPoint>> laps_;
  std::vector<HistoryPoint> buffer_;
  bool in_progress_ = false;
};

} // namespace racer

#endif // RACER_LAP_MEMORY_HPP_
