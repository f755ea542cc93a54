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

#include "racer/lap_memory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace racer
{

LapMemory::LapMemory(double track_length) : track_length_(track_length)
{
  if (!(track_length > 0.0))
  {
    throw std::invalid_argument("LapMemory: track length must be positive");
  }
}

int LapMemory::begin_lap()
{
  if (in_progress_)
  {
    throw LapMemoryError("begin_lap: a lap is already in progress");
  }
  in_progress_ = true;
  buffer_.clear();
  return in_progress_index();
}

void LapMemory::record_step(const State &x, const Input &u, int lap_index, int step_index)
{
  if (!in_progress_)
  {
    throw LapMemoryError("record_step: no lap in progress");
  }
  if (lap_index != in_progress_index() || step_index != static_cast<int>(buffer_.size()))
  {
    throw LapMemoryError("record_step: lap/step index out of sequence");
  }
  HistoryPoint p;
  p.state = x;
  p.input = u;
  p.lap = lap_index;
  p.step = step_index;
  buffer_.push_back(p);
}

void LapMemory::finalize_lap(int T_lap)
{
  if (!in_progress_)
  {
    throw LapMemoryError("finalize_lap: no lap in progress");
  }
  if (T_lap < 1 || static_cast<int>(buffer_.size()) != T_lap + 1)
  {
    throw LapMemoryError("finalize_lap: T_lap does not match the recorded steps");
  }
  if (buffer_.back().state(kS) < track_length_)
  {
    throw LapMemoryError("finalize_lap: the lap has not crossed the finish line");
  }
  for (HistoryPoint &p : buffer_)
  {
    p.cost_to_go = T_lap - p.step;
  }
  laps_.push_back(std::move(buffer_));
  buffer_.clear();
  in_progress_ = false;
}

void LapMemory::abandon_lap()
{
  buffer_.clear();
  in_progress_ = false;
}

std::vector<Neighbor> LapMemory::knn_query(const State &x, int K, const StateWeights &Dz, int lap_window) const
{
  if (K < 1 || lap_window < 1)
  {
    throw std::invalid_argument("knn_query: K and lap_window must be positive");
  }
  const int last = finalized_laps();
  const int first = std::max(0, last - lap_window);

  struct Entry
  {
    const HistoryPoint *point;
    double distance;
    double s_offset;
  };
  std::vector<Entry> entries;
  for (int l = first; l < last; ++l)
  {
    for (const HistoryPoint &p : laps_[static_cast<std::size_t>(l)])
    {
      const double ds = std::remainder(p.state(kS) - x(kS), track_length_);
      double d = 0.0;
      for (int i = 0; i < kStateDim; ++i)
      {
        const double diff = i == kS ? ds : p.state(i) - x(i);
        d += Dz(i) * diff * diff;
      }
      entries.push_back({&p, d, x(kS) + ds - p.state(kS)});
    }
  }

  std::sort(entries.begin(), entries.end(), [](const Entry &a, const Entry &b) {
    if (a.distance != b.distance)
      return a.distance < b.distance;
    if (a.point->cost_to_go != b.point->cost_to_go)
      return a.point->cost_to_go < b.point->cost_to_go;
    if (a.point->lap != b.point->lap)
      return a.point->lap < b.point->lap;
    return a.point->step < b.point->step;
  });

  std::vector<Neighbor> out;
  out.reserve(static_cast<std::size_t>(K));
  for (const Entry &e : entries)
  {
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Neighbor &n) {
      return n.distance == e.distance && n.point.state == e.point->state;
    });
    if (duplicate)
    {
      continue;
    }
    out.push_back({*e.point, e.distance, e.s_offset});
    if (static_cast<int>(out.size()) == K)
    {
      break;
    }
  }
  if (static_cast<int>(out.size()) < K)
  {
    throw InsufficientHistory("knn_query: fewer than K distinct points in the lap window");
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Neighbor &a, const Neighbor &b) { return a.point.cost_to_go < b.point.cost_to_go; });
  return out;
}

LapMemory::Successor LapMemory::successor(int lap_index, int step, int steps) const
{
  const std::vector<HistoryPoint> &pts = lap(lap_index);
  const int T = static_cast<int>(pts.size()) - 1;
  const int target = step + steps;

  Successor out;
  out.lap = lap_index;
  if (target <= T)
  {
    const HistoryPoint &p = pts[static_cast<std::size_t>(target)];
    out.state = p.state;
    out.input = p.input;
    out.step = target;
    out.cost_to_go = T - target;
    return out;
  }

  // Opening of the following lap; its step 0 coincides with this lap's finish.
  const std::vector<HistoryPoint> *next = nullptr;
  if (lap_index + 1 < finalized_laps())
  {
    next = &laps_[static_cast<std::size_t>(lap_index + 1)];
  }
  else if (lap_index + 1 == in_progress_index() && in_progress_)
  {
    next = &buffer_;
  }
  const int wanted = target - T;
  if (next == nullptr || next->size() < 2)
  {
    const HistoryPoint &p = pts.back();
    out.state = p.state;
    out.input = p.input;
    out.step = T;
    out.cost_to_go = 0;
    out.clamped = true;
    return out;
  }
  const int available = static_cast<int>(next->size()) - 1;
  const int idx = std::min(wanted, available);
  const HistoryPoint &p = (*next)[static_cast<std::size_t>(idx)];
  out.state = p.state;
  out.state(kS) += track_length_;
  out.input = p.input;
  out.step = T + idx;
  out.cost_to_go = -idx;
  out.clamped = idx < wanted;
  return out;
}

std::vector<Transition> LapMemory::transitions(int lap_window) const
{
  std::vector<Transition> out;
  const int last = finalized_laps();
  const int first = std::max(0, last - std::max(lap_window, 1));
  for (int l = first; l < last; ++l)
  {
    const auto &pts = laps_[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    {
      out.push_back({pts[i].state, pts[i].input, pts[i + 1].state});
    }
  }
  return out;
}

void LapMemory::save_csv(std::ostream &out) const
{
  out << "lap,step,cost_to_go,vx,vy,wz,epsi,s,ey,a,delta\n";
  char buf[64];
  for (const auto &pts : laps_)
  {
    for (const HistoryPoint &p : pts)
    {
      out << p.lap << ',' << p.step << ',' << p.cost_to_go;
      for (int i = 0; i < kStateDim; ++i)
      {
        std::snprintf(buf, sizeof(buf), ",%.17g", p.state(i));
        out << buf;
      }
      for (int i = 0; i < kInputDim; ++i)
      {
        std::snprintf(buf, sizeof(buf), ",%.17g", p.input(i));
        out << buf;
      }
      out << '\n';
    }
  }
}

LapMemory LapMemory::load_csv(std::istream &in, double track_length)
{
  LapMemory memory(track_length);
  std::string line;
  if (!std::getline(in, line))
  {
    return memory;
  }
  int current = -1;
  while (std::getline(in, line))
  {
    if (line.empty())
      continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(row, cell, ','))
    {
      values.push_back(std::stod(cell));
    }
    if (values.size() != 11)
    {
      throw std::runtime_error("LapMemory::load_csv: malformed row");
    }
    const int lap = static_cast<int>(values[0]);
    if (lap != current)
    {
      if (memory.lap_in_progress())
      {
        memory.finalize_lap(static_cast<int>(memory.buffer_size()) - 1);
      }
      memory.begin_lap();
      current = lap;
    }
    State x;
    for (int i = 0; i < kStateDim; ++i)
      x(i) = values[static_cast<std::size_t>(3 + i)];
    const Input u(values[9], values[10]);
    memory.record_step(x, u, memory.in_progress_index(), static_cast<int>(values[1]));
  }
  if (memory.lap_in_progress())
  {
    memory.finalize_lap(static_cast<int>(memory.buffer_size()) - 1);
  }
  return memory;
}

} // namespace racer
