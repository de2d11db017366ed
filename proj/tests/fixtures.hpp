// Copyright 2026 The scenario_abstraction Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCENARIO_ABSTRACTION__TESTS__FIXTURES_HPP_
#define SCENARIO_ABSTRACTION__TESTS__FIXTURES_HPP_

#include "scenario_abstraction/scenario_abstraction.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace scenario_abstraction::fixtures
{

/// One vehicle sampled from closed-form x(tau), y(tau), speed(tau).
inline VehicleRecording sampled_vehicle(
  const std::string & id, Role role, double duration, double rate, const std::function<double(double)> & x,
  const std::function<double(double)> & y, const std::function<double(double)> & speed)
{
  VehicleRecording v{id, role, {}};
  const auto n = static_cast<std::size_t>(std::llround(duration * rate)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = static_cast<double>(k) / rate;
    v.samples.push_back({tau, x(tau), y(tau), speed(tau)});
  }
  return v;
}

inline FleetRecording fleet(std::vector<VehicleRecording> vehicles, double rate = 10.0)
{
  FleetRecording rec{"fixture", rate, std::move(vehicles)};
  validate_recording(rec);
  return rec;
}

inline LaneTrack single_track(const RoadModel & road, const VehicleRecording & v, double rate = 10.0)
{
  return to_lane_tracks(road, fleet({v}, rate)).front();
}

/// A randomized drive: ego cruising in lane 1 plus `others` vehicles with random primitive
/// sequences that stay on a three-lane road and end at least 2 s before the drive does.
inline DriveScript random_script(std::mt19937_64 & rng, int others = 2, double duration = 40.0)
{
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  DriveScript script;
  script.recording_id = "random";
  script.road = straight_highway(3, 3.5, 4000.0);
  script.duration = duration;
  script.vehicles.push_back({"ego", Role::ego, 1, 200.0, 20.0 + 10.0 * uni(rng), {Primitive::hold(duration)}});
  for (int v = 0; v < others; ++v) {
    VehicleScript vs;
    vs.vehicle_id = "v" + std::to_string(v);
    vs.lane = 1 + static_cast<int>(uni(rng) * 3.0) % 3;
    vs.s = 100.0 + 200.0 * uni(rng);
    vs.speed = 15.0 + 15.0 * uni(rng);
    int lane = vs.lane;
    double speed = vs.speed;
    double t = 0.0;
    while (t < duration - 8.0) {
      const double pick = uni(rng);
      const double dur = 2.0 + 4.0 * uni(rng);
      if (pick < 0.3) {
        vs.primitives.push_back(Primitive::hold(dur));
      } else if (pick < 0.7) {
        // 0.5 to 1.5 m/s^2, well clear of the default detection threshold.
        const double delta = (0.5 + uni(rng)) * dur;
        if (pick < 0.5 && speed + delta <= 40.0) {
          speed += delta;
          vs.primitives.push_back(Primitive::accelerate(speed, dur));
        } else if (pick >= 0.5 && speed - delta >= 2.0) {
          speed -= delta;
          vs.primitives.push_back(Primitive::decelerate(speed, dur));
        } else {
          vs.primitives.push_back(Primitive::hold(dur));
        }
      } else {
        const bool left = lane == 1 || (lane == 2 && uni(rng) < 0.5);
        lane += left ? 1 : -1;
        vs.primitives.push_back(Primitive::change_lane(left ? Side::left : Side::right, 3.0 + 3.0 * uni(rng)));
      }
      t += vs.primitives.back().duration;
    }
    script.vehicles.push_back(vs);
  }
  return script;
}

}  // namespace scenario_abstraction::fixtures

#endif  // SCENARIO_ABSTRACTION__TESTS__FIXTURES_HPP_
