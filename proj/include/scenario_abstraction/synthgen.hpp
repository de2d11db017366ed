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

#ifndef SCENARIO_ABSTRACTION__SYNTHGEN_HPP_
#define SCENARIO_ABSTRACTION__SYNTHGEN_HPP_

#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/ingest.hpp"
#include "scenario_abstraction/lane_frame.hpp"
#include "scenario_abstraction/segmentation.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace scenario_abstraction
{

enum class PrimitiveType { hold_speed, accelerate, decelerate, change_lane };

inline const char * to_string(PrimitiveType p)
{
  switch (p) {
    case PrimitiveType::hold_speed:
      return "hold_speed";
    case PrimitiveType::accelerate:
      return "accelerate";
    case PrimitiveType::decelerate:
      return "decelerate";
    case PrimitiveType::change_lane:
      return "change_lane";
  }
  return "unknown";
}

struct Primitive
{
  PrimitiveType type{PrimitiveType::hold_speed};
  double duration{0.0};
  /// accelerate / decelerate only.
  double target_speed{0.0};
  /// change_lane only.
  Side direction{Side::left};

  static Primitive hold(double duration) { return {PrimitiveType::hold_speed, duration, 0.0, Side::left}; }
  static Primitive accelerate(double to, double duration)
  {
    return {PrimitiveType::accelerate, duration, to, Side::left};
  }
  static Primitive decelerate(double to, double duration)
  {
    return {PrimitiveType::decelerate, duration, to, Side::left};
  }
  static Primitive change_lane(Side direction, double duration)
  {
    return {PrimitiveType::change_lane, duration, 0.0, direction};
  }
};

struct VehicleScript
{
  std::string vehicle_id;
  Role role{Role::other};
  int lane{1};
  double s{0.0};
  double speed{0.0};
  std::vector<Primitive> primitives;
};

struct DriveScript
{
  std::string recording_id{"synthetic"};
  RoadModel road{straight_highway(2, 3.5, 3000.0)};
  std::vector<VehicleScript> vehicles;
  double sample_rate{10.0};
  /// Recording length; zero means the longest primitive sequence. Vehicles hold their
  /// speed after their last primitive.
  double duration{0.0};
  double noise_sigma_pos{0.0};
  double noise_sigma_speed{0.0};
  std::uint64_t rng_seed{0};
};

struct GeneratedDrive
{
  FleetRecording recording;
  /// Per vehicle, in script order.
  std::vector<ActionTimeline> ground_truth;
};

namespace detail
{

/// One primitive resolved to absolute times and boundary states.
struct Phase
{
  PrimitiveType type;
  double t0;
  double t1;
  double v0;
  double v1;
  double s0;
  double y0;
  double y1;
  int lane_before;
  int lane_after;
};

inline double smooth_step(double u)
{
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

inline std::vector<Phase> resolve_phases(const DriveScript & script, const VehicleScript & v, double end)
{
  std::vector<Phase> phases;
  double time = 0.0;
  double speed = v.speed;
  double s = v.s;
  double y = 0.0;
  int lane = v.lane;
  auto push = [&](PrimitiveType type, double duration, double v1, double y1, int lane_after) {
    phases.push_back({type, time, time + duration, speed, v1, s, y, y1, lane, lane_after});
    s += 0.5 * (speed + v1) * duration;
    time += duration;
    speed = v1;
    y = y1;
    lane = lane_after;
  };
  for (const auto & p : v.primitives) {
    if (!(p.duration > 0.0)) {
      throw ValidationError(
        fmt::format("vehicle '{}': primitive {} needs a positive duration", v.vehicle_id, to_string(p.type)));
    }
    switch (p.type) {
      case PrimitiveType::hold_speed:
        push(p.type, p.duration, speed, y, lane);
        break;
      case PrimitiveType::accelerate:
      case PrimitiveType::decelerate:
        if (!(p.target_speed >= 0.0)) {
          throw ValidationError(
            fmt::format("vehicle '{}': target speed must be non-negative", v.vehicle_id));
        }
        push(p.type, p.duration, p.target_speed, y, lane);
        break;
      case PrimitiveType::change_lane: {
        const auto & spec = script.road.lane(lane).spec();
        const auto target = p.direction == Side::left ? spec.left_neighbor : spec.right_neighbor;
        if (!target) {
          throw ValidationError(fmt::format(
            "vehicle '{}': change_lane({}) at t={} would exit the road (lane {} has no neighbor)",
            v.vehicle_id, to_string(p.direction), time, lane));
        }
        const double offset = 0.5 * (spec.width + script.road.lane(*target).width());
        push(p.type, p.duration, speed, y + (p.direction == Side::left ? offset : -offset), *target);
        break;
      }
    }
  }
  if (time < end) {
    push(PrimitiveType::hold_speed, end - time, speed, y, lane);
  }
  return phases;
}

struct Kinematics
{
  double s;
  double y;
  double speed;
  int lane;
};

inline Kinematics evaluate(const std::vector<Phase> & phases, double time)
{
  auto it = std::upper_bound(
    phases.begin(), phases.end(), time, [](double value, const Phase & p) { return value < p.t0; });
  const Phase & ph = it == phases.begin() ? phases.front() : *(it - 1);
  const double dur = ph.t1 - ph.t0;
  const double u = std::clamp(time - ph.t0, 0.0, dur);
  const double accel = (ph.v1 - ph.v0) / dur;
  Kinematics k;
  k.speed = ph.v0 + accel * u;
  k.s = ph.s0 + ph.v0 * u + 0.5 * accel * u * u;
  const double w = smooth_step(u / dur);
  k.y = ph.y0 + (ph.y1 - ph.y0) * w;
  k.lane = ph.type == PrimitiveType::change_lane && u >= 0.5 * dur ? ph.lane_after : ph.lane_before;
  return k;
}

inline ActionKind longitudinal_kind(const Phase & ph, double standstill_speed)
{
  if (ph.v1 > ph.v0) {
    return ActionKind::accelerate;
  }
  if (ph.v1 < ph.v0) {
    return ActionKind::decelerate;
  }
  return ph.v0 < standstill_speed ? ActionKind::standstill : ActionKind::keep_velocity;
}

inline void append_merged(std::vector<Action> & actions, Action a)
{
  if (!actions.empty() && actions.back().kind == a.kind && !is_lane_change(a.kind)) {
    actions.back().t_end = a.t_end;
    actions.back().lane_after = a.lane_after;
    return;
  }
  actions.push_back(std::move(a));
}

inline ActionTimeline ground_truth_timeline(
  const std::string & vehicle_id, const std::vector<Phase> & phases, double t0, double t1)
{
  ActionTimeline tl;
  tl.vehicle_id = vehicle_id;
  tl.t0 = t0;
  tl.t1 = t1;
  const SegmentationConfig defaults;
  for (const auto & ph : phases) {
    const double a0 = std::max(ph.t0, t0);
    const double a1 = std::min(ph.t1, t1);
    if (!(a1 > a0)) {
      continue;
    }
    Action lat;
    lat.vehicle_id = vehicle_id;
    lat.channel = Channel::lateral;
    lat.t_start = a0;
    lat.t_end = a1;
    lat.lane_before = ph.lane_before;
    lat.lane_after = ph.lane_after;
    if (ph.type == PrimitiveType::change_lane) {
      lat.kind = ph.y1 > ph.y0 ? ActionKind::lane_change_left : ActionKind::lane_change_right;
      lat.crossing_time = 0.5 * (ph.t0 + ph.t1);
    } else {
      lat.kind = ActionKind::keep_lane;
    }
    append_merged(tl.lateral, std::move(lat));

    Action lon;
    lon.vehicle_id = vehicle_id;
    lon.channel = Channel::longitudinal;
    lon.kind = longitudinal_kind(ph, defaults.standstill_speed);
    lon.t_start = a0;
    lon.t_end = a1;
    lon.lane_before = ph.lane_before;
    lon.lane_after = ph.lane_after;
    append_merged(tl.longitudinal, std::move(lon));
  }
  return tl;
}

}  // namespace detail

/// Samples the scripted drive. Lane changes follow a smooth-step lateral profile that crosses
/// the lane marking at the primitive midpoint; speeds change linearly.
inline GeneratedDrive generate(const DriveScript & script)
{
  if (!(script.sample_rate > 0.0)) {
    throw ValidationError("synth: sample_rate must be positive");
  }
  double length = script.duration;
  if (length <= 0.0) {
    for (const auto & v : script.vehicles) {
      double total = 0.0;
      for (const auto & p : v.primitives) {
        total += p.duration;
      }
      length = std::max(length, total);
    }
  }
  if (!(length > 0.0)) {
    throw ValidationError("synth: script has zero duration");
  }
  const auto n_samples = static_cast<std::size_t>(std::llround(length * script.sample_rate));
  if (n_samples < 2) {
    throw ValidationError("synth: script shorter than two samples");
  }

  GeneratedDrive out;
  out.recording.recording_id = script.recording_id;
  out.recording.sample_rate = script.sample_rate;
  std::mt19937_64 rng(script.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double t_last = static_cast<double>(n_samples - 1) / script.sample_rate;

  for (const auto & v : script.vehicles) {
    if (!script.road.has_lane(v.lane)) {
      throw ValidationError(fmt::format("vehicle '{}': unknown start lane {}", v.vehicle_id, v.lane));
    }
    if (v.speed < 0.0) {
      throw ValidationError(fmt::format("vehicle '{}': negative start speed", v.vehicle_id));
    }
    const auto phases = detail::resolve_phases(script, v, length);
    const auto & frame = script.road.lane(v.lane);
    VehicleRecording rec{v.vehicle_id, v.role, {}};
    rec.samples.reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
      const double time = static_cast<double>(k) / script.sample_rate;
      const auto kin = detail::evaluate(phases, time);
      if (kin.s < 0.0 || kin.s > frame.length()) {
        throw ValidationError(fmt::format(
          "vehicle '{}' leaves the road at t={} (s={})", v.vehicle_id, time, kin.s));
      }
      const auto base = frame.point_at(kin.s);
      const auto normal = frame.normal_at(kin.s);
      Sample smp{time, base.x + kin.y * normal.x, base.y + kin.y * normal.y, kin.speed};
      if (script.noise_sigma_pos > 0.0) {
        smp.x += script.noise_sigma_pos * gauss(rng);
        smp.y += script.noise_sigma_pos * gauss(rng);
      }
      if (script.noise_sigma_speed > 0.0) {
        smp.speed = std::max(0.0, smp.speed + script.noise_sigma_speed * gauss(rng));
      }
      rec.samples.push_back(smp);
    }
    out.recording.vehicles.push_back(std::move(rec));
    out.ground_truth.push_back(detail::ground_truth_timeline(v.vehicle_id, phases, 0.0, t_last));
  }
  return out;
}

/// Three-vehicle cut-in drive: ego and a lead vehicle cruise in the right lane; a faster
/// vehicle overtakes the ego on the left, cuts in, brakes, accelerates again, returns to the
/// left lane and overtakes the lead vehicle. `with_deceleration = false` keeps the cut-in
/// vehicle's speed after the cut-in instead.
inline DriveScript fig3_script(bool with_deceleration = true)
{
  DriveScript script;
  script.recording_id = with_deceleration ? "fig3" : "fig3_no_decel";
  script.duration = 60.0;
  script.sample_rate = 10.0;
  script.vehicles.push_back({"ego", Role::ego, 1, 100.0, 30.0, {Primitive::hold(60.0)}});
  script.vehicles.push_back({"green", Role::other, 1, 160.0, 30.0, {Primitive::hold(60.0)}});
  VehicleScript brown{"brown", Role::other, 2, 60.0, 36.0, {}};
  brown.primitives.push_back(Primitive::hold(8.0));
  brown.primitives.push_back(Primitive::change_lane(Side::right, 4.0));
  if (with_deceleration) {
    brown.primitives.push_back(Primitive::decelerate(28.0, 4.0));
  } else {
    brown.primitives.push_back(Primitive::hold(4.0));
  }
  brown.primitives.push_back(Primitive::hold(10.0));
  if (with_deceleration) {
    brown.primitives.push_back(Primitive::accelerate(36.0, 4.0));
  } else {
    brown.primitives.push_back(Primitive::hold(4.0));
  }
  brown.primitives.push_back(Primitive::change_lane(Side::left, 4.0));
  brown.primitives.push_back(Primitive::hold(26.0));
  script.vehicles.push_back(std::move(brown));
  return script;
}

inline DriveScript script_from_json(const nlohmann::json & j)
{
  DriveScript script;
  try {
    script.recording_id = j.value("recording_id", std::string("synthetic"));
    if (j.contains("road")) {
      script.road = road_from_json(j.at("road"));
    }
    script.sample_rate = j.value("sample_rate", 10.0);
    script.duration = j.value("duration", 0.0);
    script.noise_sigma_pos = j.value("noise_sigma_pos", 0.0);
    script.noise_sigma_speed = j.value("noise_sigma_speed", 0.0);
    script.rng_seed = j.value("rng_seed", std::uint64_t{0});
    for (const auto & jv : j.at("vehicles")) {
      VehicleScript v;
      v.vehicle_id = jv.at("vehicle_id").get<std::string>();
      v.role = role_from_string(jv.value("role", std::string("other")));
      v.lane = jv.at("lane").get<int>();
      v.s = jv.at("s").get<double>();
      v.speed = jv.at("speed").get<double>();
      for (const auto & jp : jv.value("primitives", nlohmann::json::array())) {
        const auto type = jp.at("type").get<std::string>();
        const double duration = jp.at("duration").get<double>();
        if (type == "hold_speed") {
          v.primitives.push_back(Primitive::hold(duration));
        } else if (type == "accelerate") {
          v.primitives.push_back(Primitive::accelerate(jp.at("to").get<double>(), duration));
        } else if (type == "decelerate") {
          v.primitives.push_back(Primitive::decelerate(jp.at("to").get<double>(), duration));
        } else if (type == "change_lane") {
          const auto dir = jp.at("direction").get<std::string>();
          if (dir != "left" && dir != "right") {
            throw ValidationError(fmt::format("change_lane direction must be left|right, got '{}'", dir));
          }
          v.primitives.push_back(Primitive::change_lane(dir == "left" ? Side::left : Side::right, duration));
        } else {
          throw ValidationError(fmt::format("unknown primitive type '{}'", type));
        }
      }
      script.vehicles.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception & e) {
    throw ValidationError(fmt::format("drive script JSON: {}", e.what()));
  }
  return script;
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__SYNTHGEN_HPP_
