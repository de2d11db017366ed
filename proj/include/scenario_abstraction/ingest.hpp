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

#ifndef SCENARIO_ABSTRACTION__INGEST_HPP_
#define SCENARIO_ABSTRACTION__INGEST_HPP_

#include "scenario_abstraction/detail/parallel.hpp"
#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/lane_frame.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace scenario_abstraction
{

enum class Role { ego, other };

inline const char * to_string(Role role) { return role == Role::ego ? "ego" : "other"; }

inline Role role_from_string(std::string_view s)
{
  if (s == "ego") {
    return Role::ego;
  }
  if (s == "other") {
    return Role::other;
  }
  throw ValidationError(fmt::format("unknown role '{}'", s));
}

struct Sample
{
  double time{0.0};
  double x{0.0};
  double y{0.0};
  /// NaN when the recording has no speed channel for this sample.
  double speed{std::numeric_limits<double>::quiet_NaN()};
};

struct VehicleRecording
{
  std::string vehicle_id;
  Role role{Role::other};
  std::vector<Sample> samples;
};

struct FleetRecording
{
  std::string recording_id;
  double sample_rate{0.0};
  std::vector<VehicleRecording> vehicles;
};

/// Per-vehicle signals in lane coordinates.
struct LaneTrack
{
  std::string vehicle_id;
  Role role{Role::other};
  std::vector<double> time;
  std::vector<double> s;
  std::vector<double> t;
  std::vector<int> lane_id;
  std::vector<double> speed;
  /// Arc length on the road's reference lane, comparable across lanes.
  std::vector<double> road_s;
  std::vector<CrossingEvent> crossings;

  std::size_t size() const { return time.size(); }
  bool empty() const { return time.empty(); }
  double start_time() const { return time.front(); }
  double end_time() const { return time.back(); }
};

enum class RecordingFormat { csv, json };

namespace detail
{

constexpr double timestep_tolerance = 1e-6;

inline double parse_double(std::string_view field, std::size_t line, const char * column)
{
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
    field.remove_prefix(1);
  }
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double value = 0.0;
  const auto * end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ValidationError(fmt::format("line {}: invalid {} value '{}'", line, column, field));
  }
  return value;
}

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

/// Fills missing speeds from central differences of the positions.
inline void fill_missing_speed(VehicleRecording & v)
{
  auto & smp = v.samples;
  const std::size_t n = smp.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isnan(smp[i].speed)) {
      continue;
    }
    if (n < 2) {
      smp[i].speed = 0.0;
      continue;
    }
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    const double dt = smp[hi].time - smp[lo].time;
    smp[i].speed = std::hypot(smp[hi].x - smp[lo].x, smp[hi].y - smp[lo].y) / dt;
  }
}

}  // namespace detail

/// Checks the shared uniform time base and speed signs; derives sample_rate when it is unset.
inline void validate_recording(FleetRecording & rec)
{
  if (rec.vehicles.empty()) {
    return;
  }
  const auto & base = rec.vehicles.front().samples;
  if (base.empty()) {
    throw ValidationError(
      fmt::format("vehicle '{}' has no samples", rec.vehicles.front().vehicle_id));
  }
  if (base.size() >= 2) {
    const double dt = (base.back().time - base.front().time) / static_cast<double>(base.size() - 1);
    if (!(dt > 0.0)) {
      throw ValidationError("sample times must be strictly increasing");
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double expected = base.front().time + static_cast<double>(i) * dt;
      if (std::abs(base[i].time - expected) > detail::timestep_tolerance) {
        throw ValidationError(fmt::format(
          "vehicle '{}': non-uniform timestep at sample {} (time {}, expected {})",
          rec.vehicles.front().vehicle_id, i, base[i].time, expected));
      }
    }
    const double rate = 1.0 / dt;
    if (rec.sample_rate > 0.0 && std::abs(rec.sample_rate - rate) > 1e-6 * rate) {
      throw ValidationError(
        fmt::format("declared sample_rate {} does not match timestep {}", rec.sample_rate, dt));
    }
    rec.sample_rate = rate;
  }
  if (!(rec.sample_rate > 0.0)) {
    throw ValidationError("sample_rate must be positive");
  }
  for (auto & v : rec.vehicles) {
    if (v.samples.size() != base.size()) {
      throw ValidationError(fmt::format(
        "vehicle '{}' has {} samples, expected {} (shared time base)", v.vehicle_id,
        v.samples.size(), base.size()));
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (std::abs(v.samples[i].time - base[i].time) > detail::timestep_tolerance) {
        throw ValidationError(fmt::format(
          "vehicle '{}': sample {} at time {} is off the shared time base", v.vehicle_id, i,
          v.samples[i].time));
      }
      if (v.samples[i].speed < 0.0) {
        throw ValidationError(fmt::format(
          "vehicle '{}': negative speed {} at sample {}", v.vehicle_id, v.samples[i].speed, i));
      }
    }
    detail::fill_missing_speed(v);
  }
}

/// CSV layout: header `time,vehicle_id,role,x,y,speed`, one row per (vehicle, sample).
/// An empty speed field means "no speed channel" and is derived from positions.
inline FleetRecording load_recording_csv(std::istream & in, std::string recording_id = "recording")
{
  FleetRecording rec;
  rec.recording_id = std::move(recording_id);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ValidationError("CSV recording is empty (missing header)");
  }
  ++line_no;
  const auto header = detail::split_csv(line);
  const std::vector<std::string_view> expected{"time", "vehicle_id", "role", "x", "y", "speed"};
  if (header != expected) {
    throw ValidationError(
      fmt::format("line 1: expected header 'time,vehicle_id,role,x,y,speed', got '{}'", line));
  }
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto fields = detail::split_csv(line);
    if (fields.size() != 6) {
      throw ValidationError(
        fmt::format("line {}: expected 6 fields, got {}", line_no, fields.size()));
    }
    Sample smp;
    smp.time = detail::parse_double(fields[0], line_no, "time");
    smp.x = detail::parse_double(fields[3], line_no, "x");
    smp.y = detail::parse_double(fields[4], line_no, "y");
    if (!fields[5].empty()) {
      smp.speed = detail::parse_double(fields[5], line_no, "speed");
      if (smp.speed < 0.0) {
        throw ValidationError(fmt::format("line {}: negative speed {}", line_no, smp.speed));
      }
    }
    const std::string id(fields[1]);
    if (id.empty()) {
      throw ValidationError(fmt::format("line {}: empty vehicle_id", line_no));
    }
    Role role;
    try {
      role = role_from_string(fields[2]);
    } catch (const ValidationError & e) {
      throw ValidationError(fmt::format("line {}: {}", line_no, e.what()));
    }
    auto [it, inserted] = index.try_emplace(id, rec.vehicles.size());
    if (inserted) {
      rec.vehicles.push_back({id, role, {}});
    }
    auto & vehicle = rec.vehicles[it->second];
    if (vehicle.role != role) {
      throw ValidationError(
        fmt::format("line {}: vehicle '{}' changes role", line_no, vehicle.vehicle_id));
    }
    if (!vehicle.samples.empty() && !(smp.time > vehicle.samples.back().time)) {
      throw ValidationError(fmt::format(
        "line {}: time {} is not after the previous sample of '{}'", line_no, smp.time, id));
    }
    vehicle.samples.push_back(smp);
  }
  validate_recording(rec);
  return rec;
}

inline FleetRecording recording_from_json(const nlohmann::json & j)
{
  FleetRecording rec;
  try {
    rec.recording_id = j.value("recording_id", std::string("recording"));
    rec.sample_rate = j.value("sample_rate", 0.0);
    for (const auto & jv : j.at("vehicles")) {
      VehicleRecording v;
      v.vehicle_id = jv.at("vehicle_id").get<std::string>();
      v.role = role_from_string(jv.value("role", std::string("other")));
      if (!jv.contains("samples")) {
        throw ValidationError(fmt::format("vehicle '{}' is missing 'samples'", v.vehicle_id));
      }
      for (const auto & js : jv.at("samples")) {
        Sample smp;
        smp.time = js.at("time").get<double>();
        smp.x = js.at("x").get<double>();
        smp.y = js.at("y").get<double>();
        if (js.contains("speed") && !js.at("speed").is_null()) {
          smp.speed = js.at("speed").get<double>();
        }
        v.samples.push_back(smp);
      }
      rec.vehicles.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception & e) {
    throw ValidationError(fmt::format("recording JSON: {}", e.what()));
  }
  validate_recording(rec);
  return rec;
}

inline FleetRecording load_recording(
  std::istream & in, RecordingFormat format, std::string recording_id = "recording")
{
  if (format == RecordingFormat::csv) {
    return load_recording_csv(in, std::move(recording_id));
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception & e) {
    throw ValidationError(fmt::format("recording JSON: {}", e.what()));
  }
  return recording_from_json(j);
}

/// Rows are grouped by vehicle in recording order; numbers use shortest round-trip form.
inline void write_recording_csv(std::ostream & out, const FleetRecording & rec)
{
  out << "time,vehicle_id,role,x,y,speed\n";
  for (const auto & v : rec.vehicles) {
    for (const auto & smp : v.samples) {
      out << fmt::format(
        "{},{},{},{},{},{}\n", smp.time, v.vehicle_id, to_string(v.role), smp.x, smp.y,
        std::isnan(smp.speed) ? std::string() : fmt::format("{}", smp.speed));
    }
  }
}

inline nlohmann::json to_json(const FleetRecording & rec)
{
  nlohmann::json j;
  j["recording_id"] = rec.recording_id;
  j["sample_rate"] = rec.sample_rate;
  j["vehicles"] = nlohmann::json::array();
  for (const auto & v : rec.vehicles) {
    nlohmann::json jv;
    jv["vehicle_id"] = v.vehicle_id;
    jv["role"] = to_string(v.role);
    jv["samples"] = nlohmann::json::array();
    for (const auto & smp : v.samples) {
      jv["samples"].push_back({{"time", smp.time}, {"x", smp.x}, {"y", smp.y}, {"speed", smp.speed}});
    }
    j["vehicles"].push_back(std::move(jv));
  }
  return j;
}

inline LaneTrack to_lane_track(const RoadModel & road, const VehicleRecording & v)
{
  LaneTrack track;
  track.vehicle_id = v.vehicle_id;
  track.role = v.role;
  std::vector<Point2> positions;
  positions.reserve(v.samples.size());
  for (const auto & smp : v.samples) {
    track.time.push_back(smp.time);
    track.speed.push_back(smp.speed);
    positions.push_back({smp.x, smp.y});
  }
  LaneAssignment assignment;
  try {
    assignment = assign_lanes(road, positions, track.time);
  } catch (const OutOfRoadError & e) {
    throw OutOfRoadError(fmt::format("vehicle '{}': {}", v.vehicle_id, e.what()), e.sample_index());
  } catch (const ValidationError & e) {
    throw ValidationError(fmt::format("vehicle '{}': {}", v.vehicle_id, e.what()));
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    track.s.push_back(assignment.poses[i].s);
    track.t.push_back(assignment.poses[i].t);
    track.lane_id.push_back(assignment.poses[i].lane_id);
    track.road_s.push_back(road.road_s(positions[i]));
  }
  track.crossings = std::move(assignment.crossings);
  return track;
}

/// One LaneTrack per vehicle, in recording order.
inline std::vector<LaneTrack> to_lane_tracks(
  const RoadModel & road, const FleetRecording & rec, std::size_t workers = 1)
{
  return detail::parallel_map(
    rec.vehicles, [&road](const VehicleRecording & v) { return to_lane_track(road, v); }, workers);
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__INGEST_HPP_
