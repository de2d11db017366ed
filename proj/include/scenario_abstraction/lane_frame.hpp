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

#ifndef SCENARIO_ABSTRACTION__LANE_FRAME_HPP_
#define SCENARIO_ABSTRACTION__LANE_FRAME_HPP_

#include "scenario_abstraction/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scenario_abstraction
{

struct Point2
{
  double x{0.0};
  double y{0.0};
};

enum class Side { left, right };

inline const char * to_string(Side side) { return side == Side::left ? "left" : "right"; }

struct LaneSpec
{
  int lane_id{0};
  std::vector<Point2> center_line;
  double width{0.0};
  std::optional<int> successor;
  std::optional<int> left_neighbor;
  std::optional<int> right_neighbor;
};

/// Lane coordinates: s along the center line from the lane start, t positive to the left.
struct LanePose
{
  double s{0.0};
  double t{0.0};
  int lane_id{0};
};

struct CrossingEvent
{
  double time{0.0};
  int from_lane{0};
  int to_lane{0};
  Side direction{Side::left};

  bool operator==(const CrossingEvent &) const = default;
};

/// Foot-point projection of a point onto one center line.
struct Projection
{
  double s{0.0};
  double t{0.0};
  /// Longitudinal distance past the first or last vertex; zero when the foot point is interior.
  double overshoot{0.0};
};

class Lane
{
public:
  explicit Lane(LaneSpec spec) : spec_(std::move(spec))
  {
    if (spec_.center_line.size() < 2) {
      throw ValidationError(
        fmt::format("lane {}: center_line needs at least 2 points", spec_.lane_id));
    }
    if (!(spec_.width > 0.0) || !std::isfinite(spec_.width)) {
      throw ValidationError(
        fmt::format("lane {}: width must be positive, got {}", spec_.lane_id, spec_.width));
    }
    cumulative_.reserve(spec_.center_line.size());
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < spec_.center_line.size(); ++i) {
      const auto & a = spec_.center_line[i - 1];
      const auto & b = spec_.center_line[i];
      cumulative_.push_back(cumulative_.back() + std::hypot(b.x - a.x, b.y - a.y));
    }
    if (!(length() > 0.0)) {
      throw ValidationError(fmt::format("lane {}: center_line has zero length", spec_.lane_id));
    }
  }

  const LaneSpec & spec() const { return spec_; }
  int id() const { return spec_.lane_id; }
  double width() const { return spec_.width; }
  double length() const { return cumulative_.back(); }

  Point2 point_at(double s) const
  {
    const auto [i, u] = locate(s);
    const auto & a = spec_.center_line[i];
    const auto & b = spec_.center_line[i + 1];
    return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
  }

  /// Unit normal pointing to the left of the driving direction.
  Point2 normal_at(double s) const
  {
    const auto [i, u] = locate(s);
    (void)u;
    const auto & a = spec_.center_line[i];
    const auto & b = spec_.center_line[i + 1];
    const double len = cumulative_[i + 1] - cumulative_[i];
    return {-(b.y - a.y) / len, (b.x - a.x) / len};
  }

  Projection project(Point2 p) const
  {
    Projection best;
    double best_dist2 = std::numeric_limits<double>::infinity();
    const std::size_t n_seg = spec_.center_line.size() - 1;
    for (std::size_t i = 0; i < n_seg; ++i) {
      const double len = cumulative_[i + 1] - cumulative_[i];
      if (len <= 0.0) {
        continue;
      }
      const auto & a = spec_.center_line[i];
      const auto & b = spec_.center_line[i + 1];
      const double ex = (b.x - a.x) / len;
      const double ey = (b.y - a.y) / len;
      const double wx = p.x - a.x;
      const double wy = p.y - a.y;
      const double along = wx * ex + wy * ey;
      const double clamped = std::clamp(along, 0.0, len);
      const double fx = p.x - (a.x + clamped * ex);
      const double fy = p.y - (a.y + clamped * ey);
      const double dist2 = fx * fx + fy * fy;
      if (dist2 < best_dist2) {
        best_dist2 = dist2;
        best.s = cumulative_[i] + clamped;
        best.t = ex * wy - ey * wx;
        best.overshoot = 0.0;
        if (i == 0 && along < 0.0) {
          best.overshoot = along;
        } else if (i + 1 == n_seg && along > len) {
          best.overshoot = along - len;
        }
      }
    }
    return best;
  }

private:
  std::pair<std::size_t, double> locate(double s) const
  {
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    i = std::min(i, cumulative_.size() - 2);
    while (cumulative_[i + 1] - cumulative_[i] <= 0.0 && i + 2 < cumulative_.size()) {
      ++i;
    }
    const double len = cumulative_[i + 1] - cumulative_[i];
    return {i, len > 0.0 ? (s - cumulative_[i]) / len : 0.0};
  }

  LaneSpec spec_;
  std::vector<double> cumulative_;
};

/// Immutable planar road: a set of lanes with piecewise-linear center lines.
class RoadModel
{
public:
  static constexpr double default_tolerance_margin = 0.5;

  static RoadModel build(
    std::vector<LaneSpec> specs, double tolerance_margin = default_tolerance_margin,
    std::optional<int> reference_lane = std::nullopt)
  {
    if (specs.empty()) {
      throw ValidationError("road model needs at least one lane");
    }
    if (!(tolerance_margin >= 0.0)) {
      throw ValidationError("tolerance_margin must be non-negative");
    }
    RoadModel road;
    road.tolerance_margin_ = tolerance_margin;
    std::set<int> ids;
    for (auto & spec : specs) {
      if (!ids.insert(spec.lane_id).second) {
        throw ValidationError(fmt::format("duplicate lane_id {}", spec.lane_id));
      }
      road.lanes_.emplace_back(std::move(spec));
    }
    for (const auto & lane : road.lanes_) {
      const auto & spec = lane.spec();
      for (const auto & ref : {spec.successor, spec.left_neighbor, spec.right_neighbor}) {
        if (ref && !ids.count(*ref)) {
          throw ValidationError(
            fmt::format("lane {} references unknown lane {}", spec.lane_id, *ref));
        }
      }
      if (spec.left_neighbor) {
        const auto & other = road.lane(*spec.left_neighbor).spec();
        if (other.right_neighbor != spec.lane_id) {
          throw ValidationError(fmt::format(
            "asymmetric neighbors: lane {} has left_neighbor {} but lane {} has right_neighbor {}",
            spec.lane_id, *spec.left_neighbor, other.lane_id,
            other.right_neighbor ? std::to_string(*other.right_neighbor) : "none"));
        }
      }
      if (spec.right_neighbor) {
        const auto & other = road.lane(*spec.right_neighbor).spec();
        if (other.left_neighbor != spec.lane_id) {
          throw ValidationError(fmt::format(
            "asymmetric neighbors: lane {} has right_neighbor {} but lane {} has left_neighbor {}",
            spec.lane_id, *spec.right_neighbor, other.lane_id,
            other.left_neighbor ? std::to_string(*other.left_neighbor) : "none"));
        }
      }
    }
    road.reference_lane_ = reference_lane ? *reference_lane : *ids.begin();
    if (!ids.count(road.reference_lane_)) {
      throw ValidationError(fmt::format("unknown reference lane {}", road.reference_lane_));
    }
    return road;
  }

  const std::vector<Lane> & lanes() const { return lanes_; }
  double tolerance_margin() const { return tolerance_margin_; }
  int reference_lane_id() const { return reference_lane_; }

  bool has_lane(int id) const
  {
    return std::any_of(lanes_.begin(), lanes_.end(), [id](const Lane & l) { return l.id() == id; });
  }

  const Lane & lane(int id) const
  {
    for (const auto & l : lanes_) {
      if (l.id() == id) {
        return l;
      }
    }
    throw ValidationError(fmt::format("unknown lane {}", id));
  }

  /// Direction from `from` to `to` when they are declared neighbors.
  std::optional<Side> neighbor_side(int from, int to) const
  {
    const auto & spec = lane(from).spec();
    if (spec.left_neighbor == to) {
      return Side::left;
    }
    if (spec.right_neighbor == to) {
      return Side::right;
    }
    return std::nullopt;
  }

  /// Shared longitudinal axis for comparing vehicles across lanes.
  double road_s(Point2 p) const
  {
    const auto proj = lane(reference_lane_).project(p);
    return proj.s + proj.overshoot;
  }

private:
  RoadModel() = default;

  std::vector<Lane> lanes_;
  double tolerance_margin_{default_tolerance_margin};
  int reference_lane_{0};
};

/// Nearest-corridor lane assignment. Points strictly inside a corridor win over points that
/// are only within the tolerance margin; remaining ties go to the smaller |t|.
inline LanePose to_lane_pose(const RoadModel & road, Point2 position, std::size_t sample_index = 0)
{
  const double margin = road.tolerance_margin();
  std::optional<LanePose> best;
  bool best_strict = false;
  for (const auto & lane : road.lanes()) {
    const auto proj = lane.project(position);
    const double half = 0.5 * lane.width();
    if (std::abs(proj.t) > half + margin || std::abs(proj.overshoot) > margin) {
      continue;
    }
    const bool strict = std::abs(proj.t) <= half && proj.overshoot == 0.0;
    if (
      !best || (strict && !best_strict) ||
      (strict == best_strict && std::abs(proj.t) < std::abs(best->t))) {
      best = LanePose{std::clamp(proj.s, 0.0, lane.length()), proj.t, lane.id()};
      best_strict = strict;
    }
  }
  if (!best) {
    throw OutOfRoadError(
      fmt::format(
        "sample {}: position ({}, {}) is outside every lane corridor", sample_index, position.x,
        position.y),
      sample_index);
  }
  return *best;
}

struct LaneAssignment
{
  std::vector<LanePose> poses;
  std::vector<CrossingEvent> crossings;
};

/// Per-sample lane assignment. A crossing is reported at the first sample in the new lane;
/// t switches reference frame there.
inline LaneAssignment assign_lanes(
  const RoadModel & road, std::span<const Point2> positions, std::span<const double> times)
{
  if (positions.size() != times.size()) {
    throw ValidationError("assign_lanes: positions and times differ in length");
  }
  LaneAssignment out;
  out.poses.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.poses.push_back(to_lane_pose(road, positions[i], i));
    if (i == 0) {
      continue;
    }
    const int from = out.poses[i - 1].lane_id;
    const int to = out.poses[i].lane_id;
    if (from == to) {
      continue;
    }
    const auto side = road.neighbor_side(from, to);
    if (!side) {
      throw ValidationError(fmt::format(
        "sample {}: lane assignment jumps from lane {} to non-neighbor lane {}", i, from, to));
    }
    out.crossings.push_back({times[i], from, to, *side});
  }
  return out;
}

// JSON mirrors the LaneSpec field names.

inline LaneSpec lane_spec_from_json(const nlohmann::json & j)
{
  LaneSpec spec;
  spec.lane_id = j.at("lane_id").get<int>();
  for (const auto & p : j.at("center_line")) {
    if (p.is_array()) {
      spec.center_line.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    } else {
      spec.center_line.push_back({p.at("x").get<double>(), p.at("y").get<double>()});
    }
  }
  spec.width = j.at("width").get<double>();
  auto opt = [&j](const char * key) -> std::optional<int> {
    if (!j.contains(key) || j.at(key).is_null()) {
      return std::nullopt;
    }
    return j.at(key).get<int>();
  };
  spec.successor = opt("successor");
  spec.left_neighbor = opt("left_neighbor");
  spec.right_neighbor = opt("right_neighbor");
  return spec;
}

inline nlohmann::json to_json(const LaneSpec & spec)
{
  nlohmann::json j;
  j["lane_id"] = spec.lane_id;
  j["center_line"] = nlohmann::json::array();
  for (const auto & p : spec.center_line) {
    j["center_line"].push_back({p.x, p.y});
  }
  j["width"] = spec.width;
  auto opt = [](const std::optional<int> & v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  j["successor"] = opt(spec.successor);
  j["left_neighbor"] = opt(spec.left_neighbor);
  j["right_neighbor"] = opt(spec.right_neighbor);
  return j;
}

inline RoadModel road_from_json(const nlohmann::json & j)
{
  try {
    std::vector<LaneSpec> specs;
    for (const auto & lane : j.at("lanes")) {
      specs.push_back(lane_spec_from_json(lane));
    }
    const double margin = j.value("tolerance_margin", RoadModel::default_tolerance_margin);
    std::optional<int> reference;
    if (j.contains("reference_lane") && !j.at("reference_lane").is_null()) {
      reference = j.at("reference_lane").get<int>();
    }
    return RoadModel::build(std::move(specs), margin, reference);
  } catch (const nlohmann::json::exception & e) {
    throw ValidationError(fmt::format("road JSON: {}", e.what()));
  }
}

inline nlohmann::json to_json(const RoadModel & road)
{
  nlohmann::json j;
  j["lanes"] = nlohmann::json::array();
  for (const auto & lane : road.lanes()) {
    j["lanes"].push_back(to_json(lane.spec()));
  }
  j["tolerance_margin"] = road.tolerance_margin();
  j["reference_lane"] = road.reference_lane_id();
  return j;
}

inline RoadModel load_road(std::istream & in)
{
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception & e) {
    throw ValidationError(fmt::format("road JSON: {}", e.what()));
  }
  return road_from_json(j);
}

/// Parallel straight lanes along +x, lane ids 1..n from right to left, sharing the s origin.
inline RoadModel straight_highway(int n_lanes = 2, double width = 3.5, double length = 1000.0)
{
  std::vector<LaneSpec> specs;
  for (int i = 0; i < n_lanes; ++i) {
    LaneSpec spec;
    spec.lane_id = i + 1;
    const double y = width * i;
    spec.center_line = {{0.0, y}, {length, y}};
    spec.width = width;
    if (i + 1 < n_lanes) {
      spec.left_neighbor = i + 2;
    }
    if (i > 0) {
      spec.right_neighbor = i;
    }
    specs.push_back(std::move(spec));
  }
  return RoadModel::build(std::move(specs));
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__LANE_FRAME_HPP_
