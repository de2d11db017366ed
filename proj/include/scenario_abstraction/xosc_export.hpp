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

// OpenSCENARIO-style XML subset; the element set is described by docs/xosc_subset.xsd.

#ifndef SCENARIO_ABSTRACTION__XOSC_EXPORT_HPP_
#define SCENARIO_ABSTRACTION__XOSC_EXPORT_HPP_

#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/patterns.hpp"
#include "scenario_abstraction/quantfit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <ctime>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenario_abstraction
{

inline constexpr std::string_view tool_version = "scenario_abstraction 0.1.0";

struct XoscOptions
{
  double dt{0.1};
  /// Written to FileHeader/@date. Empty means the current UTC time.
  std::string timestamp;
  /// Emit a fixed epoch date instead of the current time.
  bool suppress_timestamp{false};
  std::string recording_id{"recording"};
};

namespace detail
{

inline std::string xml_escape(std::string_view s)
{
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

inline std::string utc_now()
{
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline bool constant_kind(ActionKind k)
{
  return k == ActionKind::keep_velocity || k == ActionKind::standstill;
}

class XmlWriter
{
public:
  void open(std::string_view tag, std::string_view attrs = {})
  {
    line(fmt::format("<{}{}{}>", tag, attrs.empty() ? "" : " ", attrs));
    stack_.emplace_back(tag);
  }
  void leaf(std::string_view tag, std::string_view attrs)
  {
    line(fmt::format("<{} {}/>", tag, attrs));
  }
  void close()
  {
    const std::string tag = stack_.back();
    stack_.pop_back();
    line(fmt::format("</{}>", tag));
  }
  void raw(std::string_view s) { out_ += s; }
  std::string str() const { return out_; }

private:
  void line(std::string_view s)
  {
    out_.append(2 * stack_.size(), ' ');
    out_ += s;
    out_ += '\n';
  }

  std::vector<std::string> stack_;
  std::string out_;
};

inline std::string lane_position(const TrackState & st)
{
  return fmt::format(R"(roadId="0" laneId="{}" s="{}" offset="{}")", st.lane_id, st.s, st.t);
}

}  // namespace detail

/// Vertex times of one action clipped to [a0, a1]: the shared grid `from + k dt` plus the
/// clipped endpoints and, for lane changes, the crossing.
inline std::vector<double> vertex_times(
  const Action & a, double a0, double a1, double from, double to, double dt)
{
  std::vector<double> times;
  for (double t : sample_grid(from, to, dt)) {
    if (t >= a0 && t <= a1) {
      times.push_back(t);
    }
  }
  times.push_back(a0);
  times.push_back(a1);
  if (a.crossing_time && *a.crossing_time > a0 && *a.crossing_time < a1) {
    times.push_back(*a.crossing_time);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

/// Whole recording when `instance` is empty, otherwise every timeline clipped to the
/// instance window.
inline std::string export_xosc(
  const std::vector<AbstractedTrack> & tracks, const std::optional<ScenarioInstance> & instance,
  const XoscOptions & opt)
{
  if (!(opt.dt > 0.0)) {
    throw ValidationError(fmt::format("export: dt must be positive, got {}", opt.dt));
  }
  double from = std::numeric_limits<double>::infinity();
  double to = -std::numeric_limits<double>::infinity();
  for (const auto & tr : tracks) {
    from = std::min(from, tr.timeline.t0);
    to = std::max(to, tr.timeline.t1);
  }
  std::string scope = "recording";
  if (instance) {
    for (const auto & [role, vid] : instance->actors) {
      const bool known = std::any_of(
        tracks.begin(), tracks.end(), [&](const AbstractedTrack & t) { return t.vehicle_id == vid; });
      if (!known) {
        throw ValidationError(
          fmt::format("export: instance {} references unknown vehicle '{}'", instance->pattern_id, vid));
      }
    }
    from = instance->t_start;
    to = instance->t_end;
    scope = instance->pattern_id;
  }
  if (tracks.empty()) {
    from = 0.0;
    to = 0.0;
  }

  using detail::xml_escape;
  detail::XmlWriter w;
  w.raw("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
  w.open("OpenSCENARIO");
  const std::string date =
    opt.suppress_timestamp ? "1970-01-01T00:00:00Z" : (opt.timestamp.empty() ? detail::utc_now() : opt.timestamp);
  w.leaf(
    "FileHeader", fmt::format(
                    R"(revMajor="1" revMinor="0" date="{}" description="{}" author="{}")", date,
                    xml_escape(opt.recording_id), tool_version));

  w.open("ParameterDeclarations");
  for (const auto & tr : tracks) {
    for (auto ch : {Channel::lateral, Channel::longitudinal}) {
      const auto & fits = tr.fits(ch);
      for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto & a = fits[i].action;
        if (a.t_end < from || a.t_start > to) {
          continue;
        }
        for (std::size_t j = 0; j < fits[i].segments.size(); ++j) {
          const auto & seg = fits[i].segments[j];
          const std::string prefix =
            fmt::format("{}_{}_{}_seg_{}", xml_escape(tr.vehicle_id), to_string(ch), i, j);
          for (std::size_t k = 0; k < poly_coefficient_count; ++k) {
            w.leaf(
              "ParameterDeclaration",
              fmt::format(R"(name="{}_a{}" parameterType="double" value="{}")", prefix, k, seg.a[k]));
          }
          w.leaf(
            "ParameterDeclaration",
            fmt::format(R"(name="{}_duration" parameterType="double" value="{}")", prefix, seg.duration));
        }
      }
    }
  }
  w.close();

  w.open("Entities");
  for (const auto & tr : tracks) {
    w.open("ScenarioObject", fmt::format(R"(name="{}")", xml_escape(tr.vehicle_id)));
    w.leaf(
      "Vehicle", fmt::format(
                   R"(name="{}" vehicleCategory="car" role="{}")", xml_escape(tr.vehicle_id),
                   to_string(tr.role)));
    w.close();
  }
  w.close();

  w.open("Storyboard");
  w.open("Init");
  w.open("Actions");
  for (const auto & tr : tracks) {
    const TrackEvaluator eval(tr);
    const auto st = eval.state_at(std::max(from, tr.timeline.t0));
    w.open("Private", fmt::format(R"(entityRef="{}")", xml_escape(tr.vehicle_id)));
    w.open("PrivateAction");
    w.open("TeleportAction");
    w.open("Position");
    w.leaf("LanePosition", detail::lane_position(st));
    w.close();
    w.close();
    w.close();
    w.open("PrivateAction");
    w.open("LongitudinalAction");
    w.open("SpeedAction");
    w.leaf("SpeedActionDynamics", R"(dynamicsShape="step" value="0" dynamicsDimension="time")");
    w.open("SpeedActionTarget");
    w.leaf("AbsoluteTargetSpeed", fmt::format(R"(value="{}")", st.speed));
    w.close();
    w.close();
    w.close();
    w.close();
    w.close();
  }
  w.close();
  w.close();

  w.open(
    "Story", fmt::format(R"(name="{}" scope="{}" tStart="{}" tEnd="{}")", xml_escape(opt.recording_id),
                         xml_escape(scope), from, to));
  w.open("Act", R"(name="drive")");
  for (const auto & tr : tracks) {
    const TrackEvaluator eval(tr);
    const std::string vid = xml_escape(tr.vehicle_id);
    w.open("ManeuverGroup", fmt::format(R"(name="{}" maximumExecutionCount="1")", vid));
    w.open("Actors", R"(selectTriggeringEntities="false")");
    w.leaf("EntityRef", fmt::format(R"(entityRef="{}")", vid));
    w.close();
    w.open("Maneuver", fmt::format(R"(name="{}_maneuver")", vid));
    for (auto ch : {Channel::lateral, Channel::longitudinal}) {
      const auto & actions = tr.timeline.channel(ch);
      for (std::size_t i = 0; i < actions.size(); ++i) {
        const auto & a = actions[i];
        const double a0 = std::max(a.t_start, from);
        const double a1 = std::min(a.t_end, to);
        if (a1 < a0 || (a1 == a0 && a.t_end != a.t_start)) {
          continue;
        }
        w.open(
          "Event", fmt::format(
                     R"(name="{}_{}_{}" priority="parallel" kind="{}" tStart="{}" tEnd="{}")", vid,
                     to_string(ch), i, to_string(a.kind), a0, a1));
        w.open("Action", fmt::format(R"(name="{}_{}_{}_action")", vid, to_string(ch), i));
        w.open("PrivateAction");
        if (ch == Channel::longitudinal && detail::constant_kind(a.kind)) {
          const auto st = eval.state_at(a0);
          w.open("LongitudinalAction");
          w.open("SpeedAction");
          w.leaf("SpeedActionDynamics", R"(dynamicsShape="step" value="0" dynamicsDimension="time")");
          w.open("SpeedActionTarget");
          w.leaf("AbsoluteTargetSpeed", fmt::format(R"(value="{}")", st.speed));
          w.close();
          w.close();
          w.close();
        } else {
          w.open("RoutingAction");
          w.open("FollowTrajectoryAction");
          w.open("Trajectory", fmt::format(R"(name="{}_{}_{}_trajectory" closed="false")", vid, to_string(ch), i));
          w.open("Shape");
          w.open("Polyline");
          for (double t : vertex_times(a, a0, a1, from, to, opt.dt)) {
            const auto st = eval.state_at(t);
            w.open("Vertex", fmt::format(R"(time="{}" speed="{}")", t, st.speed));
            w.open("Position");
            w.leaf("LanePosition", detail::lane_position(st));
            w.close();
            w.close();
          }
          w.close();
          w.close();
          w.close();
          w.leaf("TimeReference", R"(timing="absolute")");
          w.close();
          w.close();
        }
        w.close();
        w.close();
        w.open("StartTrigger");
        w.open("ConditionGroup");
        w.leaf(
          "SimulationTimeCondition", fmt::format(R"(value="{}" rule="greaterOrEqual")", a0));
        w.close();
        w.close();
        w.close();
      }
    }
    w.close();
    w.close();
  }
  w.close();
  w.close();
  w.open("StopTrigger");
  w.open("ConditionGroup");
  w.leaf("SimulationTimeCondition", fmt::format(R"(value="{}" rule="greaterOrEqual")", to));
  w.close();
  w.close();
  w.close();
  w.close();
  return w.str();
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__XOSC_EXPORT_HPP_
