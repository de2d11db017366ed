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

#ifndef SCENARIO_ABSTRACTION__PIPELINE_HPP_
#define SCENARIO_ABSTRACTION__PIPELINE_HPP_

#include "scenario_abstraction/detail/parallel.hpp"
#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/ingest.hpp"
#include "scenario_abstraction/lane_frame.hpp"
#include "scenario_abstraction/patterns.hpp"
#include "scenario_abstraction/quantfit.hpp"
#include "scenario_abstraction/segmentation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <string>
#include <vector>

namespace scenario_abstraction
{

/// Lane tracks, qualitative and quantitative abstraction of every vehicle, sorted by
/// vehicle id.
inline std::vector<AbstractedTrack> abstract_recording(
  const RoadModel & road, const FleetRecording & rec, const SegmentationConfig & seg,
  const FitOptions & fit, std::size_t workers = 1)
{
  seg.validate();
  const auto tracks = to_lane_tracks(road, rec, workers);
  auto out = detail::parallel_map(
    tracks,
    [&](const LaneTrack & t) { return abstract_track(t, qualitative_abstraction(t, seg), fit); },
    workers);
  std::sort(out.begin(), out.end(), [](const AbstractedTrack & a, const AbstractedTrack & b) {
    return a.vehicle_id < b.vehicle_id;
  });
  return out;
}

inline std::string ego_id_of(const std::vector<AbstractedTrack> & tracks)
{
  std::string ego;
  for (const auto & t : tracks) {
    if (t.role == Role::ego) {
      if (!ego.empty()) {
        throw ValidationError(fmt::format("more than one ego vehicle ('{}', '{}')", ego, t.vehicle_id));
      }
      ego = t.vehicle_id;
    }
  }
  if (ego.empty()) {
    throw ValidationError("recording has no ego vehicle");
  }
  return ego;
}

struct Detection
{
  std::vector<LaneTrack> reconstructed;
  std::vector<RelationTimeline> relations;
  std::vector<ScenarioInstance> instances;
};

/// Matches `patterns` against relations evaluated on tracks re-simulated at step `dt`.
/// Instances are grouped by pattern in the given pattern order.
inline Detection detect_scenarios(
  const RoadModel & road, const std::vector<AbstractedTrack> & tracks,
  const std::vector<Pattern> & patterns, double dt, std::size_t workers = 1)
{
  Detection d;
  if (tracks.empty()) {
    return d;
  }
  const std::string ego = ego_id_of(tracks);
  const double t0 = tracks.front().timeline.t0;
  const double t1 = tracks.front().timeline.t1;
  for (const auto & t : tracks) {
    if (t.timeline.t0 != t0 || t.timeline.t1 != t1) {
      throw ValidationError(fmt::format("track '{}' does not share the recording time span", t.vehicle_id));
    }
  }
  d.reconstructed = detail::parallel_map(
    tracks, [&](const AbstractedTrack & t) { return reconstruct(t, dt, t0, t1); }, workers);
  d.relations = compute_all_relations(road, d.reconstructed, ego);
  std::vector<ActionTimeline> timelines;
  for (const auto & t : tracks) {
    timelines.push_back(t.timeline);
  }
  const auto per_pattern = detail::parallel_map(
    patterns, [&](const Pattern & p) { return match_pattern(p, timelines, d.relations); }, workers);
  for (const auto & found : per_pattern) {
    d.instances.insert(d.instances.end(), found.begin(), found.end());
  }
  return d;
}

/// Built-in patterns filtered by id, plus user patterns.
inline std::vector<Pattern> select_patterns(
  const std::vector<std::string> & builtin_ids, const std::vector<Pattern> & user,
  const BuiltinOptions & opt = {})
{
  const auto builtins = builtin_patterns(opt);
  std::vector<Pattern> out;
  if (builtin_ids.empty()) {
    out = builtins;
  } else {
    for (const auto & id : builtin_ids) {
      auto p = find_pattern(builtins, id);
      if (!p) {
        throw ValidationError(fmt::format("unknown builtin pattern '{}'", id));
      }
      out.push_back(*p);
    }
  }
  out.insert(out.end(), user.begin(), user.end());
  return out;
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__PIPELINE_HPP_
