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

#ifndef SCENARIO_ABSTRACTION__SEGMENTATION_HPP_
#define SCENARIO_ABSTRACTION__SEGMENTATION_HPP_

#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/ingest.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenario_abstraction
{

enum class Channel { lateral, longitudinal };

enum class ActionKind {
  keep_velocity,
  accelerate,
  decelerate,
  standstill,
  keep_lane,
  lane_change_left,
  lane_change_right,
};

inline constexpr std::array<ActionKind, 7> all_action_kinds{
  ActionKind::keep_velocity,    ActionKind::accelerate, ActionKind::decelerate,
  ActionKind::standstill,       ActionKind::keep_lane,  ActionKind::lane_change_left,
  ActionKind::lane_change_right};

inline Channel channel_of(ActionKind kind)
{
  switch (kind) {
    case ActionKind::keep_lane:
    case ActionKind::lane_change_left:
    case ActionKind::lane_change_right:
      return Channel::lateral;
    default:
      return Channel::longitudinal;
  }
}

inline bool is_lane_change(ActionKind kind)
{
  return kind == ActionKind::lane_change_left || kind == ActionKind::lane_change_right;
}

inline const char * to_string(Channel channel)
{
  return channel == Channel::lateral ? "lateral" : "longitudinal";
}

inline const char * to_string(ActionKind kind)
{
  switch (kind) {
    case ActionKind::keep_velocity:
      return "keep_velocity";
    case ActionKind::accelerate:
      return "accelerate";
    case ActionKind::decelerate:
      return "decelerate";
    case ActionKind::standstill:
      return "standstill";
    case ActionKind::keep_lane:
      return "keep_lane";
    case ActionKind::lane_change_left:
      return "lane_change_left";
    case ActionKind::lane_change_right:
      return "lane_change_right";
  }
  return "unknown";
}

inline std::optional<ActionKind> action_kind_from_string(std::string_view s)
{
  for (auto kind : all_action_kinds) {
    if (s == to_string(kind)) {
      return kind;
    }
  }
  return std::nullopt;
}

struct Action
{
  std::string vehicle_id;
  Channel channel{Channel::longitudinal};
  ActionKind kind{ActionKind::keep_velocity};
  double t_start{0.0};
  double t_end{0.0};
  int lane_before{0};
  int lane_after{0};
  std::optional<double> crossing_time;

  double duration() const { return t_end - t_start; }

  bool operator==(const Action &) const = default;
};

/// Both channels tile [t0, t1] independently; their boundaries need not coincide.
struct ActionTimeline
{
  std::string vehicle_id;
  std::vector<Action> lateral;
  std::vector<Action> longitudinal;
  double t0{0.0};
  double t1{0.0};

  const std::vector<Action> & channel(Channel c) const
  {
    return c == Channel::lateral ? lateral : longitudinal;
  }

  /// Index of the action containing `time`: intervals are half-open except the last.
  std::size_t index_at(Channel c, double time) const
  {
    const auto & actions = channel(c);
    auto it = std::upper_bound(
      actions.begin(), actions.end(), time,
      [](double value, const Action & a) { return value < a.t_start; });
    std::size_t i = it == actions.begin() ? 0 : static_cast<std::size_t>(it - actions.begin()) - 1;
    return std::min(i, actions.size() - 1);
  }

  bool operator==(const ActionTimeline &) const = default;
};

struct SegmentationConfig
{
  double accel_threshold{0.2};
  double standstill_speed{0.3};
  double min_action_duration{1.0};
  double lane_change_lat_rate{0.15};
  double hysteresis_fraction{0.5};
  /// Centered moving-average window applied to the acceleration.
  double accel_smoothing_window{0.5};
  /// Local linear-regression window for the lateral rate.
  double lateral_rate_window{1.0};

  void validate() const
  {
    auto positive = [](double v, const char * name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError(fmt::format("segmentation: {} must be positive, got {}", name, v));
      }
    };
    positive(accel_threshold, "accel_threshold");
    positive(standstill_speed, "standstill_speed");
    positive(min_action_duration, "min_action_duration");
    positive(lane_change_lat_rate, "lane_change_lat_rate");
    positive(hysteresis_fraction, "hysteresis_fraction");
    positive(accel_smoothing_window, "accel_smoothing_window");
    positive(lateral_rate_window, "lateral_rate_window");
    if (!(hysteresis_fraction < 1.0)) {
      throw ValidationError("segmentation: hysteresis_fraction must be below 1");
    }
  }
};

namespace detail
{

struct Run
{
  ActionKind kind;
  std::size_t first;  // sample index where the run starts
};

inline double mean_timestep(const LaneTrack & track)
{
  const std::size_t n = track.size();
  return n < 2 ? 1.0 : (track.end_time() - track.start_time()) / static_cast<double>(n - 1);
}

inline std::size_t window_samples(double window, double dt)
{
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window / dt)));
}

inline std::vector<double> central_difference(const std::vector<double> & y, const std::vector<double> & x)
{
  const std::size_t n = y.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) {
    return d;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    d[i] = (y[hi] - y[lo]) / (x[hi] - x[lo]);
  }
  return d;
}

inline std::vector<double> moving_average(const std::vector<double> & y, std::size_t window)
{
  const std::size_t n = y.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      sum += y[k];
    }
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Slope of a least-squares line through a centered window, truncated at the edges.
inline std::vector<double> regression_slope(
  const std::vector<double> & y, const std::vector<double> & x, std::size_t window)
{
  const std::size_t n = y.size();
  const std::size_t half = std::max<std::size_t>(1, window / 2);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    if (hi == lo) {
      continue;
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      mx += x[k];
      my += y[k];
    }
    const double m = static_cast<double>(hi - lo + 1);
    mx /= m;
    my /= m;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      sxy += (x[k] - mx) * (y[k] - my);
      sxx += (x[k] - mx) * (x[k] - mx);
    }
    out[i] = sxy / sxx;
  }
  return out;
}

inline double run_duration(
  const std::vector<Run> & runs, std::size_t r, const std::vector<double> & time)
{
  const double end = r + 1 < runs.size() ? time[runs[r + 1].first] : time.back();
  return end - time[runs[r].first];
}

inline void coalesce(std::vector<Run> & runs)
{
  std::vector<Run> out;
  for (const auto & run : runs) {
    if (out.empty() || out.back().kind != run.kind) {
      out.push_back(run);
    }
  }
  runs = std::move(out);
}

/// Repeatedly absorbs the shortest sub-minimum run into its longer neighbour (ties: earlier).
inline void merge_short_runs(
  std::vector<Run> & runs, const std::vector<double> & time, double min_duration)
{
  coalesce(runs);
  while (runs.size() > 1) {
    std::optional<std::size_t> shortest;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const double d = run_duration(runs, r, time);
      if (d < min_duration && (!shortest || d < run_duration(runs, *shortest, time))) {
        shortest = r;
      }
    }
    if (!shortest) {
      break;
    }
    const std::size_t r = *shortest;
    const bool has_prev = r > 0;
    const bool has_next = r + 1 < runs.size();
    bool into_prev = has_prev;
    if (has_prev && has_next) {
      into_prev = run_duration(runs, r - 1, time) >= run_duration(runs, r + 1, time);
    }
    if (into_prev) {
      runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(r));
    } else {
      runs[r].kind = runs[r + 1].kind;
    }
    coalesce(runs);
  }
}

inline ActionKind classify_fresh(double speed, double accel, const SegmentationConfig & cfg)
{
  if (speed < cfg.standstill_speed) {
    return ActionKind::standstill;
  }
  if (accel > cfg.accel_threshold) {
    return ActionKind::accelerate;
  }
  if (accel < -cfg.accel_threshold) {
    return ActionKind::decelerate;
  }
  return ActionKind::keep_velocity;
}

/// Whether a raw acceleration sample is consistent with `kind`.
inline bool accel_consistent(ActionKind kind, double speed, double accel, const SegmentationConfig & cfg)
{
  const double release = cfg.accel_threshold * cfg.hysteresis_fraction;
  switch (kind) {
    case ActionKind::standstill:
      return speed < cfg.standstill_speed;
    case ActionKind::accelerate:
      return accel > release;
    case ActionKind::decelerate:
      return accel < -release;
    default:
      return std::abs(accel) < cfg.accel_threshold;
  }
}

/// Moves each run boundary within `reach` samples to the split that misclassifies the
/// fewest raw samples; ties go to the split nearest the original boundary.
inline void refine_boundaries(
  std::vector<Run> & runs, const std::vector<double> & speed, const std::vector<double> & raw_accel,
  std::size_t reach, const SegmentationConfig & cfg)
{
  const std::size_t n = speed.size();
  for (std::size_t r = 1; r < runs.size(); ++r) {
    const std::size_t b = runs[r].first;
    const std::size_t lo = std::max(runs[r - 1].first + 1, b > reach ? b - reach : 0);
    const std::size_t hi_limit = r + 1 < runs.size() ? runs[r + 1].first - 1 : n - 1;
    const std::size_t hi = std::min(hi_limit, b + reach);
    if (lo > hi) {
      continue;
    }
    const std::size_t from = lo > reach ? lo - reach : 0;
    const std::size_t to = std::min(n, hi + reach + 1);
    std::size_t best = b;
    long best_cost = std::numeric_limits<long>::max();
    for (std::size_t j = lo; j <= hi; ++j) {
      long cost = 0;
      for (std::size_t i = from; i < to; ++i) {
        const ActionKind kind = i < j ? runs[r - 1].kind : runs[r].kind;
        cost += accel_consistent(kind, speed[i], raw_accel[i], cfg) ? 0 : 1;
      }
      const auto dist = [b](std::size_t k) { return k > b ? k - b : b - k; };
      if (cost < best_cost || (cost == best_cost && dist(j) < dist(best))) {
        best_cost = cost;
        best = j;
      }
    }
    runs[r].first = best;
  }
}

}  // namespace detail

/// Smoothed acceleration used for thresholding.
inline std::vector<double> smoothed_acceleration(const LaneTrack & track, const SegmentationConfig & cfg)
{
  const auto accel = detail::central_difference(track.speed, track.time);
  return detail::moving_average(
    accel, detail::window_samples(cfg.accel_smoothing_window, detail::mean_timestep(track)));
}

inline std::vector<Action> segment_longitudinal(const LaneTrack & track, const SegmentationConfig & cfg)
{
  if (track.empty()) {
    throw ValidationError(fmt::format("segment_longitudinal: track '{}' is empty", track.vehicle_id));
  }
  cfg.validate();
  const auto accel = smoothed_acceleration(track, cfg);
  const double thr = cfg.accel_threshold;
  const double release = cfg.accel_threshold * cfg.hysteresis_fraction;

  std::vector<detail::Run> runs;
  ActionKind state = detail::classify_fresh(track.speed[0], accel[0], cfg);
  for (std::size_t i = 0; i < track.size(); ++i) {
    const double a = accel[i];
    if (track.speed[i] < cfg.standstill_speed) {
      state = ActionKind::standstill;
    } else {
      switch (state) {
        case ActionKind::standstill:
          state = detail::classify_fresh(track.speed[i], a, cfg);
          break;
        case ActionKind::accelerate:
          if (a < -thr) {
            state = ActionKind::decelerate;
          } else if (a < release) {
            state = ActionKind::keep_velocity;
          }
          break;
        case ActionKind::decelerate:
          if (a > thr) {
            state = ActionKind::accelerate;
          } else if (a > -release) {
            state = ActionKind::keep_velocity;
          }
          break;
        default:
          if (a > thr) {
            state = ActionKind::accelerate;
          } else if (a < -thr) {
            state = ActionKind::decelerate;
          }
          break;
      }
    }
    if (runs.empty() || runs.back().kind != state) {
      runs.push_back({state, i});
    }
  }
  detail::merge_short_runs(runs, track.time, cfg.min_action_duration);
  const std::size_t reach =
    detail::window_samples(cfg.accel_smoothing_window, detail::mean_timestep(track)) + 1;
  detail::refine_boundaries(
    runs, track.speed, detail::central_difference(track.speed, track.time), reach, cfg);

  std::vector<Action> actions;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const std::size_t first = runs[r].first;
    const std::size_t last = r + 1 < runs.size() ? runs[r + 1].first : track.size() - 1;
    Action a;
    a.vehicle_id = track.vehicle_id;
    a.channel = Channel::longitudinal;
    a.kind = runs[r].kind;
    a.t_start = track.time[first];
    a.t_end = track.time[last];
    a.lane_before = track.lane_id[first];
    a.lane_after = track.lane_id[first];
    actions.push_back(std::move(a));
  }
  return actions;
}

/// Lateral offset with the frame jumps at crossings removed by linear extrapolation.
inline std::vector<double> unwrapped_lateral(const LaneTrack & track)
{
  std::vector<double> out(track.t);
  double offset = 0.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    if (track.lane_id[i] != track.lane_id[i - 1]) {
      const double prev = out[i - 1];
      const double slope = i >= 2 ? out[i - 1] - out[i - 2] : 0.0;
      offset = prev + slope - track.t[i];
    }
    out[i] = track.t[i] + offset;
  }
  return out;
}

inline std::vector<Action> segment_lateral(const LaneTrack & track, const SegmentationConfig & cfg)
{
  if (track.empty()) {
    throw ValidationError(fmt::format("segment_lateral: track '{}' is empty", track.vehicle_id));
  }
  cfg.validate();
  const std::size_t n = track.size();
  const auto lateral = unwrapped_lateral(track);
  const auto rate = detail::regression_slope(
    lateral, track.time, detail::window_samples(cfg.lateral_rate_window, detail::mean_timestep(track)));
  const double thr = cfg.lane_change_lat_rate;
  constexpr double rest_step = 1e-6;

  std::vector<std::size_t> crossing_index;
  for (std::size_t i = 1; i < n; ++i) {
    if (track.lane_id[i] != track.lane_id[i - 1]) {
      crossing_index.push_back(i);
    }
  }

  struct Span
  {
    std::size_t first;
    std::size_t last;
    std::size_t crossing;
  };
  std::vector<Span> spans;
  for (std::size_t c = 0; c < crossing_index.size(); ++c) {
    const std::size_t k = crossing_index[c];
    const double dir = lateral[k] >= lateral[k - 1] ? 1.0 : -1.0;
    const std::size_t lower = spans.empty() ? 0 : spans.back().last;
    const std::size_t upper = c + 1 < crossing_index.size() ? crossing_index[c + 1] - 1 : n - 1;

    std::size_t first = k - 1;
    while (first > lower && dir * rate[first - 1] >= thr) {
      --first;
    }
    while (first > lower && dir * (lateral[first] - lateral[first - 1]) > rest_step) {
      --first;
    }
    std::size_t last = std::min(k + 1, upper);
    last = std::max(last, k);
    while (last < upper && dir * rate[last + 1] >= thr) {
      ++last;
    }
    while (last < upper && dir * (lateral[last + 1] - lateral[last]) > rest_step) {
      ++last;
    }
    spans.push_back({first, last, k});
  }

  // Consecutive changes in one direction with no rest between them split where the
  // vehicle passes closest to the center of the lane in between.
  for (std::size_t c = 1; c < spans.size(); ++c) {
    auto & prev = spans[c - 1];
    auto & next = spans[c];
    if (prev.last < next.crossing - 1 || next.first > prev.last) {
      continue;
    }
    std::size_t split = prev.crossing;
    for (std::size_t i = prev.crossing; i < next.crossing; ++i) {
      if (std::abs(track.t[i]) < std::abs(track.t[split])) {
        split = i;
      }
    }
    prev.last = split;
    next.first = split;
  }

  // Keep-lane gaps shorter than the minimum go to the longer adjacent lane change.
  auto t = [&track](std::size_t i) { return track.time[i]; };
  for (std::size_t c = 0; c <= spans.size() && !spans.empty(); ++c) {
    const std::size_t gap_first = c == 0 ? 0 : spans[c - 1].last;
    const std::size_t gap_last = c == spans.size() ? n - 1 : spans[c].first;
    const double gap = t(gap_last) - t(gap_first);
    if (gap <= 0.0 || gap >= cfg.min_action_duration) {
      continue;
    }
    const bool has_prev = c > 0;
    const bool has_next = c < spans.size();
    bool into_prev = has_prev;
    if (has_prev && has_next) {
      into_prev = t(spans[c - 1].last) - t(spans[c - 1].first) >=
                  t(spans[c].last) - t(spans[c].first);
    }
    if (into_prev) {
      spans[c - 1].last = gap_last;
    } else {
      spans[c].first = gap_first;
    }
  }

  std::vector<Action> actions;
  auto keep_lane = [&](std::size_t first, std::size_t last) {
    if (t(last) <= t(first)) {
      return;
    }
    Action a;
    a.vehicle_id = track.vehicle_id;
    a.channel = Channel::lateral;
    a.kind = ActionKind::keep_lane;
    a.t_start = t(first);
    a.t_end = t(last);
    a.lane_before = track.lane_id[first];
    a.lane_after = track.lane_id[first];
    actions.push_back(std::move(a));
  };
  std::size_t cursor = 0;
  for (const auto & span : spans) {
    keep_lane(cursor, span.first);
    const double crossing_time = t(span.crossing);
    const auto recorded = std::find_if(
      track.crossings.begin(), track.crossings.end(),
      [crossing_time](const CrossingEvent & e) { return e.time == crossing_time; });
    const bool left = recorded != track.crossings.end()
      ? recorded->direction == Side::left
      : lateral[span.crossing] >= lateral[span.crossing - 1];
    Action a;
    a.vehicle_id = track.vehicle_id;
    a.channel = Channel::lateral;
    a.lane_before = track.lane_id[span.crossing - 1];
    a.lane_after = track.lane_id[span.crossing];
    a.kind = left ? ActionKind::lane_change_left : ActionKind::lane_change_right;
    a.t_start = t(span.first);
    a.t_end = t(span.last);
    a.crossing_time = crossing_time;
    actions.push_back(std::move(a));
    cursor = span.last;
  }
  keep_lane(cursor, n - 1);
  if (actions.empty()) {
    keep_lane(0, n - 1);
  }
  if (actions.empty()) {
    // Single-sample track.
    Action a;
    a.vehicle_id = track.vehicle_id;
    a.channel = Channel::lateral;
    a.kind = ActionKind::keep_lane;
    a.t_start = a.t_end = t(0);
    a.lane_before = a.lane_after = track.lane_id[0];
    actions.push_back(std::move(a));
  }
  return actions;
}

namespace detail
{

inline void check_tiling(const std::vector<Action> & actions, double t0, double t1, const std::string & what)
{
  if (actions.empty()) {
    throw InvariantViolation(fmt::format("{}: no actions", what));
  }
  if (actions.front().t_start != t0 || actions.back().t_end != t1) {
    throw InvariantViolation(fmt::format("{}: actions do not cover [{}, {}]", what, t0, t1));
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!(actions[i].t_start < actions[i].t_end) && t1 > t0) {
      throw InvariantViolation(fmt::format("{}: empty action at index {}", what, i));
    }
    if (i + 1 < actions.size() && actions[i].t_end != actions[i + 1].t_start) {
      throw InvariantViolation(fmt::format("{}: gap or overlap after action {}", what, i));
    }
  }
}

}  // namespace detail

/// Exactly one lateral and one longitudinal action at every instant of the track.
inline ActionTimeline qualitative_abstraction(const LaneTrack & track, const SegmentationConfig & cfg = {})
{
  ActionTimeline timeline;
  timeline.vehicle_id = track.vehicle_id;
  timeline.lateral = segment_lateral(track, cfg);
  timeline.longitudinal = segment_longitudinal(track, cfg);
  timeline.t0 = track.start_time();
  timeline.t1 = track.end_time();
  detail::check_tiling(timeline.lateral, timeline.t0, timeline.t1, track.vehicle_id + " lateral");
  detail::check_tiling(
    timeline.longitudinal, timeline.t0, timeline.t1, track.vehicle_id + " longitudinal");
  std::size_t lane_changes = 0;
  for (const auto & a : timeline.lateral) {
    lane_changes += is_lane_change(a.kind) ? 1 : 0;
  }
  if (lane_changes != track.crossings.size() && !track.crossings.empty()) {
    throw InvariantViolation(fmt::format(
      "{}: {} lane changes for {} crossings", track.vehicle_id, lane_changes,
      track.crossings.size()));
  }
  return timeline;
}

inline nlohmann::json to_json(const Action & a)
{
  nlohmann::json j{
    {"vehicle_id", a.vehicle_id}, {"channel", to_string(a.channel)}, {"kind", to_string(a.kind)},
    {"t_start", a.t_start},       {"t_end", a.t_end},               {"lane_before", a.lane_before},
    {"lane_after", a.lane_after}};
  j["crossing_time"] = a.crossing_time ? nlohmann::json(*a.crossing_time) : nlohmann::json();
  return j;
}

inline Action action_from_json(const nlohmann::json & j)
{
  Action a;
  a.vehicle_id = j.at("vehicle_id").get<std::string>();
  const auto kind = action_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) {
    throw ValidationError(fmt::format("unknown action kind '{}'", j.at("kind").get<std::string>()));
  }
  a.kind = *kind;
  a.channel = channel_of(a.kind);
  a.t_start = j.at("t_start").get<double>();
  a.t_end = j.at("t_end").get<double>();
  a.lane_before = j.at("lane_before").get<int>();
  a.lane_after = j.at("lane_after").get<int>();
  if (j.contains("crossing_time") && !j.at("crossing_time").is_null()) {
    a.crossing_time = j.at("crossing_time").get<double>();
  }
  return a;
}

inline nlohmann::json to_json(const ActionTimeline & tl)
{
  nlohmann::json j{{"vehicle_id", tl.vehicle_id}, {"span", {tl.t0, tl.t1}}};
  j["lateral_actions"] = nlohmann::json::array();
  for (const auto & a : tl.lateral) {
    j["lateral_actions"].push_back(to_json(a));
  }
  j["longitudinal_actions"] = nlohmann::json::array();
  for (const auto & a : tl.longitudinal) {
    j["longitudinal_actions"].push_back(to_json(a));
  }
  return j;
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__SEGMENTATION_HPP_
