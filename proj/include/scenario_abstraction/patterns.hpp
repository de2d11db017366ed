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

#ifndef SCENARIO_ABSTRACTION__PATTERNS_HPP_
#define SCENARIO_ABSTRACTION__PATTERNS_HPP_

#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/ingest.hpp"
#include "scenario_abstraction/lane_frame.hpp"
#include "scenario_abstraction/segmentation.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace scenario_abstraction
{

/// Per-sample relation of `subject` to `reference`.
struct RelationTimeline
{
  std::string subject;
  std::string reference;
  bool reference_is_ego{false};
  std::vector<double> time;
  std::vector<std::uint8_t> same_lane;
  std::vector<std::uint8_t> adjacent_left;
  std::vector<std::uint8_t> adjacent_right;
  std::vector<std::uint8_t> ahead;
  /// Subject road s minus reference road s.
  std::vector<double> gap_s;

  std::size_t size() const { return time.size(); }

  /// Sample closest to `t`, assuming a uniform time base.
  std::size_t index_at(double t) const
  {
    if (time.size() < 2) {
      return 0;
    }
    const double dt = (time.back() - time.front()) / static_cast<double>(time.size() - 1);
    const double k = std::round((t - time.front()) / dt);
    return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(time.size() - 1)));
  }
};

inline RelationTimeline compute_relation(
  const RoadModel & road, const LaneTrack & subject, const LaneTrack & reference, bool reference_is_ego)
{
  if (subject.size() != reference.size()) {
    throw ValidationError(fmt::format(
      "relations: '{}' and '{}' do not share a time base ({} vs {} samples)", subject.vehicle_id,
      reference.vehicle_id, subject.size(), reference.size()));
  }
  RelationTimeline r;
  r.subject = subject.vehicle_id;
  r.reference = reference.vehicle_id;
  r.reference_is_ego = reference_is_ego;
  const std::size_t n = subject.size();
  r.time = subject.time;
  r.same_lane.resize(n);
  r.adjacent_left.resize(n);
  r.adjacent_right.resize(n);
  r.ahead.resize(n);
  r.gap_s.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int a = subject.lane_id[k];
    const int b = reference.lane_id[k];
    r.same_lane[k] = a == b;
    const auto side = a == b ? std::nullopt : road.neighbor_side(b, a);
    r.adjacent_left[k] = side == Side::left;
    r.adjacent_right[k] = side == Side::right;
    r.gap_s[k] = subject.road_s[k] - reference.road_s[k];
    r.ahead[k] = r.gap_s[k] > 0.0;
  }
  return r;
}

/// One timeline per non-ego vehicle against the ego vehicle.
inline std::vector<RelationTimeline> compute_relations(
  const RoadModel & road, const std::vector<LaneTrack> & tracks, const std::string & ego_id)
{
  const auto ego = std::find_if(
    tracks.begin(), tracks.end(), [&](const LaneTrack & t) { return t.vehicle_id == ego_id; });
  if (ego == tracks.end()) {
    throw ValidationError(fmt::format("relations: unknown ego vehicle '{}'", ego_id));
  }
  std::vector<RelationTimeline> out;
  for (const auto & t : tracks) {
    if (t.vehicle_id != ego_id) {
      out.push_back(compute_relation(road, t, *ego, true));
    }
  }
  return out;
}

/// Every ordered pair of distinct vehicles; pairs against the ego are flagged.
inline std::vector<RelationTimeline> compute_all_relations(
  const RoadModel & road, const std::vector<LaneTrack> & tracks, const std::string & ego_id)
{
  std::vector<RelationTimeline> out;
  for (const auto & subject : tracks) {
    for (const auto & reference : tracks) {
      if (&subject != &reference) {
        out.push_back(compute_relation(road, subject, reference, reference.vehicle_id == ego_id));
      }
    }
  }
  return out;
}

enum class PredicateType { same_lane, adjacent, adjacent_left, adjacent_right, ahead, behind, gap_below, gap_above };
enum class PredicateAt { start, end };

inline const char * to_string(PredicateType p)
{
  switch (p) {
    case PredicateType::same_lane:
      return "same_lane";
    case PredicateType::adjacent:
      return "adjacent";
    case PredicateType::adjacent_left:
      return "adjacent_left";
    case PredicateType::adjacent_right:
      return "adjacent_right";
    case PredicateType::ahead:
      return "ahead";
    case PredicateType::behind:
      return "behind";
    case PredicateType::gap_below:
      return "gap_below";
    case PredicateType::gap_above:
      return "gap_above";
  }
  return "unknown";
}

struct Predicate
{
  PredicateType type{PredicateType::same_lane};
  double value{0.0};
  PredicateAt at{PredicateAt::start};

  bool holds(const RelationTimeline & r, std::size_t k) const
  {
    switch (type) {
      case PredicateType::same_lane:
        return r.same_lane[k];
      case PredicateType::adjacent:
        return r.adjacent_left[k] || r.adjacent_right[k];
      case PredicateType::adjacent_left:
        return r.adjacent_left[k];
      case PredicateType::adjacent_right:
        return r.adjacent_right[k];
      case PredicateType::ahead:
        return r.ahead[k];
      case PredicateType::behind:
        return r.gap_s[k] < 0.0;
      case PredicateType::gap_below:
        return r.gap_s[k] < value;
      case PredicateType::gap_above:
        return r.gap_s[k] > value;
    }
    return false;
  }
};

/// Exact kind, any lane change, or anything.
struct KindMatcher
{
  enum class Mode { exact, lane_change, any };
  Mode mode{Mode::any};
  ActionKind kind{ActionKind::keep_lane};

  bool matches(ActionKind k) const
  {
    switch (mode) {
      case Mode::exact:
        return k == kind;
      case Mode::lane_change:
        return is_lane_change(k);
      case Mode::any:
        return true;
    }
    return false;
  }

  std::string name() const
  {
    if (mode == Mode::lane_change) {
      return "lane_change";
    }
    return mode == Mode::any ? "*" : to_string(kind);
  }

  static KindMatcher parse(std::string_view s)
  {
    if (s == "*") {
      return {Mode::any, ActionKind::keep_lane};
    }
    if (s == "lane_change") {
      return {Mode::lane_change, ActionKind::lane_change_left};
    }
    const auto k = action_kind_from_string(s);
    if (!k) {
      throw ValidationError(fmt::format("pattern: unknown action kind '{}'", s));
    }
    return {Mode::exact, *k};
  }
};

struct Step
{
  std::string actor{"actor"};
  KindMatcher action_kind;
  std::vector<Predicate> relation_predicates;
  double max_gap_to_next{2.0};
};

enum class ReferenceMode { ego, any };

struct Pattern
{
  std::string pattern_id;
  std::vector<Step> steps;
  ReferenceMode reference{ReferenceMode::ego};

  void validate() const
  {
    if (pattern_id.empty()) {
      throw ValidationError("pattern: empty pattern_id");
    }
    if (steps.empty()) {
      throw ValidationError(fmt::format("pattern '{}': needs at least one step", pattern_id));
    }
    for (const auto & st : steps) {
      if (!(st.max_gap_to_next >= 0.0)) {
        throw ValidationError(fmt::format("pattern '{}': max_gap_to_next must be >= 0", pattern_id));
      }
      if (st.actor.empty() || st.actor == "ego" || st.actor == "reference") {
        throw ValidationError(
          fmt::format("pattern '{}': actor variable '{}' is reserved or empty", pattern_id, st.actor));
      }
    }
  }

  /// Distinct actor variables in first-use order.
  std::vector<std::string> actor_variables() const
  {
    std::vector<std::string> vars;
    for (const auto & st : steps) {
      if (std::find(vars.begin(), vars.end(), st.actor) == vars.end()) {
        vars.push_back(st.actor);
      }
    }
    return vars;
  }
};

struct ActionRef
{
  std::string vehicle_id;
  Channel channel{Channel::lateral};
  std::size_t index{0};

  bool operator==(const ActionRef &) const = default;
};

struct ScenarioInstance
{
  std::string pattern_id;
  /// Actor variables plus "ego" (or "reference") mapped to vehicle ids.
  std::map<std::string, std::string> actors;
  double t_start{0.0};
  double t_end{0.0};
  std::vector<ActionRef> matched_refs;
  std::vector<Action> matched_actions;
  std::map<std::string, double> parameters;

  double duration() const { return t_end - t_start; }
};

namespace detail
{

/// A vehicle's actions of both channels, ordered by start time, lateral first on ties.
struct CandidateAction
{
  ActionRef ref;
  const Action * action;
};

inline std::vector<CandidateAction> ordered_actions(const ActionTimeline & tl)
{
  std::vector<CandidateAction> out;
  for (std::size_t i = 0; i < tl.lateral.size(); ++i) {
    out.push_back({{tl.vehicle_id, Channel::lateral, i}, &tl.lateral[i]});
  }
  for (std::size_t i = 0; i < tl.longitudinal.size(); ++i) {
    out.push_back({{tl.vehicle_id, Channel::longitudinal, i}, &tl.longitudinal[i]});
  }
  std::stable_sort(out.begin(), out.end(), [](const CandidateAction & a, const CandidateAction & b) {
    if (a.action->t_start != b.action->t_start) {
      return a.action->t_start < b.action->t_start;
    }
    return a.ref.channel == Channel::lateral && b.ref.channel == Channel::longitudinal;
  });
  return out;
}

inline bool predicates_hold(const Step & step, const Action & a, const RelationTimeline & rel)
{
  for (const auto & p : step.relation_predicates) {
    const double at = p.at == PredicateAt::start ? a.t_start : a.t_end;
    if (!p.holds(rel, rel.index_at(at))) {
      return false;
    }
  }
  return true;
}

/// Ordering between consecutive steps: strictly later start, and the gap from the previous
/// action's end to this start within `max_gap`.
inline bool follows(const Action & prev, const Action & next, double max_gap)
{
  return next.t_start > prev.t_start && next.t_start - prev.t_end <= max_gap;
}

inline double overlap_ratio(const ScenarioInstance & a, const ScenarioInstance & b)
{
  const double overlap = std::min(a.t_end, b.t_end) - std::max(a.t_start, b.t_start);
  const double shorter = std::min(a.duration(), b.duration());
  if (shorter <= 0.0) {
    return overlap >= 0.0 ? 1.0 : 0.0;
  }
  return std::max(0.0, overlap) / shorter;
}

}  // namespace detail

/// Drops later instances that share all bindings with an earlier kept one and overlap it by at
/// least half of the shorter duration. Input must already be in output order.
inline std::vector<ScenarioInstance> deduplicate(std::vector<ScenarioInstance> in)
{
  std::vector<ScenarioInstance> kept;
  for (auto & inst : in) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const ScenarioInstance & k) {
      return k.pattern_id == inst.pattern_id && k.actors == inst.actors &&
             detail::overlap_ratio(k, inst) >= 0.5;
    });
    if (!dup) {
      kept.push_back(std::move(inst));
    }
  }
  return kept;
}

inline ScenarioInstance make_instance(
  const Pattern & p, std::map<std::string, std::string> actors,
  const std::vector<detail::CandidateAction> & chosen)
{
  ScenarioInstance inst;
  inst.pattern_id = p.pattern_id;
  inst.actors = std::move(actors);
  inst.t_start = chosen.front().action->t_start;
  inst.t_end = chosen.front().action->t_end;
  for (const auto & c : chosen) {
    inst.t_end = std::max(inst.t_end, c.action->t_end);
    inst.matched_refs.push_back(c.ref);
    inst.matched_actions.push_back(*c.action);
  }
  return inst;
}

/// Sorts by start time, then end time, then bindings, so output order never depends on
/// enumeration order.
inline void sort_instances(std::vector<ScenarioInstance> & v)
{
  std::stable_sort(v.begin(), v.end(), [](const ScenarioInstance & a, const ScenarioInstance & b) {
    if (a.t_start != b.t_start) {
      return a.t_start < b.t_start;
    }
    if (a.t_end != b.t_end) {
      return a.t_end < b.t_end;
    }
    return a.actors < b.actors;
  });
}

/// Left-to-right sequence matching with backtracking. For every actor binding and every
/// admissible first action, the earliest complete match is kept; near-duplicates are then
/// removed.
inline std::vector<ScenarioInstance> match_pattern(
  const Pattern & p, const std::vector<ActionTimeline> & timelines,
  const std::vector<RelationTimeline> & relations)
{
  p.validate();
  std::map<std::string, std::vector<detail::CandidateAction>> actions_of;
  std::vector<std::string> vehicles;
  for (const auto & tl : timelines) {
    actions_of[tl.vehicle_id] = detail::ordered_actions(tl);
    vehicles.push_back(tl.vehicle_id);
  }
  // Usable references and, per reference, relations keyed by subject.
  std::vector<std::string> references;
  std::map<std::string, std::map<std::string, const RelationTimeline *>> rel;
  for (const auto & r : relations) {
    if (p.reference == ReferenceMode::ego && !r.reference_is_ego) {
      continue;
    }
    if (!actions_of.count(r.subject)) {
      continue;
    }
    if (!rel.count(r.reference)) {
      references.push_back(r.reference);
    }
    rel[r.reference][r.subject] = &r;
  }
  const auto vars = p.actor_variables();
  const std::string ref_key = p.reference == ReferenceMode::ego ? "ego" : "reference";

  std::vector<ScenarioInstance> found;
  for (const auto & reference : references) {
    const auto & rel_of = rel[reference];
    std::vector<std::string> pool;
    for (const auto & v : vehicles) {
      if (v != reference && rel_of.count(v)) {
        pool.push_back(v);
      }
    }
    std::map<std::string, std::string> binding;
    std::function<void(std::size_t)> bind = [&](std::size_t vi) {
      if (vi == vars.size()) {
        std::vector<detail::CandidateAction> chosen;
        std::function<bool(std::size_t)> extend = [&](std::size_t si) -> bool {
          if (si == p.steps.size()) {
            return true;
          }
          const Step & step = p.steps[si];
          const auto & vid = binding.at(step.actor);
          for (const auto & c : actions_of.at(vid)) {
            if (!step.action_kind.matches(c.action->kind)) {
              continue;
            }
            if (si > 0 && !detail::follows(*chosen.back().action, *c.action, p.steps[si - 1].max_gap_to_next)) {
              continue;
            }
            if (!detail::predicates_hold(step, *c.action, *rel_of.at(vid))) {
              continue;
            }
            chosen.push_back(c);
            if (extend(si + 1)) {
              return true;
            }
            chosen.pop_back();
          }
          return false;
        };
        const Step & first = p.steps.front();
        const auto & first_vid = binding.at(first.actor);
        for (const auto & c : actions_of.at(first_vid)) {
          if (!first.action_kind.matches(c.action->kind) ||
              !detail::predicates_hold(first, *c.action, *rel_of.at(first_vid))) {
            continue;
          }
          chosen.assign(1, c);
          if (extend(1)) {
            auto actors = binding;
            actors[ref_key] = reference;
            found.push_back(make_instance(p, std::move(actors), chosen));
          }
        }
        return;
      }
      for (const auto & v : pool) {
        const bool used = std::any_of(
          binding.begin(), binding.end(), [&](const auto & kv) { return kv.second == v; });
        if (used) {
          continue;
        }
        binding[vars[vi]] = v;
        bind(vi + 1);
        binding.erase(vars[vi]);
      }
    };
    bind(0);
  }
  sort_instances(found);
  return deduplicate(std::move(found));
}

inline Step make_step(
  KindMatcher kind, std::vector<Predicate> predicates, double max_gap_to_next = 2.0,
  std::string actor = "actor")
{
  return {std::move(actor), kind, std::move(predicates), max_gap_to_next};
}

struct BuiltinOptions
{
  double cut_in_gap{50.0};
  double decelerate_gap{2.0};
};

inline std::vector<Pattern> builtin_patterns(const BuiltinOptions & opt = {})
{
  using K = KindMatcher;
  const K lane_change{K::Mode::lane_change, ActionKind::lane_change_left};
  const Predicate start_adjacent{PredicateType::adjacent, 0.0, PredicateAt::start};
  const Predicate end_same{PredicateType::same_lane, 0.0, PredicateAt::end};
  const Predicate end_ahead{PredicateType::ahead, 0.0, PredicateAt::end};
  const Predicate end_close{PredicateType::gap_below, opt.cut_in_gap, PredicateAt::end};
  const std::vector<Predicate> cut_in_guard{start_adjacent, end_same, end_ahead, end_close};

  std::vector<Pattern> out;
  out.push_back({"cut_in", {make_step(lane_change, cut_in_guard)}, ReferenceMode::ego});
  out.push_back(
    {"cut_in_decelerate",
     {make_step(lane_change, cut_in_guard, opt.decelerate_gap),
      make_step(K{K::Mode::exact, ActionKind::decelerate}, {})},
     ReferenceMode::ego});
  out.push_back(
    {"cut_out",
     {make_step(
       lane_change,
       {{PredicateType::same_lane, 0.0, PredicateAt::start},
        {PredicateType::ahead, 0.0, PredicateAt::start},
        {PredicateType::adjacent, 0.0, PredicateAt::end}})},
     ReferenceMode::ego});
  out.push_back(
    {"overtake",
     {make_step(
       K{K::Mode::exact, ActionKind::keep_lane},
       {start_adjacent,
        {PredicateType::behind, 0.0, PredicateAt::start},
        {PredicateType::adjacent, 0.0, PredicateAt::end},
        {PredicateType::ahead, 0.0, PredicateAt::end}})},
     ReferenceMode::any});
  out.push_back({"lane_change", {make_step(lane_change, {})}, ReferenceMode::ego});
  return out;
}

inline std::optional<Pattern> find_pattern(const std::vector<Pattern> & patterns, std::string_view id)
{
  for (const auto & p : patterns) {
    if (p.pattern_id == id) {
      return p;
    }
  }
  return std::nullopt;
}

inline PredicateType predicate_type_from_string(std::string_view s)
{
  for (auto t :
       {PredicateType::same_lane, PredicateType::adjacent, PredicateType::adjacent_left,
        PredicateType::adjacent_right, PredicateType::ahead, PredicateType::behind,
        PredicateType::gap_below, PredicateType::gap_above}) {
    if (s == to_string(t)) {
      return t;
    }
  }
  throw ValidationError(fmt::format("pattern: unknown predicate '{}'", s));
}

inline Pattern pattern_from_json(const nlohmann::json & j)
{
  Pattern p;
  try {
    p.pattern_id = j.at("pattern_id").get<std::string>();
    const auto ref = j.value("reference", std::string("ego"));
    if (ref != "ego" && ref != "any") {
      throw ValidationError(fmt::format("pattern '{}': reference must be ego|any", p.pattern_id));
    }
    p.reference = ref == "ego" ? ReferenceMode::ego : ReferenceMode::any;
    for (const auto & js : j.at("steps")) {
      Step st;
      st.actor = js.value("actor", std::string("actor"));
      st.action_kind = KindMatcher::parse(js.value("action_kind", std::string("*")));
      st.max_gap_to_next = js.value("max_gap_to_next", 2.0);
      for (const auto & jp : js.value("relation_predicates", nlohmann::json::array())) {
        Predicate pr;
        pr.type = predicate_type_from_string(jp.at("type").get<std::string>());
        pr.value = jp.value("value", 0.0);
        const auto at = jp.value("at", std::string("start"));
        if (at != "start" && at != "end") {
          throw ValidationError(fmt::format("pattern '{}': predicate at must be start|end", p.pattern_id));
        }
        pr.at = at == "start" ? PredicateAt::start : PredicateAt::end;
        st.relation_predicates.push_back(pr);
      }
      p.steps.push_back(std::move(st));
    }
  } catch (const nlohmann::json::exception & e) {
    throw ValidationError(fmt::format("pattern JSON: {}", e.what()));
  }
  p.validate();
  return p;
}

/// Accepts one pattern object or an array of them.
inline std::vector<Pattern> patterns_from_json(const nlohmann::json & j)
{
  std::vector<Pattern> out;
  if (j.is_array()) {
    for (const auto & e : j) {
      out.push_back(pattern_from_json(e));
    }
  } else {
    out.push_back(pattern_from_json(j));
  }
  return out;
}

inline nlohmann::json to_json(const Pattern & p)
{
  nlohmann::json steps = nlohmann::json::array();
  for (const auto & st : p.steps) {
    nlohmann::json preds = nlohmann::json::array();
    for (const auto & pr : st.relation_predicates) {
      preds.push_back(
        {{"type", to_string(pr.type)}, {"value", pr.value}, {"at", pr.at == PredicateAt::start ? "start" : "end"}});
    }
    steps.push_back(
      {{"actor", st.actor}, {"action_kind", st.action_kind.name()}, {"relation_predicates", preds},
       {"max_gap_to_next", st.max_gap_to_next}});
  }
  return {
    {"pattern_id", p.pattern_id}, {"reference", p.reference == ReferenceMode::ego ? "ego" : "any"},
    {"steps", steps}};
}

inline nlohmann::json to_json(const ScenarioInstance & inst)
{
  nlohmann::json actions = nlohmann::json::array();
  for (std::size_t i = 0; i < inst.matched_actions.size(); ++i) {
    auto j = to_json(inst.matched_actions[i]);
    j["index"] = inst.matched_refs[i].index;
    actions.push_back(std::move(j));
  }
  return {
    {"pattern_id", inst.pattern_id}, {"actors", inst.actors}, {"t_start", inst.t_start},
    {"t_end", inst.t_end}, {"matched_actions", actions}, {"parameters", inst.parameters}};
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__PATTERNS_HPP_
