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

#ifndef SCENARIO_ABSTRACTION__STATISTICS_HPP_
#define SCENARIO_ABSTRACTION__STATISTICS_HPP_

#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/patterns.hpp"
#include "scenario_abstraction/quantfit.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace scenario_abstraction
{

/// Column-oriented parameter table, one row per (instance, actor).
struct ParameterTable
{
  std::vector<std::string> column_names;
  std::map<std::string, std::vector<double>> columns;
  std::vector<std::string> key_names{"scenario_type", "speed_bucket"};
  std::map<std::string, std::vector<std::string>> keys;
  std::vector<std::size_t> instance_index;
  std::vector<std::string> actor;
  /// Rows skipped because a parameter was undefined.
  std::size_t dropped{0};

  std::size_t rows() const { return instance_index.size(); }

  const std::vector<double> & column(const std::string & name) const
  {
    auto it = columns.find(name);
    if (it == columns.end()) {
      throw ValidationError(fmt::format("parameter table has no column '{}'", name));
    }
    return it->second;
  }

  const std::vector<std::string> & key(const std::string & name) const
  {
    auto it = keys.find(name);
    if (it == keys.end()) {
      throw ValidationError(fmt::format("parameter table has no key '{}'", name));
    }
    return it->second;
  }

  void add_column(const std::string & name)
  {
    column_names.push_back(name);
    columns[name];
  }
};

struct ExtractOptions
{
  double speed_bucket_width{5.0};
};

inline std::vector<std::string> default_parameter_columns()
{
  std::vector<std::string> names{"lane_change_duration", "t_displacement", "mean_speed", "cut_in_gap"};
  for (int k = 0; k < 6; ++k) {
    names.push_back(fmt::format("a{}", k));
  }
  for (int k = 0; k < 6; ++k) {
    names.push_back(fmt::format("post_a{}", k));
  }
  return names;
}

/// Parameters of every actor's first lane change in every instance. Actors without a lane
/// change in the instance have no defined shape parameters; their rows are dropped.
inline ParameterTable extract_parameters(
  const std::vector<ScenarioInstance> & instances, const std::vector<AbstractedTrack> & tracks,
  const ExtractOptions & opt = {})
{
  if (!(opt.speed_bucket_width > 0.0)) {
    throw ValidationError("speed_bucket_width must be positive");
  }
  ParameterTable table;
  for (const auto & name : default_parameter_columns()) {
    table.add_column(name);
  }
  for (const auto & k : table.key_names) {
    table.keys[k];
  }
  std::map<std::string, const AbstractedTrack *> by_id;
  for (const auto & t : tracks) {
    by_id[t.vehicle_id] = &t;
  }
  auto resolve = [&](const std::string & vid) -> const AbstractedTrack & {
    auto it = by_id.find(vid);
    if (it == by_id.end()) {
      throw ValidationError(fmt::format("instance references unknown vehicle '{}'", vid));
    }
    return *it->second;
  };

  for (std::size_t ii = 0; ii < instances.size(); ++ii) {
    const auto & inst = instances[ii];
    for (std::size_t r = 0; r < inst.matched_refs.size(); ++r) {
      const auto & ref = inst.matched_refs[r];
      const auto & tr = resolve(ref.vehicle_id);
      if (ref.index >= tr.fits(ref.channel).size()) {
        throw ValidationError(fmt::format(
          "instance {}: {} action {} of '{}' does not exist", ii, to_string(ref.channel), ref.index,
          ref.vehicle_id));
      }
    }
    std::string reference;
    for (const auto & key : {"ego", "reference"}) {
      if (inst.actors.count(key)) {
        reference = inst.actors.at(key);
      }
    }
    for (const auto & [var, vid] : inst.actors) {
      if (var == "ego" || var == "reference") {
        continue;
      }
      const FittedAction * lc = nullptr;
      for (const auto & ref : inst.matched_refs) {
        if (ref.vehicle_id == vid && ref.channel == Channel::lateral) {
          const auto & fa = resolve(vid).lateral_fits[ref.index];
          if (is_lane_change(fa.action.kind) && fa.segments.size() == 2) {
            lc = &fa;
            break;
          }
        }
      }
      if (!lc || reference.empty()) {
        ++table.dropped;
        continue;
      }
      const auto & tr = resolve(vid);
      const TrackEvaluator eval(tr);
      const Action & a = lc->action;
      const double duration = a.duration();
      const auto start = eval.state_at(a.t_start);
      const auto end = eval.state_at(a.t_end);
      const double mean_speed = (end.road_s - start.road_s) / duration;
      const TrackEvaluator ref_eval(resolve(reference));
      const double gap = end.road_s - ref_eval.state_at(a.t_end).road_s;
      double displacement = 0.0;
      for (const auto & seg : lc->segments) {
        displacement += eval_poly(seg, 1.0) - eval_poly(seg, 0.0);
      }
      std::vector<double> row{duration, std::abs(displacement), mean_speed, gap};
      for (double c : lc->segments[0].a) {
        row.push_back(c);
      }
      for (double c : lc->segments[1].a) {
        row.push_back(c);
      }
      if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) {
        ++table.dropped;
        continue;
      }
      for (std::size_t c = 0; c < row.size(); ++c) {
        table.columns[table.column_names[c]].push_back(row[c]);
      }
      table.keys["scenario_type"].push_back(inst.pattern_id);
      table.keys["speed_bucket"].push_back(
        fmt::format("{}", static_cast<long long>(std::floor(mean_speed / opt.speed_bucket_width))));
      table.instance_index.push_back(ii);
      table.actor.push_back(vid);
    }
  }
  return table;
}

/// Copies each instance's first row into its `parameters` map.
inline void attach_parameters(std::vector<ScenarioInstance> & instances, const ParameterTable & table)
{
  for (std::size_t r = table.rows(); r-- > 0;) {
    auto & params = instances.at(table.instance_index[r]).parameters;
    for (const auto & name : table.column_names) {
      params[name] = table.columns.at(name)[r];
    }
  }
}

inline void write_parameter_csv(std::ostream & out, const ParameterTable & table)
{
  out << "instance,actor";
  for (const auto & k : table.key_names) {
    out << ',' << k;
  }
  for (const auto & c : table.column_names) {
    out << ',' << c;
  }
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << table.instance_index[r] << ',' << table.actor[r];
    for (const auto & k : table.key_names) {
      out << ',' << table.keys.at(k)[r];
    }
    for (const auto & c : table.column_names) {
      out << ',' << fmt::format("{}", table.columns.at(c)[r]);
    }
    out << '\n';
  }
}

struct Histogram
{
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  std::size_t total_n{0};
  std::size_t underflow{0};
  std::size_t overflow{0};
  double mean{0.0};
  /// Unbiased; zero for a single value.
  double variance{0.0};
};

namespace detail
{

inline void require_values(const std::vector<double> & v)
{
  if (v.empty()) {
    throw ValidationError("histogram: empty column");
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw ValidationError("histogram: non-finite value in column");
    }
  }
}

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double> & sorted, double q)
{
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins)
{
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

}  // namespace detail

inline Histogram histogram(const std::vector<double> & column, const std::vector<double> & edges)
{
  detail::require_values(column);
  if (edges.size() < 2) {
    throw ValidationError("histogram: need at least two bin edges");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw ValidationError("histogram: bin edges must be strictly increasing");
    }
  }
  Histogram h;
  h.bin_edges = edges;
  h.counts.assign(edges.size() - 1, 0);
  h.total_n = column.size();
  double sum = 0.0;
  for (double v : column) {
    sum += v;
    if (v < edges.front()) {
      ++h.underflow;
    } else if (v > edges.back()) {
      ++h.overflow;
    } else if (v == edges.back()) {
      ++h.counts.back();
    } else {
      const auto it = std::upper_bound(edges.begin(), edges.end(), v);
      ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
  }
  h.mean = sum / static_cast<double>(column.size());
  double sq = 0.0;
  for (double v : column) {
    sq += (v - h.mean) * (v - h.mean);
  }
  h.variance = column.size() > 1 ? sq / static_cast<double>(column.size() - 1) : 0.0;
  return h;
}

/// Edges chosen by the Freedman-Diaconis rule, falling back to sqrt(n) bins when the
/// interquartile range vanishes. A constant column gets one unit-wide bin around the value.
inline std::vector<double> auto_edges(const std::vector<double> & column, std::size_t max_bins = 1000)
{
  detail::require_values(column);
  std::vector<double> sorted = column;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (lo == hi) {
    return {lo - 0.5, lo + 0.5};
  }
  const double n = static_cast<double>(sorted.size());
  const double iqr = detail::quantile_sorted(sorted, 0.75) - detail::quantile_sorted(sorted, 0.25);
  std::size_t bins = 0;
  if (iqr > 0.0) {
    const double width = 2.0 * iqr / std::cbrt(n);
    bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
  } else {
    bins = static_cast<std::size_t>(std::ceil(std::sqrt(n)));
  }
  bins = std::clamp<std::size_t>(bins, 1, max_bins);
  return detail::uniform_edges(lo, hi, bins);
}

inline Histogram histogram(const std::vector<double> & column, std::size_t bins)
{
  detail::require_values(column);
  if (bins < 1) {
    throw ValidationError("histogram: bins must be >= 1");
  }
  const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
  if (*lo_it == *hi_it) {
    return histogram(column, std::vector<double>{*lo_it - 0.5, *lo_it + 0.5});
  }
  return histogram(column, detail::uniform_edges(*lo_it, *hi_it, bins));
}

inline Histogram histogram(const std::vector<double> & column)
{
  return histogram(column, auto_edges(column));
}

struct CorrelationMatrix
{
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;

  double at(const std::string & a, const std::string & b) const
  {
    auto idx = [&](const std::string & n) {
      auto it = std::find(names.begin(), names.end(), n);
      if (it == names.end()) {
        throw ValidationError(fmt::format("correlation matrix has no column '{}'", n));
      }
      return static_cast<std::size_t>(it - names.begin());
    };
    return values[idx(a)][idx(b)];
  }
};

/// Pearson correlation of two equally long series; caller guarantees nonzero variances.
inline double pearson(const std::vector<double> & x, const std::vector<double> & y)
{
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline CorrelationMatrix correlation_matrix(const ParameterTable & table, const std::vector<std::string> & names)
{
  if (table.rows() < 2) {
    throw ValidationError(fmt::format("correlation needs at least 2 rows, table has {}", table.rows()));
  }
  for (const auto & n : names) {
    const auto & c = table.column(n);
    if (std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); })) {
      throw ValidationError(fmt::format("correlation: column '{}' has zero variance", n));
    }
  }
  CorrelationMatrix m;
  m.names = names;
  m.values.assign(names.size(), std::vector<double>(names.size(), 1.0));
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      const double r = pearson(table.column(names[i]), table.column(names[j]));
      m.values[i][j] = r;
      m.values[j][i] = r;
    }
  }
  return m;
}

/// Histograms of `target` per group of `group_by` key values, with edges shared across
/// groups. Group labels join the key values with '|'.
inline std::map<std::string, Histogram> conditional_distribution(
  const ParameterTable & table, const std::vector<std::string> & group_by, const std::string & target)
{
  const auto & values = table.column(target);
  std::vector<const std::vector<std::string> *> key_cols;
  for (const auto & k : group_by) {
    key_cols.push_back(&table.key(k));
  }
  std::map<std::string, Histogram> out;
  if (values.empty()) {
    return out;
  }
  const auto edges = auto_edges(values);
  std::map<std::string, std::vector<double>> groups;
  for (std::size_t r = 0; r < values.size(); ++r) {
    std::string label;
    for (std::size_t k = 0; k < key_cols.size(); ++k) {
      label += (k ? "|" : "") + (*key_cols[k])[r];
    }
    groups[label].push_back(values[r]);
  }
  for (const auto & [label, vals] : groups) {
    out.emplace(label, histogram(vals, edges));
  }
  return out;
}

inline nlohmann::json to_json(const Histogram & h)
{
  return {
    {"bin_edges", h.bin_edges}, {"counts", h.counts}, {"total_n", h.total_n},
    {"underflow", h.underflow}, {"overflow", h.overflow}, {"mean", h.mean}, {"variance", h.variance}};
}

inline nlohmann::json to_json(const CorrelationMatrix & m)
{
  return {{"names", m.names}, {"values", m.values}};
}

struct StatsOptions
{
  std::vector<std::string> group_by{"scenario_type"};
  std::vector<std::string> targets{"lane_change_duration", "mean_speed"};
  /// Zero selects automatic binning.
  std::size_t bins{0};
};

/// Summary report: per-column histograms, correlations over the non-constant columns, and
/// conditional distributions of the target columns.
inline nlohmann::json stats_report(const ParameterTable & table, const StatsOptions & opt = {})
{
  nlohmann::json j;
  j["rows"] = table.rows();
  j["dropped"] = table.dropped;
  j["histograms"] = nlohmann::json::object();
  std::vector<std::string> varying;
  for (const auto & name : table.column_names) {
    const auto & c = table.column(name);
    if (c.empty()) {
      continue;
    }
    j["histograms"][name] = to_json(opt.bins ? histogram(c, opt.bins) : histogram(c));
    if (!std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); })) {
      varying.push_back(name);
    }
  }
  if (table.rows() >= 2 && varying.size() >= 2) {
    j["correlation"] = to_json(correlation_matrix(table, varying));
  } else {
    j["correlation"] = nullptr;
  }
  j["conditional"] = nlohmann::json::object();
  for (const auto & target : opt.targets) {
    nlohmann::json groups = nlohmann::json::object();
    for (const auto & [label, h] : conditional_distribution(table, opt.group_by, target)) {
      groups[label] = to_json(h);
    }
    j["conditional"][target] = std::move(groups);
  }
  j["group_by"] = opt.group_by;
  return j;
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__STATISTICS_HPP_
