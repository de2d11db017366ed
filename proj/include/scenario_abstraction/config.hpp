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

// Flat TOML-style configuration: `[section]` headers, `key = value` lines and `#` comments.
// Values are quoted strings, numbers, booleans or one-line arrays of those.

#ifndef SCENARIO_ABSTRACTION__CONFIG_HPP_
#define SCENARIO_ABSTRACTION__CONFIG_HPP_

#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/quantfit.hpp"
#include "scenario_abstraction/segmentation.hpp"
#include "scenario_abstraction/statistics.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace scenario_abstraction
{

struct ConfigValue
{
  using Scalar = std::variant<std::string, double, bool>;
  std::vector<Scalar> items;
  bool is_array{false};
  std::size_t line{0};
};

class ConfigDocument
{
public:
  static ConfigDocument parse(std::istream & in, const std::string & source = "config")
  {
    ConfigDocument doc;
    doc.source_ = source;
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string line = strip_comment(raw);
      const auto body = trim(line);
      if (body.empty()) {
        continue;
      }
      if (body.front() == '[') {
        if (body.back() != ']' || body.size() < 3) {
          throw doc.error(line_no, "malformed section header");
        }
        section = std::string(trim(body.substr(1, body.size() - 2)));
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) {
        throw doc.error(line_no, "expected 'key = value'");
      }
      const auto key = std::string(trim(body.substr(0, eq)));
      if (key.empty()) {
        throw doc.error(line_no, "empty key");
      }
      const std::string full = section.empty() ? key : section + "." + key;
      if (doc.values_.count(full)) {
        throw doc.error(line_no, fmt::format("duplicate key '{}'", full));
      }
      auto value = doc.parse_value(trim(body.substr(eq + 1)), line_no);
      value.line = line_no;
      doc.values_[full] = std::move(value);
    }
    return doc;
  }

  bool has(const std::string & key) const { return values_.count(key) > 0; }

  std::vector<std::string> keys() const
  {
    std::vector<std::string> out;
    for (const auto & kv : values_) {
      out.push_back(kv.first);
    }
    return out;
  }

  std::optional<std::string> get_string(const std::string & key) const
  {
    return scalar<std::string>(key, "a string");
  }
  std::optional<double> get_double(const std::string & key) const { return scalar<double>(key, "a number"); }
  std::optional<bool> get_bool(const std::string & key) const { return scalar<bool>(key, "a boolean"); }

  std::optional<std::int64_t> get_int(const std::string & key) const
  {
    const auto d = get_double(key);
    if (!d) {
      return std::nullopt;
    }
    if (*d != std::floor(*d)) {
      throw error(values_.at(key).line, fmt::format("'{}' must be an integer", key));
    }
    return static_cast<std::int64_t>(*d);
  }

  std::optional<std::vector<std::string>> get_string_list(const std::string & key) const
  {
    auto it = values_.find(key);
    if (it == values_.end()) {
      return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto & item : it->second.items) {
      if (!std::holds_alternative<std::string>(item)) {
        throw error(it->second.line, fmt::format("'{}' must be a list of strings", key));
      }
      out.push_back(std::get<std::string>(item));
    }
    return out;
  }

  ValidationError error(std::size_t line, const std::string & what) const
  {
    return ValidationError(fmt::format("{}:{}: {}", source_, line, what));
  }

private:
  static std::string strip_comment(const std::string & s)
  {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') {
        quoted = !quoted;
      } else if (s[i] == '#' && !quoted) {
        return s.substr(0, i);
      }
    }
    return s;
  }

  static std::string_view trim(std::string_view s)
  {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
      return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  ConfigValue::Scalar parse_scalar(std::string_view v, std::size_t line) const
  {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
      return std::string(v.substr(1, v.size() - 2));
    }
    if (v == "true" || v == "false") {
      return v == "true";
    }
    double d = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
      throw error(line, fmt::format("cannot parse value '{}'", v));
    }
    return d;
  }

  ConfigValue parse_value(std::string_view v, std::size_t line) const
  {
    ConfigValue out;
    if (v.empty()) {
      throw error(line, "missing value");
    }
    if (v.front() == '[') {
      if (v.back() != ']') {
        throw error(line, "unterminated array");
      }
      out.is_array = true;
      auto inner = trim(v.substr(1, v.size() - 2));
      while (!inner.empty()) {
        std::size_t end = 0;
        if (inner.front() == '"') {
          end = inner.find('"', 1);
          if (end == std::string_view::npos) {
            throw error(line, "unterminated string in array");
          }
          ++end;
        } else {
          end = std::min(inner.find(','), inner.size());
        }
        out.items.push_back(parse_scalar(trim(inner.substr(0, end)), line));
        inner = trim(inner.substr(end));
        if (!inner.empty()) {
          if (inner.front() != ',') {
            throw error(line, "expected ',' in array");
          }
          inner = trim(inner.substr(1));
        }
      }
      return out;
    }
    out.items.push_back(parse_scalar(v, line));
    return out;
  }

  template<class T>
  std::optional<T> scalar(const std::string & key, const char * what) const
  {
    auto it = values_.find(key);
    if (it == values_.end()) {
      return std::nullopt;
    }
    if (it->second.is_array || !std::holds_alternative<T>(it->second.items.front())) {
      throw error(it->second.line, fmt::format("'{}' must be {}", key, what));
    }
    return std::get<T>(it->second.items.front());
  }

  std::string source_;
  std::map<std::string, ConfigValue> values_;
};

struct PipelineConfig
{
  std::string road_path;
  std::string input_path;
  std::string out_dir{"out"};
  std::string preset;
  std::string script_path;
  std::uint64_t seed{0};
  std::size_t workers{1};
  bool no_timestamp{false};
  double noise_sigma_pos{0.0};
  double noise_sigma_speed{0.0};

  SegmentationConfig segmentation;
  FitOptions fit;
  double dt{0.1};

  std::string pattern_file;
  std::vector<std::string> builtin_patterns;
  double cut_in_gap{50.0};
  double decelerate_gap{2.0};

  StatsOptions stats;
  double speed_bucket_width{5.0};

  void validate() const
  {
    segmentation.validate();
    if (fit.degree < 0 || fit.degree > max_poly_degree) {
      throw ValidationError(fmt::format("fit.degree {} outside [0, 5]", fit.degree));
    }
    if (!(dt > 0.0)) {
      throw ValidationError("fit.dt must be positive");
    }
    if (workers < 1) {
      throw ValidationError("run.workers must be >= 1");
    }
    if (noise_sigma_pos < 0.0 || noise_sigma_speed < 0.0) {
      throw ValidationError("noise sigmas must be non-negative");
    }
    if (!(cut_in_gap > 0.0) || !(decelerate_gap >= 0.0)) {
      throw ValidationError("patterns.cut_in_gap must be > 0 and patterns.decelerate_gap >= 0");
    }
    if (!(speed_bucket_width > 0.0)) {
      throw ValidationError("stats.speed_bucket_width must be positive");
    }
  }
};

/// Overlays the document onto `cfg`. Unknown keys are rejected so typos do not pass silently.
inline void apply_config(const ConfigDocument & doc, PipelineConfig & cfg)
{
  static const std::set<std::string> known{
    "paths.road", "paths.input", "paths.out", "paths.script", "run.preset", "run.seed",
    "run.workers", "run.no_timestamp", "run.noise_sigma_pos", "run.noise_sigma_speed",
    "segmentation.accel_threshold", "segmentation.standstill_speed",
    "segmentation.min_action_duration", "segmentation.lane_change_lat_rate",
    "segmentation.hysteresis_fraction", "segmentation.accel_smoothing_window",
    "segmentation.lateral_rate_window", "fit.degree", "fit.c1_continuity", "fit.dt",
    "patterns.file", "patterns.builtin", "patterns.cut_in_gap", "patterns.decelerate_gap",
    "stats.bins", "stats.group_by", "stats.targets", "stats.speed_bucket_width"};
  for (const auto & k : doc.keys()) {
    if (!known.count(k)) {
      throw ValidationError(fmt::format("config: unknown key '{}'", k));
    }
  }
  auto set = [](auto & target, const auto & value) {
    if (value) {
      target = static_cast<std::remove_reference_t<decltype(target)>>(*value);
    }
  };
  set(cfg.road_path, doc.get_string("paths.road"));
  set(cfg.input_path, doc.get_string("paths.input"));
  set(cfg.out_dir, doc.get_string("paths.out"));
  set(cfg.script_path, doc.get_string("paths.script"));
  set(cfg.preset, doc.get_string("run.preset"));
  if (const auto seed = doc.get_int("run.seed")) {
    if (*seed < 0) {
      throw ValidationError("run.seed must be non-negative");
    }
    cfg.seed = static_cast<std::uint64_t>(*seed);
  }
  if (const auto workers = doc.get_int("run.workers")) {
    if (*workers < 1) {
      throw ValidationError("run.workers must be >= 1");
    }
    cfg.workers = static_cast<std::size_t>(*workers);
  }
  set(cfg.no_timestamp, doc.get_bool("run.no_timestamp"));
  set(cfg.noise_sigma_pos, doc.get_double("run.noise_sigma_pos"));
  set(cfg.noise_sigma_speed, doc.get_double("run.noise_sigma_speed"));
  auto & seg = cfg.segmentation;
  set(seg.accel_threshold, doc.get_double("segmentation.accel_threshold"));
  set(seg.standstill_speed, doc.get_double("segmentation.standstill_speed"));
  set(seg.min_action_duration, doc.get_double("segmentation.min_action_duration"));
  set(seg.lane_change_lat_rate, doc.get_double("segmentation.lane_change_lat_rate"));
  set(seg.hysteresis_fraction, doc.get_double("segmentation.hysteresis_fraction"));
  set(seg.accel_smoothing_window, doc.get_double("segmentation.accel_smoothing_window"));
  set(seg.lateral_rate_window, doc.get_double("segmentation.lateral_rate_window"));
  set(cfg.fit.degree, doc.get_int("fit.degree"));
  set(cfg.fit.c1_continuity, doc.get_bool("fit.c1_continuity"));
  set(cfg.dt, doc.get_double("fit.dt"));
  set(cfg.pattern_file, doc.get_string("patterns.file"));
  set(cfg.builtin_patterns, doc.get_string_list("patterns.builtin"));
  set(cfg.cut_in_gap, doc.get_double("patterns.cut_in_gap"));
  set(cfg.decelerate_gap, doc.get_double("patterns.decelerate_gap"));
  if (const auto bins = doc.get_int("stats.bins")) {
    if (*bins < 0) {
      throw ValidationError("stats.bins must be >= 0");
    }
    cfg.stats.bins = static_cast<std::size_t>(*bins);
  }
  set(cfg.stats.group_by, doc.get_string_list("stats.group_by"));
  set(cfg.stats.targets, doc.get_string_list("stats.targets"));
  set(cfg.speed_bucket_width, doc.get_double("stats.speed_bucket_width"));
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__CONFIG_HPP_
