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

#ifndef SCENARIO_ABSTRACTION__QUANTFIT_HPP_
#define SCENARIO_ABSTRACTION__QUANTFIT_HPP_

#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/ingest.hpp"
#include "scenario_abstraction/segmentation.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scenario_abstraction
{

inline constexpr int max_poly_degree = 5;
inline constexpr std::size_t poly_coefficient_count = 6;

/// Degree-5 polynomial P(x) = a0 x^5 + a1 x^4 + a2 x^3 + a3 x^2 + a4 x + a5 over normalized
/// time x in [0, 1]. `duration` maps x back to seconds. A reduced `degree` d keeps
/// a0 .. a(4-d) at exactly zero.
struct PolyCoeffs
{
  std::array<double, poly_coefficient_count> a{};
  double duration{1.0};
  int degree{max_poly_degree};

  bool operator==(const PolyCoeffs &) const = default;
};

inline double eval_poly(const PolyCoeffs & c, double x)
{
  double v = 0.0;
  for (double coef : c.a) {
    v = v * x + coef;
  }
  return v;
}

/// dP/dx in normalized time.
inline double eval_poly_derivative(const PolyCoeffs & c, double x)
{
  double v = 0.0;
  for (std::size_t k = 0; k + 1 < poly_coefficient_count; ++k) {
    v = v * x + static_cast<double>(5 - k) * c.a[k];
  }
  return v;
}

/// Integral over [x0, x1] in physical units (scaled by the duration).
inline double integrate_poly(const PolyCoeffs & c, double x0, double x1)
{
  auto antiderivative = [&c](double x) {
    double v = 0.0;
    for (std::size_t k = 0; k < poly_coefficient_count; ++k) {
      v = v * x + c.a[k] / static_cast<double>(6 - k);
    }
    return v * x;
  };
  return c.duration * (antiderivative(x1) - antiderivative(x0));
}

enum class ConstraintKind { integral_equals, value_at_start, value_at_end, slope_at_start };

inline const char * to_string(ConstraintKind kind)
{
  switch (kind) {
    case ConstraintKind::integral_equals:
      return "integral_equals";
    case ConstraintKind::value_at_start:
      return "value_at_start";
    case ConstraintKind::value_at_end:
      return "value_at_end";
    case ConstraintKind::slope_at_start:
      return "slope_at_start";
  }
  return "unknown";
}

/// Linear equality `row . a = target` over the coefficients a0..a5.
struct LinearConstraint
{
  ConstraintKind kind{ConstraintKind::value_at_start};
  std::array<double, poly_coefficient_count> row{};
  double target{0.0};

  static LinearConstraint integral(double duration, double target)
  {
    LinearConstraint c{ConstraintKind::integral_equals, {}, target};
    for (std::size_t k = 0; k < poly_coefficient_count; ++k) {
      c.row[k] = duration / static_cast<double>(6 - k);
    }
    return c;
  }

  static LinearConstraint value_at_start(double target)
  {
    LinearConstraint c{ConstraintKind::value_at_start, {}, target};
    c.row[5] = 1.0;
    return c;
  }

  static LinearConstraint value_at_end(double target)
  {
    LinearConstraint c{ConstraintKind::value_at_end, {}, target};
    c.row.fill(1.0);
    return c;
  }

  /// Target is dP/dx at x = 0 in normalized units.
  static LinearConstraint slope_at_start(double target)
  {
    LinearConstraint c{ConstraintKind::slope_at_start, {}, target};
    c.row[4] = 1.0;
    return c;
  }

  double evaluate(const PolyCoeffs & p) const
  {
    double v = 0.0;
    for (std::size_t k = 0; k < poly_coefficient_count; ++k) {
      v += row[k] * p.a[k];
    }
    return v;
  }
};

struct ConstraintRecord
{
  ConstraintKind kind{ConstraintKind::value_at_start};
  double target{0.0};
  double achieved{0.0};
  /// Index of the segment the constraint applies to.
  std::size_t segment{0};

  bool satisfied(double rel_tol = 1e-9) const
  {
    return std::abs(achieved - target) <= rel_tol * std::max(1.0, std::abs(target));
  }
};

struct FitSample
{
  double x{0.0};
  double value{0.0};
};

struct FitResult
{
  PolyCoeffs coeffs;
  double rms_residual{0.0};
  std::vector<ConstraintRecord> records;
};

namespace detail
{

/// Row j holds the monomial coefficients (ascending powers) of the shifted Legendre
/// polynomial P_j(2x - 1).
inline Eigen::MatrixXd shifted_legendre_to_monomial(int degree)
{
  const int p = degree + 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (int n = 0; n < p; ++n) {
    // P~_n(x) = (-1)^n sum_k C(n,k) C(n+k,k) (-x)^k
    double binom_nk = 1.0;
    double binom_npk = 1.0;
    for (int k = 0; k <= n; ++k) {
      if (k > 0) {
        binom_nk = binom_nk * static_cast<double>(n - k + 1) / static_cast<double>(k);
        binom_npk = binom_npk * static_cast<double>(n + k) / static_cast<double>(k);
      }
      const double sign = ((n + k) % 2 == 0) ? 1.0 : -1.0;
      m(n, k) = sign * binom_nk * binom_npk;
    }
  }
  return m;
}

inline void shifted_legendre_values(double x, int degree, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out)
{
  const double u = 2.0 * x - 1.0;
  out(0) = 1.0;
  if (degree >= 1) {
    out(1) = u;
  }
  for (int j = 1; j < degree; ++j) {
    out(j + 1) = ((2.0 * j + 1.0) * u * out(j) - j * out(j - 1)) / (j + 1.0);
  }
}

}  // namespace detail

/// Degree used for `n_samples` samples under `n_constraints` equality constraints.
inline int effective_degree(int requested, std::size_t n_samples, std::size_t n_constraints)
{
  if (requested <= 0) {
    return 0;
  }
  const int by_samples = std::min(requested, static_cast<int>(n_samples) - 1);
  return std::min(requested, std::max({by_samples, static_cast<int>(n_constraints) - 1, 1}));
}

/// Least-squares polynomial fit under linear equality constraints. The bordered normal
/// equations are assembled in a shifted-Legendre basis and mapped back to monomials.
inline FitResult fit_constrained(
  std::span<const FitSample> samples, int degree, std::span<const LinearConstraint> constraints,
  double duration = 1.0)
{
  if (degree < 0 || degree > max_poly_degree) {
    throw FitError(fmt::format("fit_constrained: degree {} outside [0, 5]", degree));
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw FitError(fmt::format("fit_constrained: duration must be positive, got {}", duration));
  }
  const std::size_t n = samples.size();
  const std::size_t m = constraints.size();
  const int d = effective_degree(degree, n, m);
  const int p = d + 1;
  if (static_cast<int>(m) > p) {
    throw FitError(fmt::format(
      "fit_constrained: {} constraints exceed the {} coefficients of degree {}", m, p, d));
  }

  const Eigen::MatrixXd to_mono = detail::shifted_legendre_to_monomial(d);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd values(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    detail::shifted_legendre_values(samples[i].x, d, design.row(static_cast<Eigen::Index>(i)));
    values(static_cast<Eigen::Index>(i)) = samples[i].value;
  }

  // Constraint rows over ascending monomial powers 0..d, then in the Legendre basis.
  Eigen::MatrixXd mono_rows(static_cast<Eigen::Index>(m), p);
  Eigen::VectorXd targets(static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < m; ++r) {
    for (int k = 0; k < p; ++k) {
      mono_rows(static_cast<Eigen::Index>(r), k) = constraints[r].row[5 - k];
    }
    targets(static_cast<Eigen::Index>(r)) = constraints[r].target;
  }
  const Eigen::MatrixXd leg_rows = mono_rows * to_mono.transpose();
  if (m > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> rank_check(leg_rows);
    if (rank_check.rank() < static_cast<Eigen::Index>(m)) {
      throw FitError("fit_constrained: constraint set is rank-deficient");
    }
  }

  const Eigen::Index size = p + static_cast<Eigen::Index>(m);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(size, size);
  kkt.topLeftCorner(p, p) = design.transpose() * design;
  if (m > 0) {
    kkt.topRightCorner(p, static_cast<Eigen::Index>(m)) = leg_rows.transpose();
    kkt.bottomLeftCorner(static_cast<Eigen::Index>(m), p) = leg_rows;
  }
  Eigen::VectorXd rhs(size);
  rhs.head(p) = design.transpose() * values;
  rhs.tail(static_cast<Eigen::Index>(m)) = targets;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    throw FitError(fmt::format(
      "fit_constrained: {} samples cannot determine the {} free coefficients of degree {}", n,
      p - static_cast<int>(m), d));
  }
  Eigen::VectorXd solution = lu.solve(rhs);
  solution += lu.solve(rhs - kkt * solution);

  const Eigen::VectorXd mono = to_mono.transpose() * solution.head(p);
  FitResult result;
  result.coeffs.duration = duration;
  result.coeffs.degree = d;
  for (int k = 0; k < p; ++k) {
    result.coeffs.a[static_cast<std::size_t>(5 - k)] = mono(k);
  }
  for (const auto & c : constraints) {
    result.records.push_back({c.kind, c.target, c.evaluate(result.coeffs), 0});
  }
  double sq = 0.0;
  for (const auto & s : samples) {
    const double r = eval_poly(result.coeffs, s.x) - s.value;
    sq += r * r;
  }
  result.rms_residual = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  return result;
}

enum class SignalKind { s_velocity, t_offset };

inline const char * to_string(SignalKind s) { return s == SignalKind::s_velocity ? "s_velocity" : "t_offset"; }

/// Lane changes carry two segments split at the crossing; other actions one.
struct FittedAction
{
  Action action;
  SignalKind signal{SignalKind::s_velocity};
  std::vector<PolyCoeffs> segments;
  std::vector<ConstraintRecord> constraints;
  double rms_residual{0.0};
};

struct InitialState
{
  double s{0.0};
  double t{0.0};
  int lane_id{0};
  double road_s{0.0};

  bool operator==(const InitialState &) const = default;
};

struct AbstractedTrack
{
  std::string vehicle_id;
  Role role{Role::other};
  ActionTimeline timeline;
  /// Aligned with timeline.lateral and timeline.longitudinal respectively.
  std::vector<FittedAction> lateral_fits;
  std::vector<FittedAction> longitudinal_fits;
  InitialState initial_state;

  const std::vector<FittedAction> & fits(Channel c) const
  {
    return c == Channel::lateral ? lateral_fits : longitudinal_fits;
  }
};

struct FitOptions
{
  int degree{max_poly_degree};
  /// Also pin the first derivative across chained boundaries.
  bool c1_continuity{false};
};

namespace detail
{

struct IndexRange
{
  std::size_t first;
  std::size_t last;  // inclusive
};

inline IndexRange sample_range(const std::vector<double> & time, double from, double to)
{
  constexpr double eps = 1e-9;
  const auto lo = std::lower_bound(time.begin(), time.end(), from - eps);
  const auto hi = std::upper_bound(time.begin(), time.end(), to + eps);
  return {static_cast<std::size_t>(lo - time.begin()), static_cast<std::size_t>(hi - time.begin()) - 1};
}

inline std::vector<FitSample> collect(
  const std::vector<double> & time, const std::vector<double> & signal, std::size_t first,
  std::size_t last, double t_start, double duration)
{
  std::vector<FitSample> out;
  for (std::size_t i = first; i <= last && i < time.size(); ++i) {
    out.push_back({(time[i] - t_start) / duration, signal[i]});
  }
  return out;
}

inline std::vector<LinearConstraint> chain_constraints(
  const PolyCoeffs * prev, double duration, const FitOptions & opt)
{
  std::vector<LinearConstraint> out;
  if (prev) {
    out.push_back(LinearConstraint::value_at_start(eval_poly(*prev, 1.0)));
    if (opt.c1_continuity) {
      out.push_back(LinearConstraint::slope_at_start(
        eval_poly_derivative(*prev, 1.0) * duration / prev->duration));
    }
  }
  return out;
}

inline FitResult fit_segment(
  const std::vector<FitSample> & samples, const std::vector<LinearConstraint> & constraints,
  double duration, const FitOptions & opt, const Action & action)
{
  try {
    return fit_constrained(samples, opt.degree, constraints, duration);
  } catch (const FitError & e) {
    throw FitError(fmt::format(
      "vehicle '{}' {} action {} [{}, {}]: {}", action.vehicle_id, to_string(action.channel),
      to_string(action.kind), action.t_start, action.t_end, e.what()));
  }
}

inline double residual_rms(const std::vector<std::pair<PolyCoeffs, std::vector<FitSample>>> & parts)
{
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto & [coeffs, samples] : parts) {
    for (const auto & s : samples) {
      const double r = eval_poly(coeffs, s.x) - s.value;
      sq += r * r;
      ++n;
    }
  }
  return n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
}

}  // namespace detail

/// Fits every action of `timeline` against `track`. Longitudinal actions fit the speed with
/// the integral pinned to the travelled road distance; both channels chain C0 from one action
/// to the next, except across a lane-change frame switch.
inline AbstractedTrack abstract_track(
  const LaneTrack & track, const ActionTimeline & timeline, const FitOptions & opt = {})
{
  if (track.size() < 2) {
    throw FitError(fmt::format("abstract_track: track '{}' needs at least 2 samples", track.vehicle_id));
  }
  AbstractedTrack out;
  out.vehicle_id = track.vehicle_id;
  out.role = track.role;
  out.timeline = timeline;
  out.initial_state = {track.s.front(), track.t.front(), track.lane_id.front(), track.road_s.front()};

  const PolyCoeffs * prev = nullptr;
  out.longitudinal_fits.reserve(timeline.longitudinal.size());
  for (const auto & action : timeline.longitudinal) {
    const auto range = detail::sample_range(track.time, action.t_start, action.t_end);
    const double duration = action.duration();
    auto samples =
      detail::collect(track.time, track.speed, range.first, range.last, action.t_start, duration);
    auto constraints = detail::chain_constraints(prev, duration, opt);
    constraints.insert(
      constraints.begin(),
      LinearConstraint::integral(duration, track.road_s[range.last] - track.road_s[range.first]));
    auto fit = detail::fit_segment(samples, constraints, duration, opt, action);
    FittedAction fa{action, SignalKind::s_velocity, {fit.coeffs}, fit.records, fit.rms_residual};
    out.longitudinal_fits.push_back(std::move(fa));
    prev = &out.longitudinal_fits.back().segments.back();
  }

  prev = nullptr;
  out.lateral_fits.reserve(timeline.lateral.size());
  for (const auto & action : timeline.lateral) {
    const auto range = detail::sample_range(track.time, action.t_start, action.t_end);
    FittedAction fa{action, SignalKind::t_offset, {}, {}, 0.0};
    if (is_lane_change(action.kind) && action.crossing_time) {
      const double crossing = *action.crossing_time;
      const auto post = detail::sample_range(track.time, crossing, action.t_end);
      const double pre_duration = crossing - action.t_start;
      const double post_duration = action.t_end - crossing;
      if (!(pre_duration > 0.0) || !(post_duration > 0.0) || post.first == 0) {
        throw FitError(fmt::format(
          "vehicle '{}': lane change [{}, {}] has its crossing at {} on an edge", action.vehicle_id,
          action.t_start, action.t_end, crossing));
      }
      auto pre_samples =
        detail::collect(track.time, track.t, range.first, post.first - 1, action.t_start, pre_duration);
      auto pre_fit = detail::fit_segment(
        pre_samples, detail::chain_constraints(prev, pre_duration, opt), pre_duration, opt, action);
      auto post_samples =
        detail::collect(track.time, track.t, post.first, range.last, crossing, post_duration);
      auto post_fit = detail::fit_segment(post_samples, {}, post_duration, opt, action);
      fa.segments = {pre_fit.coeffs, post_fit.coeffs};
      fa.constraints = pre_fit.records;
      fa.rms_residual =
        detail::residual_rms({{pre_fit.coeffs, pre_samples}, {post_fit.coeffs, post_samples}});
    } else {
      const double duration = action.duration();
      auto samples =
        detail::collect(track.time, track.t, range.first, range.last, action.t_start, duration);
      auto fit = detail::fit_segment(
        samples, detail::chain_constraints(prev, duration, opt), duration, opt, action);
      fa.segments = {fit.coeffs};
      fa.constraints = fit.records;
      fa.rms_residual = fit.rms_residual;
    }
    out.lateral_fits.push_back(std::move(fa));
    prev = &out.lateral_fits.back().segments.back();
  }
  return out;
}

/// Kinematic state of one vehicle evaluated from its fitted actions.
struct TrackState
{
  double time{0.0};
  double s{0.0};
  double t{0.0};
  int lane_id{0};
  double speed{0.0};
  double road_s{0.0};
};

/// Closed-form evaluator for an AbstractedTrack. Road distance accumulates exact
/// per-action integrals, so it never drifts between action boundaries.
class TrackEvaluator
{
public:
  explicit TrackEvaluator(const AbstractedTrack & track) : track_(&track)
  {
    if (track.longitudinal_fits.empty() || track.lateral_fits.empty()) {
      throw ValidationError(fmt::format("track '{}' has no fitted actions", track.vehicle_id));
    }
    if (
      track.longitudinal_fits.size() != track.timeline.longitudinal.size() ||
      track.lateral_fits.size() != track.timeline.lateral.size()) {
      throw ValidationError(fmt::format("track '{}': fits and timeline differ", track.vehicle_id));
    }
    road_s_at_start_.push_back(track.initial_state.road_s);
    for (const auto & fa : track.longitudinal_fits) {
      road_s_at_start_.push_back(road_s_at_start_.back() + integrate_poly(fa.segments.front(), 0.0, 1.0));
    }
  }

  TrackState state_at(double time) const
  {
    const auto & tr = *track_;
    TrackState st;
    st.time = time;

    const std::size_t i = tr.timeline.index_at(Channel::longitudinal, time);
    const auto & lon = tr.longitudinal_fits[i];
    const auto & seg = lon.segments.front();
    const double x = std::clamp((time - lon.action.t_start) / seg.duration, 0.0, 1.0);
    st.speed = eval_poly(seg, x);
    st.road_s = road_s_at_start_[i] + integrate_poly(seg, 0.0, x);
    st.s = tr.initial_state.s + (st.road_s - tr.initial_state.road_s);

    const std::size_t j = tr.timeline.index_at(Channel::lateral, time);
    const auto & lat = tr.lateral_fits[j];
    if (lat.segments.size() == 2 && lat.action.crossing_time) {
      const double crossing = *lat.action.crossing_time;
      if (time < crossing) {
        const auto & pre = lat.segments[0];
        st.t = eval_poly(pre, std::clamp((time - lat.action.t_start) / pre.duration, 0.0, 1.0));
        st.lane_id = lat.action.lane_before;
      } else {
        const auto & post = lat.segments[1];
        st.t = eval_poly(post, std::clamp((time - crossing) / post.duration, 0.0, 1.0));
        st.lane_id = lat.action.lane_after;
      }
    } else {
      const auto & only = lat.segments.front();
      st.t = eval_poly(only, std::clamp((time - lat.action.t_start) / only.duration, 0.0, 1.0));
      st.lane_id = lat.action.lane_before;
    }
    return st;
  }

  /// Road distance at the end of longitudinal action `i`.
  double road_s_after(std::size_t i) const { return road_s_at_start_.at(i + 1); }

private:
  const AbstractedTrack * track_;
  std::vector<double> road_s_at_start_;
};

/// Sample times from `from` to `to` with step `dt`; the last sample lands on `to` when the
/// span is a whole number of steps.
inline std::vector<double> sample_grid(double from, double to, double dt)
{
  if (!(dt > 0.0)) {
    throw ValidationError(fmt::format("time step must be positive, got {}", dt));
  }
  std::vector<double> times;
  const double tol = 1e-9 * std::max(1.0, std::abs(to));
  for (std::size_t k = 0;; ++k) {
    const double time = from + static_cast<double>(k) * dt;
    if (time > to + tol) {
      break;
    }
    times.push_back(std::min(time, to));
  }
  return times;
}

/// Re-simulates the lane track over [from, to] at step `dt` from the fitted polynomials.
inline LaneTrack reconstruct(const AbstractedTrack & at, double dt, double from, double to)
{
  const TrackEvaluator eval(at);
  LaneTrack out;
  out.vehicle_id = at.vehicle_id;
  out.role = at.role;
  for (double time : sample_grid(from, to, dt)) {
    const auto st = eval.state_at(time);
    out.time.push_back(st.time);
    out.s.push_back(st.s);
    out.t.push_back(st.t);
    out.lane_id.push_back(st.lane_id);
    out.speed.push_back(st.speed);
    out.road_s.push_back(st.road_s);
  }
  for (const auto & a : at.timeline.lateral) {
    if (is_lane_change(a.kind) && a.crossing_time && *a.crossing_time >= from && *a.crossing_time <= to) {
      out.crossings.push_back(
        {*a.crossing_time, a.lane_before, a.lane_after,
         a.kind == ActionKind::lane_change_left ? Side::left : Side::right});
    }
  }
  return out;
}

inline LaneTrack reconstruct(const AbstractedTrack & at, double dt)
{
  return reconstruct(at, dt, at.timeline.t0, at.timeline.t1);
}

inline nlohmann::json to_json(const PolyCoeffs & c)
{
  return {{"a", c.a}, {"duration", c.duration}, {"degree", c.degree}};
}

inline nlohmann::json to_json(const FittedAction & fa)
{
  nlohmann::json j = to_json(fa.action);
  j["signal"] = to_string(fa.signal);
  j["segments"] = nlohmann::json::array();
  for (const auto & seg : fa.segments) {
    j["segments"].push_back(to_json(seg));
  }
  j["constraints"] = nlohmann::json::array();
  for (const auto & rec : fa.constraints) {
    j["constraints"].push_back(
      {{"kind", to_string(rec.kind)}, {"target", rec.target}, {"achieved", rec.achieved},
       {"segment", rec.segment}});
  }
  j["rms_residual"] = fa.rms_residual;
  return j;
}

inline nlohmann::json to_json(const AbstractedTrack & at)
{
  nlohmann::json j;
  j["vehicle_id"] = at.vehicle_id;
  j["role"] = to_string(at.role);
  j["initial_state"] = {
    {"s", at.initial_state.s},
    {"t", at.initial_state.t},
    {"lane_id", at.initial_state.lane_id},
    {"road_s", at.initial_state.road_s}};
  j["span"] = {at.timeline.t0, at.timeline.t1};
  j["lateral"] = nlohmann::json::array();
  for (const auto & fa : at.lateral_fits) {
    j["lateral"].push_back(to_json(fa));
  }
  j["longitudinal"] = nlohmann::json::array();
  for (const auto & fa : at.longitudinal_fits) {
    j["longitudinal"].push_back(to_json(fa));
  }
  return j;
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__QUANTFIT_HPP_
