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

// Reference implementations used only by tests. Each one takes a different route from the
// library code it checks.

#ifndef SCENARIO_ABSTRACTION__TESTS__ORACLES_HPP_
#define SCENARIO_ABSTRACTION__TESTS__ORACLES_HPP_

#include "scenario_abstraction/scenario_abstraction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace scenario_abstraction::oracle
{

/// Nodes and weights of n-point Gauss-Legendre quadrature on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_rule(int n)
{
  std::vector<double> x(static_cast<std::size_t>(n));
  std::vector<double> w(static_cast<std::size_t>(n));
  const double pi = std::acos(-1.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        break;
      }
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Composite Gauss-Legendre integral of f over [a, b].
inline double quadrature(const std::function<double(double)> & f, double a, double b, int panels = 8, int order = 8)
{
  static const auto rule = gauss_legendre_rule(8);
  const auto & [x, w] = order == 8 ? rule : gauss_legendre_rule(order);
  double total = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (std::size_t i = 0; i < x.size(); ++i) {
      total += 0.5 * h * w[i] * f(lo + 0.5 * h * (x[i] + 1.0));
    }
  }
  return total;
}

/// Physical-time integral of a normalized polynomial over its whole segment, by quadrature
/// of P((tau - t0) / duration) over tau in [t0, t0 + duration].
inline double physical_integral(const PolyCoeffs & c)
{
  auto p = [&](double tau) {
    const double x = tau / c.duration;
    double v = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      v += c.a[k] * std::pow(x, 5 - static_cast<int>(k));
    }
    return v;
  };
  return quadrature(p, 0.0, c.duration);
}

struct CorridorHit
{
  int lane_id;
  double s;
  double t;
};

/// Densely samples every center line and returns, per lane, the nearest sampled point.
/// The lane whose corridor (|t| <= w/2 + margin) holds the point with the smallest |t| wins;
/// strict containment beats the margin band.
inline std::optional<CorridorHit> nearest_corridor(const RoadModel & road, Point2 p, double step = 1e-3)
{
  std::optional<CorridorHit> best;
  bool best_strict = false;
  for (const auto & lane : road.lanes()) {
    const auto & pts = lane.spec().center_line;
    double s_acc = 0.0;
    double best_d = std::numeric_limits<double>::infinity();
    CorridorHit hit{lane.id(), 0.0, 0.0};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double dx = pts[i + 1].x - pts[i].x;
      const double dy = pts[i + 1].y - pts[i].y;
      const double len = std::hypot(dx, dy);
      const auto n = static_cast<std::size_t>(std::ceil(len / step));
      for (std::size_t k = 0; k <= n; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(n);
        const double qx = pts[i].x + u * dx;
        const double qy = pts[i].y + u * dy;
        const double d = std::hypot(p.x - qx, p.y - qy);
        if (d < best_d) {
          best_d = d;
          const double cross = (dx * (p.y - qy) - dy * (p.x - qx)) / len;
          hit = {lane.id(), s_acc + u * len, cross};
        }
      }
      s_acc += len;
    }
    const double half = 0.5 * lane.width();
    if (std::abs(hit.t) > half + road.tolerance_margin()) {
      continue;
    }
    const bool strict = std::abs(hit.t) <= half;
    if (!best || (strict && !best_strict) || (strict == best_strict && std::abs(hit.t) < std::abs(best->t))) {
      best = hit;
      best_strict = strict;
    }
  }
  return best;
}

/// Constrained least squares in raw seconds with monomials tau^0..tau^d, solved by the
/// null-space method: a = a_p + N z with A N = 0, then an ordinary least-squares solve for z.
/// Returns ascending raw-second coefficients.
inline Eigen::VectorXd nullspace_fit(
  const std::vector<double> & tau, const std::vector<double> & y, int degree, const Eigen::MatrixXd & A,
  const Eigen::VectorXd & b)
{
  const int p = degree + 1;
  Eigen::MatrixXd V(static_cast<Eigen::Index>(tau.size()), p);
  for (std::size_t i = 0; i < tau.size(); ++i) {
    for (int k = 0; k < p; ++k) {
      V(static_cast<Eigen::Index>(i), k) = std::pow(tau[i], k);
    }
  }
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  if (A.rows() == 0) {
    return V.colPivHouseholderQr().solve(yv);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd a_p = svd.solve(b);
  if (A.rows() >= p) {
    return a_p;
  }
  const Eigen::MatrixXd N = svd.matrixV().rightCols(p - A.rows());
  const Eigen::VectorXd z = (V * N).colPivHouseholderQr().solve(yv - V * a_p);
  return a_p + N * z;
}

/// Direct evaluation of an ascending raw-second polynomial.
inline double eval_ascending(const Eigen::VectorXd & c, double tau)
{
  double v = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    v += c(k) * std::pow(tau, static_cast<double>(k));
  }
  return v;
}

/// All matches by exhaustive enumeration of action tuples. For each binding and first action
/// the lexicographically smallest valid tuple (in per-vehicle start order) is kept, then
/// near-duplicates with identical bindings are dropped in time order.
inline std::vector<ScenarioInstance> brute_force_matches(
  const Pattern & p, const std::vector<ActionTimeline> & timelines, const std::vector<RelationTimeline> & relations)
{
  struct Item
  {
    ActionRef ref;
    Action action;
  };
  std::map<std::string, std::vector<Item>> items;
  std::vector<std::string> vehicles;
  for (const auto & tl : timelines) {
    std::vector<Item> v;
    for (std::size_t i = 0; i < tl.lateral.size(); ++i) {
      v.push_back({{tl.vehicle_id, Channel::lateral, i}, tl.lateral[i]});
    }
    for (std::size_t i = 0; i < tl.longitudinal.size(); ++i) {
      v.push_back({{tl.vehicle_id, Channel::longitudinal, i}, tl.longitudinal[i]});
    }
    std::stable_sort(v.begin(), v.end(), [](const Item & a, const Item & b) {
      if (a.action.t_start != b.action.t_start) {
        return a.action.t_start < b.action.t_start;
      }
      return a.ref.channel < b.ref.channel;
    });
    items[tl.vehicle_id] = v;
    vehicles.push_back(tl.vehicle_id);
  }
  auto sample_at = [](const RelationTimeline & r, double t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < r.time.size(); ++k) {
      if (std::abs(r.time[k] - t) < std::abs(r.time[best] - t)) {
        best = k;
      }
    }
    return best;
  };
  auto holds = [&](const Step & st, const Action & a, const RelationTimeline & r) {
    for (const auto & pr : st.relation_predicates) {
      const std::size_t k = sample_at(r, pr.at == PredicateAt::start ? a.t_start : a.t_end);
      bool ok = false;
      switch (pr.type) {
        case PredicateType::same_lane:
          ok = r.same_lane[k];
          break;
        case PredicateType::adjacent:
          ok = r.adjacent_left[k] || r.adjacent_right[k];
          break;
        case PredicateType::adjacent_left:
          ok = r.adjacent_left[k];
          break;
        case PredicateType::adjacent_right:
          ok = r.adjacent_right[k];
          break;
        case PredicateType::ahead:
          ok = r.gap_s[k] > 0.0;
          break;
        case PredicateType::behind:
          ok = r.gap_s[k] < 0.0;
          break;
        case PredicateType::gap_below:
          ok = r.gap_s[k] < pr.value;
          break;
        case PredicateType::gap_above:
          ok = r.gap_s[k] > pr.value;
          break;
      }
      if (!ok) {
        return false;
      }
    }
    return true;
  };

  const auto vars = p.actor_variables();
  const std::string ref_key = p.reference == ReferenceMode::ego ? "ego" : "reference";
  std::vector<ScenarioInstance> all;
  std::vector<std::string> references;
  for (const auto & r : relations) {
    if ((p.reference == ReferenceMode::any || r.reference_is_ego) &&
        std::find(references.begin(), references.end(), r.reference) == references.end()) {
      references.push_back(r.reference);
    }
  }
  for (const auto & ref : references) {
    auto relation = [&](const std::string & subject) -> const RelationTimeline * {
      for (const auto & r : relations) {
        if (r.subject == subject && r.reference == ref &&
            (p.reference == ReferenceMode::any || r.reference_is_ego)) {
          return &r;
        }
      }
      return nullptr;
    };
    // Every injective assignment of actor variables to non-reference vehicles.
    std::vector<std::string> pool;
    for (const auto & v : vehicles) {
      if (v != ref && relation(v)) {
        pool.push_back(v);
      }
    }
    std::vector<std::size_t> choice(vars.size(), 0);
    std::function<void(std::size_t, std::map<std::string, std::string> &)> assign =
      [&](std::size_t vi, std::map<std::string, std::string> & binding) {
        if (vi < vars.size()) {
          for (const auto & v : pool) {
            bool used = false;
            for (const auto & kv : binding) {
              used = used || kv.second == v;
            }
            if (!used) {
              binding[vars[vi]] = v;
              assign(vi + 1, binding);
              binding.erase(vars[vi]);
            }
          }
          return;
        }
        // Cartesian product of candidate indices, in lexicographic order.
        std::vector<const std::vector<Item> *> lists;
        for (const auto & st : p.steps) {
          lists.push_back(&items.at(binding.at(st.actor)));
        }
        std::vector<std::size_t> idx(p.steps.size(), 0);
        std::map<std::size_t, bool> first_done;
        if (std::any_of(lists.begin(), lists.end(), [](const auto * l) { return l->empty(); })) {
          return;
        }
        while (true) {
          bool ok = true;
          for (std::size_t s = 0; s < p.steps.size() && ok; ++s) {
            const auto & st = p.steps[s];
            const auto & a = (*lists[s])[idx[s]].action;
            ok = st.action_kind.matches(a.kind) && holds(st, a, *relation(binding.at(st.actor)));
            if (ok && s > 0) {
              const auto & prev = (*lists[s - 1])[idx[s - 1]].action;
              ok = a.t_start > prev.t_start && a.t_start - prev.t_end <= p.steps[s - 1].max_gap_to_next;
            }
          }
          if (ok && !first_done[idx[0]]) {
            first_done[idx[0]] = true;
            ScenarioInstance inst;
            inst.pattern_id = p.pattern_id;
            inst.actors = binding;
            inst.actors[ref_key] = ref;
            inst.t_start = (*lists[0])[idx[0]].action.t_start;
            inst.t_end = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < p.steps.size(); ++s) {
              const auto & it = (*lists[s])[idx[s]];
              inst.matched_refs.push_back(it.ref);
              inst.matched_actions.push_back(it.action);
              inst.t_end = std::max(inst.t_end, it.action.t_end);
            }
            all.push_back(inst);
          }
          // Odometer increment, last index fastest.
          std::size_t s = p.steps.size();
          while (s > 0) {
            --s;
            if (++idx[s] < lists[s]->size()) {
              break;
            }
            idx[s] = 0;
            if (s == 0) {
              return;
            }
          }
        }
      };
    std::map<std::string, std::string> binding;
    assign(0, binding);
  }
  std::sort(all.begin(), all.end(), [](const ScenarioInstance & a, const ScenarioInstance & b) {
    if (a.t_start != b.t_start) {
      return a.t_start < b.t_start;
    }
    if (a.t_end != b.t_end) {
      return a.t_end < b.t_end;
    }
    return a.actors < b.actors;
  });
  std::vector<ScenarioInstance> kept;
  for (const auto & inst : all) {
    bool dup = false;
    for (const auto & k : kept) {
      if (k.actors != inst.actors) {
        continue;
      }
      const double overlap = std::min(k.t_end, inst.t_end) - std::max(k.t_start, inst.t_start);
      const double shorter = std::min(k.t_end - k.t_start, inst.t_end - inst.t_start);
      const double ratio = shorter > 0.0 ? std::max(0.0, overlap) / shorter : (overlap >= 0.0 ? 1.0 : 0.0);
      dup = dup || ratio >= 0.5;
    }
    if (!dup) {
      kept.push_back(inst);
    }
  }
  return kept;
}

}  // namespace scenario_abstraction::oracle

#endif  // SCENARIO_ABSTRACTION__TESTS__ORACLES_HPP_
