// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltest/error.hpp"

namespace ltest {

/// Maximum acceptable LT pace error as a function of the athlete's pace.
/// Rows are (minimum pace s/km inclusive, allowed |error| s/km); paces
/// below the first row are outside the target population.
struct ErrorBandTable {
  struct Band {
    double min_pace;
    double max_error;
  };
  std::vector<Band> bands{{180.0, 3.0}, {210.0, 5.0}, {240.0, 10.0}, {270.0, 15.0}, {300.0, 20.0}};

  double out_of_scope_floor() const { return bands.front().min_pace; }

  double max_error(double pace) const {
    if (!(pace > 0.0)) fail(ErrorCode::InvalidArgument, "pace must be positive");
    if (pace < out_of_scope_floor())
      fail(ErrorCode::OutOfScope, "pace " + std::to_string(pace) + " s/km is faster than the target population");
    double allowed = bands.front().max_error;
    for (const auto& b : bands)
      if (pace >= b.min_pace) allowed = b.max_error;
    return allowed;
  }
};

inline double max_error_band(double pace) { return ErrorBandTable{}.max_error(pace); }

struct PacePair {
  double tested = 0.0;     // s/km, reference
  double estimated = 0.0;  // s/km; non-finite if the estimate failed
};

struct HeuristicResult {
  double pct = 0.0;         // share of scored athletes within band, percent
  int n_within = 0;
  int n_scored = 0;
  int n_out_of_scope = 0;
  std::vector<std::optional<double>> errors;  // |tested - estimated| per pair; empty if out of scope
  std::vector<bool> within;
};

/// Percent of athletes whose estimate falls within the band of their tested
/// pace. Out-of-scope athletes are excluded from the denominator and counted.
inline HeuristicResult heuristic_indicator(std::span<const PacePair> pairs, const ErrorBandTable& table = {}) {
  if (pairs.empty()) fail(ErrorCode::InvalidArgument, "heuristic indicator needs at least one athlete");
  HeuristicResult r;
  for (const auto& p : pairs) {
    if (p.tested < table.out_of_scope_floor()) {
      ++r.n_out_of_scope;
      r.errors.emplace_back();
      r.within.push_back(false);
      continue;
    }
    const double band = table.max_error(p.tested);
    const double err = std::abs(p.tested - p.estimated);
    const bool ok = std::isfinite(err) && err <= band;
    ++r.n_scored;
    r.n_within += ok;
    r.errors.emplace_back(std::isfinite(err) ? std::optional<double>(err) : std::nullopt);
    r.within.push_back(ok);
  }
  r.pct = r.n_scored == 0 ? 0.0 : 100.0 * r.n_within / r.n_scored;
  return r;
}

/// Product-moment correlation coefficient.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorCode::ShapeMismatch, "pearson inputs differ in length");
  if (xs.size() < 2) fail(ErrorCode::DegenerateVariance, "pearson needs at least two pairs");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorCode::DegenerateVariance, "pearson input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Both indicators for one athlete set.
struct SetIndicators {
  double heuristic_pct = 0.0;
  std::optional<double> pearson_r;
  int n = 0;
  int n_within = 0;
  int n_scored = 0;
  int n_out_of_scope = 0;
};

inline SetIndicators indicators(std::span<const PacePair> pairs, const ErrorBandTable& table = {}) {
  SetIndicators s;
  s.n = static_cast<int>(pairs.size());
  if (pairs.empty()) return s;
  const auto h = heuristic_indicator(pairs, table);
  s.heuristic_pct = h.pct;
  s.n_within = h.n_within;
  s.n_scored = h.n_scored;
  s.n_out_of_scope = h.n_out_of_scope;
  std::vector<double> xs, ys;
  for (const auto& p : pairs)
    if (std::isfinite(p.estimated)) {
      xs.push_back(p.tested);
      ys.push_back(p.estimated);
    }
  try {
    s.pearson_r = pearson(xs, ys);
  } catch (const Error&) {
    s.pearson_r.reset();
  }
  return s;
}

struct PerformanceReport {
  SetIndicators global;
  SetIndicators train;
  SetIndicators test;
};

enum class EvalSet { Global, Train, Test };

inline const SetIndicators& pick(const PerformanceReport& r, EvalSet s) {
  switch (s) {
    case EvalSet::Train: return r.train;
    case EvalSet::Test: return r.test;
    case EvalSet::Global: break;
  }
  return r.global;
}

inline std::string to_string(EvalSet s) {
  switch (s) {
    case EvalSet::Train: return "train";
    case EvalSet::Test: return "test";
    case EvalSet::Global: break;
  }
  return "global";
}

inline double pearson_or(const SetIndicators& s, double fallback = -1.0) {
  return s.pearson_r.value_or(fallback);
}

// ---------------------------------------------------------------------------
// Ranking and sensitivity over grid results.

struct RestartResult {
  int restart = 0;
  PerformanceReport performance;
  double objective = 0.0;
  bool failed = false;
  std::string error;
};

/// One (HU, delays) cell of a grid search.
struct GridCell {
  int hidden_units = 0;
  int delays = 0;
  int parameter_count = 0;
  std::vector<RestartResult> restarts;
  int winner = -1;  // index into restarts, -1 if every restart failed

  const RestartResult* best() const { return winner < 0 ? nullptr : &restarts[static_cast<std::size_t>(winner)]; }
};

struct RankedModel {
  std::size_t cell = 0;
  int hidden_units = 0;
  int delays = 0;
  int parameter_count = 0;
  double heuristic_pct = 0.0;
  double pearson_r = 0.0;
};

struct ParameterZone {
  int hu_min = 0, hu_max = 0;
  int delay_min = 0, delay_max = 0;

  bool contains(int hu, int d) const { return hu >= hu_min && hu <= hu_max && d >= delay_min && d <= delay_max; }
};

struct RankOptions {
  double heuristic_tolerance = 2.0;  // percentage points
  double pearson_tolerance = 0.01;
  EvalSet set = EvalSet::Global;
  std::optional<ParameterZone> zone;
};

struct Ranking {
  std::vector<RankedModel> ranked;  // best first
  std::size_t selected = 0;         // index into ranked
};

inline bool better_performance(const RankedModel& a, const RankedModel& b) {
  if (a.heuristic_pct != b.heuristic_pct) return a.heuristic_pct > b.heuristic_pct;
  if (a.pearson_r != b.pearson_r) return a.pearson_r > b.pearson_r;
  if (a.parameter_count != b.parameter_count) return a.parameter_count < b.parameter_count;
  if (a.hidden_units != b.hidden_units) return a.hidden_units < b.hidden_units;
  return a.delays < b.delays;
}

inline bool simpler(const RankedModel& a, const RankedModel& b) {
  if (a.parameter_count != b.parameter_count) return a.parameter_count < b.parameter_count;
  if (a.hidden_units != b.hidden_units) return a.hidden_units < b.hidden_units;
  return a.delays < b.delays;
}

/// Sorts by (heuristic desc, pearson desc) and picks the simplest model whose
/// indicators are both within tolerance of the top rank; with a zone, only
/// models inside it are eligible (falling back to all if none are).
inline Ranking rank_models(std::span<const RankedModel> models, const RankOptions& opt = {}) {
  if (models.empty()) fail(ErrorCode::InvalidArgument, "no models to rank");
  Ranking r;
  r.ranked.assign(models.begin(), models.end());
  std::stable_sort(r.ranked.begin(), r.ranked.end(), better_performance);
  const RankedModel& top = r.ranked.front();
  auto eligible = [&](const RankedModel& m, bool use_zone) {
    if (m.heuristic_pct < top.heuristic_pct - opt.heuristic_tolerance - 1e-9) return false;
    if (m.pearson_r < top.pearson_r - opt.pearson_tolerance - 1e-9) return false;
    return !use_zone || opt.zone->contains(m.hidden_units, m.delays);
  };
  bool use_zone = opt.zone.has_value();
  if (use_zone && std::none_of(r.ranked.begin(), r.ranked.end(), [&](const auto& m) { return eligible(m, true); }))
    use_zone = false;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    if (!eligible(r.ranked[i], use_zone)) continue;
    if (!best || simpler(r.ranked[i], r.ranked[*best])) best = i;
  }
  r.selected = best.value_or(0);
  return r;
}

inline std::vector<RankedModel> ranked_candidates(std::span<const GridCell> cells, EvalSet set) {
  std::vector<RankedModel> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto* best = cells[i].best();
    if (!best) continue;
    const auto& s = pick(best->performance, set);
    out.push_back({i, cells[i].hidden_units, cells[i].delays, cells[i].parameter_count, s.heuristic_pct,
                   pearson_or(s)});
  }
  return out;
}

struct SensitivityRow {
  int hidden_units = 0;
  int delays = 0;
  EvalSet set = EvalSet::Global;
  double heuristic_mean = 0.0, heuristic_max = 0.0;
  double pearson_mean = 0.0, pearson_max = 0.0;
  int n_restarts = 0;
};

/// Per-cell mean and max of both indicators across successful restarts.
inline std::vector<SensitivityRow> sensitivity_export(std::span<const GridCell> cells) {
  std::vector<SensitivityRow> out;
  for (auto set : {EvalSet::Global, EvalSet::Train, EvalSet::Test}) {
    for (const auto& c : cells) {
      SensitivityRow row;
      row.hidden_units = c.hidden_units;
      row.delays = c.delays;
      row.set = set;
      row.heuristic_max = -std::numeric_limits<double>::infinity();
      row.pearson_max = -std::numeric_limits<double>::infinity();
      for (const auto& r : c.restarts) {
        if (r.failed) continue;
        const auto& s = pick(r.performance, set);
        row.heuristic_mean += s.heuristic_pct;
        row.pearson_mean += pearson_or(s);
        row.heuristic_max = std::max(row.heuristic_max, s.heuristic_pct);
        row.pearson_max = std::max(row.pearson_max, pearson_or(s));
        ++row.n_restarts;
      }
      if (row.n_restarts > 0) {
        row.heuristic_mean /= row.n_restarts;
        row.pearson_mean /= row.n_restarts;
      } else {
        row.heuristic_max = row.pearson_max = std::numeric_limits<double>::quiet_NaN();
      }
      out.push_back(row);
    }
  }
  return out;
}

/// Zone (window of +/- hu_radius, +/- delay_radius around a centre cell)
/// with the best mean of heuristic and scaled correlation across the
/// sensitivity table. Ties go to the simpler centre.
inline ParameterZone best_zone(std::span<const SensitivityRow> rows, EvalSet set, int hu_radius = 0,
                               int delay_radius = 1) {
  std::map<std::pair<int, int>, double> score;
  for (const auto& r : rows)
    if (r.set == set && r.n_restarts > 0) score[{r.hidden_units, r.delays}] = r.heuristic_mean + 100.0 * r.pearson_mean;
  if (score.empty()) fail(ErrorCode::InvalidArgument, "empty sensitivity table");
  double best = -std::numeric_limits<double>::infinity();
  std::pair<int, int> centre = score.begin()->first;
  for (const auto& [cell, _] : score) {
    double sum = 0.0;
    int n = 0;
    for (const auto& [other, v] : score)
      if (std::abs(other.first - cell.first) <= hu_radius && std::abs(other.second - cell.second) <= delay_radius) {
        sum += v;
        ++n;
      }
    const double mean = sum / n;
    if (mean > best + 1e-12) {
      best = mean;
      centre = cell;
    }
  }
  return {centre.first - hu_radius, centre.first + hu_radius, centre.second - delay_radius,
          centre.second + delay_radius};
}

}  // namespace ltest
