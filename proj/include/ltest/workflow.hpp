// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltest/dmax.hpp"
#include "ltest/evaluate.hpp"
#include "ltest/features.hpp"
#include "ltest/parallel.hpp"
#include "ltest/sampling.hpp"
#include "ltest/standardize.hpp"
#include "ltest/train.hpp"

namespace ltest {

/// LT from the measured stage lactate values (relative-intensity axis).
inline ThresholdPoint tested_threshold(const ValidatedSession& s, int degree = 3) {
  const RelativizedSession rel = relativize(s);
  std::vector<CurvePoint> pts;
  for (std::size_t i = 0; i < rel.stages.size(); ++i)
    if (rel.stages[i].lactate) pts.push_back({rel.rel[i], *rel.stages[i].lactate});
  return dmax_threshold(LactateCurve::from_points(std::move(pts), degree), s.pts());
}

/// LT from the model's estimated curve on the athlete's grid.
inline ThresholdPoint estimated_threshold(const LrnnModel& model, const FixedGridSeries& s, int degree = 3) {
  const auto y = model.predict(s);
  std::vector<CurvePoint> pts;
  for (std::size_t i = 0; i < s.size(); ++i) pts.push_back({s.grid[i], y[i]});
  return dmax_threshold(LactateCurve::from_points(std::move(pts), degree), s.pts);
}

/// Deployment path: LT of a session from its driving features alone. Any
/// lactate values are stripped before the session is touched.
inline ThresholdPoint estimate_session(const LrnnModel& model, const TestSession& session, int degree = 3) {
  TestSession s = session;
  for (auto& st : s.stages) st.lactate.reset();
  check_protocol(s);
  if (s.pts() < protocol::kMinPts - protocol::kSpeedTolerance)
    fail(ErrorCode::InsufficientPTS, "athlete " + s.athlete_id + " stopped below the minimum peak speed");
  const FixedGridSeries series = resample(relativize(s), model.grid_size, false);
  return estimated_threshold(model, series, degree);
}

/// One athlete prepared for training and scoring.
struct Subject {
  std::string athlete_id;
  FixedGridSeries series;
  double tested_pace = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> truth_pace;
  bool in_test = false;
};

/// Which LT is used as the reference for the indicators.
enum class Reference { Tested, Truth };

struct Workbench {
  std::vector<Subject> subjects;

  std::vector<FixedGridSeries> train_series() const {
    std::vector<FixedGridSeries> out;
    for (const auto& s : subjects)
      if (!s.in_test) out.push_back(s.series);
    return out;
  }
};

/// Standardizes sessions, computes tested LTs and applies a split plan.
/// Athletes whose measured curve has no usable Dmax are dropped into
/// `excluded`.
inline Workbench make_workbench(const std::vector<ValidatedSession>& cohort, std::size_t k,
                                const SplitPlan* plan = nullptr,
                                const std::map<std::string, double>* truth_pace = nullptr,
                                std::vector<std::string>* excluded = nullptr) {
  Workbench wb;
  for (const auto& s : cohort) {
    Subject sub;
    sub.athlete_id = s.athlete_id();
    sub.series = standardize(s, k);
    try {
      sub.tested_pace = tested_threshold(s).pace_at_lt;
    } catch (const Error&) {
      if (excluded) excluded->push_back(s.athlete_id());
      continue;
    }
    if (truth_pace)
      if (auto it = truth_pace->find(sub.athlete_id); it != truth_pace->end()) sub.truth_pace = it->second;
    sub.in_test = plan && plan->in_test(sub.athlete_id);
    wb.subjects.push_back(std::move(sub));
  }
  return wb;
}

struct AthleteOutcome {
  std::string athlete_id;
  bool in_test = false;
  double reference_pace = 0.0;
  double estimated_pace = std::numeric_limits<double>::quiet_NaN();
  double estimated_rel = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> error;
  std::optional<double> allowed;
  bool within = false;
  bool out_of_scope = false;
};

struct Evaluation {
  PerformanceReport report;
  std::vector<AthleteOutcome> athletes;
};

inline Evaluation evaluate_model(const LrnnModel& model, const Workbench& wb, Reference ref = Reference::Tested,
                                 const ErrorBandTable& table = {}) {
  Evaluation ev;
  std::vector<PacePair> all, train, test;
  for (const auto& s : wb.subjects) {
    AthleteOutcome o;
    o.athlete_id = s.athlete_id;
    o.in_test = s.in_test;
    if (ref == Reference::Truth) {
      if (!s.truth_pace) fail(ErrorCode::MissingAthlete, "no ground truth for athlete " + s.athlete_id);
      o.reference_pace = *s.truth_pace;
    } else {
      o.reference_pace = s.tested_pace;
    }
    try {
      const auto t = estimated_threshold(model, s.series);
      o.estimated_pace = t.pace_at_lt;
      o.estimated_rel = t.x_at_lt;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateCurve && e.code() != ErrorCode::SingularFit) throw;
    }
    const PacePair p{o.reference_pace, o.estimated_pace};
    all.push_back(p);
    (s.in_test ? test : train).push_back(p);
    if (o.reference_pace < table.out_of_scope_floor()) {
      o.out_of_scope = true;
    } else {
      o.allowed = table.max_error(o.reference_pace);
      if (std::isfinite(o.estimated_pace)) o.error = std::abs(o.reference_pace - o.estimated_pace);
      o.within = o.error && *o.error <= *o.allowed;
    }
    ev.athletes.push_back(o);
  }
  ev.report.global = indicators(all, table);
  ev.report.train = indicators(train, table);
  ev.report.test = indicators(test, table);
  return ev;
}

inline LrnnModel assemble_model(const TrainedModel& t, FeatureSet f, const Normalization& norm, std::size_t k) {
  return LrnnModel{t.config, t.weights, f, norm, k};
}

/// Everything training needs for one feature set on one workbench.
struct TrainingSet {
  FeatureSet features = FeatureSet::None;
  Normalization norm;
  std::vector<Sequence> sequences;
  std::size_t grid_size = kDefaultGridSize;

  static TrainingSet build(const Workbench& wb, FeatureSet f) {
    TrainingSet ts;
    ts.features = f;
    const auto train = wb.train_series();
    if (train.empty()) fail(ErrorCode::EmptyCohort, "no training athletes");
    ts.grid_size = train.front().size();
    ts.norm = Normalization::fit(train, f);
    for (const auto& s : train) ts.sequences.push_back(ts.norm.sequence(s, f));
    return ts;
  }

  LrnnConfig config(int hu, int delays) const { return {channel_count(features), hu, delays}; }
};

struct RestartOutcome {
  RestartResult result;
  std::optional<TrainedModel> model;
};

inline std::uint64_t restart_seed(std::uint64_t base, int hu, int delays, int restart) {
  return derive_seed(derive_seed(derive_seed(base, static_cast<std::uint64_t>(hu)), static_cast<std::uint64_t>(delays)),
                     static_cast<std::uint64_t>(restart));
}

inline RestartOutcome run_restart(const Workbench& wb, const TrainingSet& ts, int hu, int delays, int restart,
                                  const TrainOptions& opt) {
  RestartOutcome out;
  out.result.restart = restart;
  try {
    const LrnnConfig cfg = ts.config(hu, delays);
    TrainOptions o = opt;
    o.seed = restart_seed(opt.seed, hu, delays, restart);
    TrainedModel t = train_lm_bayes(cfg, ts.sequences, o);
    out.result.objective = t.objective;
    out.result.performance = evaluate_model(assemble_model(t, ts.features, ts.norm, ts.grid_size), wb).report;
    out.model = std::move(t);
  } catch (const Error& e) {
    out.result.failed = true;
    out.result.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return out;
}

/// Winner by training-set heuristic, ties broken by lower objective, then
/// by restart index.
inline int pick_winner(const std::vector<RestartResult>& rs) {
  int best = -1;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (rs[i].failed) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const auto& a = rs[i];
    const auto& b = rs[static_cast<std::size_t>(best)];
    if (a.performance.train.heuristic_pct > b.performance.train.heuristic_pct ||
        (a.performance.train.heuristic_pct == b.performance.train.heuristic_pct && a.objective < b.objective))
      best = static_cast<int>(i);
  }
  return best;
}

struct MultiStartResult {
  GridCell cell;
  std::optional<TrainedModel> winner;
};

/// Trains `restarts` Nguyen-Widrow initializations of one configuration.
inline MultiStartResult multi_start(const Workbench& wb, const TrainingSet& ts, int hu, int delays,
                                    const TrainOptions& opt, int jobs = 1) {
  opt.check();
  std::vector<RestartOutcome> runs(static_cast<std::size_t>(opt.restarts));
  parallel_for(runs.size(), jobs, [&](std::size_t i) { runs[i] = run_restart(wb, ts, hu, delays, static_cast<int>(i), opt); });
  MultiStartResult out;
  out.cell.hidden_units = hu;
  out.cell.delays = delays;
  out.cell.parameter_count = ts.config(hu, delays).parameter_count();
  for (auto& r : runs) out.cell.restarts.push_back(r.result);
  out.cell.winner = pick_winner(out.cell.restarts);
  if (out.cell.winner < 0) fail(ErrorCode::NumericalFailure, "every restart failed for HU " + std::to_string(hu) +
                                                                 ", delays " + std::to_string(delays));
  out.winner = std::move(runs[static_cast<std::size_t>(out.cell.winner)].model);
  return out;
}

struct GridResult {
  FeatureSet features = FeatureSet::None;
  std::vector<GridCell> cells;              // row-major over (hu, delays)
  std::vector<std::optional<LrnnModel>> winners;  // aligned with cells
  std::vector<std::string> cell_errors;
};

/// Trains every (HU, delays) cell with multi-start. Restarts of all cells
/// are scheduled as independent tasks; a cell whose restarts all fail is
/// recorded, not fatal.
inline GridResult grid_search(const Workbench& wb, FeatureSet f, const std::vector<int>& hus,
                              const std::vector<int>& delays, const TrainOptions& opt, int jobs = 1) {
  if (hus.empty() || delays.empty()) fail(ErrorCode::InvalidArgument, "grid search ranges must be non-empty");
  opt.check();
  const TrainingSet ts = TrainingSet::build(wb, f);
  const std::size_t n_cells = hus.size() * delays.size();
  const auto restarts = static_cast<std::size_t>(opt.restarts);
  std::vector<RestartOutcome> runs(n_cells * restarts);
  parallel_for(runs.size(), jobs, [&](std::size_t t) {
    const std::size_t cell = t / restarts, r = t % restarts;
    runs[t] = run_restart(wb, ts, hus[cell / delays.size()], delays[cell % delays.size()], static_cast<int>(r), opt);
  });
  GridResult g;
  g.features = f;
  for (std::size_t c = 0; c < n_cells; ++c) {
    GridCell cell;
    cell.hidden_units = hus[c / delays.size()];
    cell.delays = delays[c % delays.size()];
    cell.parameter_count = ts.config(cell.hidden_units, cell.delays).parameter_count();
    for (std::size_t r = 0; r < restarts; ++r) cell.restarts.push_back(runs[c * restarts + r].result);
    cell.winner = pick_winner(cell.restarts);
    if (cell.winner >= 0) {
      const auto& tm = runs[c * restarts + static_cast<std::size_t>(cell.winner)].model;
      g.winners.push_back(assemble_model(*tm, f, ts.norm, ts.grid_size));
    } else {
      g.winners.emplace_back();
      g.cell_errors.push_back("HU " + std::to_string(cell.hidden_units) + " delays " +
                              std::to_string(cell.delays) + ": every restart failed");
    }
    g.cells.push_back(std::move(cell));
  }
  return g;
}

inline std::vector<int> int_range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

struct TuningStage {
  std::string name;
  std::vector<int> hidden_units;
  std::vector<int> delays;
};

/// Three-step preliminary plan: coarse, increased resolution, fine.
inline std::vector<TuningStage> default_tuning_plan() {
  return {{"1 Coarse tuning", {1, 5, 10}, {1, 3, 5, 8, 10}},
          {"2 Increased resolution", int_range(1, 4), int_range(1, 10)},
          {"3 Fine tuning", int_range(1, 4), int_range(5, 11)}};
}

struct TuningStageResult {
  TuningStage stage;
  GridResult grid;
  RankedModel best;
};

struct TuningResult {
  std::vector<TuningStageResult> stages;
  int hu_min = 0, hu_max = 0, delay_min = 0, delay_max = 0;
};

/// Runs every stage of the plan on a (small) subset; the surviving range is
/// the span of the final stage's grid.
inline TuningResult preliminary_tuning(const Workbench& subset, const std::vector<TuningStage>& plan,
                                       FeatureSet f, const TrainOptions& opt, int jobs = 1) {
  if (subset.subjects.empty()) fail(ErrorCode::EmptyCohort, "tuning subset is empty");
  if (plan.empty()) fail(ErrorCode::InvalidArgument, "tuning plan is empty");
  TuningResult out;
  for (const auto& st : plan) {
    TuningStageResult r{st, grid_search(subset, f, st.hidden_units, st.delays, opt, jobs), {}};
    const auto cands = ranked_candidates(r.grid.cells, EvalSet::Train);
    if (!cands.empty()) r.best = rank_models(cands, RankOptions{0.0, 0.0, EvalSet::Train, {}}).ranked.front();
    out.stages.push_back(std::move(r));
  }
  const auto& last = plan.back();
  out.hu_min = *std::min_element(last.hidden_units.begin(), last.hidden_units.end());
  out.hu_max = *std::max_element(last.hidden_units.begin(), last.hidden_units.end());
  out.delay_min = *std::min_element(last.delays.begin(), last.delays.end());
  out.delay_max = *std::max_element(last.delays.begin(), last.delays.end());
  return out;
}

struct FeatureRow {
  FeatureSet features = FeatureSet::None;
  double heuristic_pct = 0.0;
  double pearson_r = 0.0;
  int hidden_units = 0;
  int delays = 0;
};

struct FeatureSelection {
  std::vector<FeatureRow> table;
  std::vector<GridResult> grids;  // aligned with table
  FeatureSet selected = FeatureSet::None;
  std::size_t selected_index = 0;
};

/// Strict improvement of the indicator pair: a higher heuristic, or an
/// equal heuristic with a correlation gain above `pearson_margin`.
inline bool improves(const FeatureRow& cand, const FeatureRow& incumbent, double pearson_margin) {
  if (cand.heuristic_pct > incumbent.heuristic_pct + 1e-9) return true;
  if (cand.heuristic_pct < incumbent.heuristic_pct - 1e-9) return false;
  return cand.pearson_r > incumbent.pearson_r + pearson_margin;
}

/// Walks the nested candidate sets in relevance order and stops at the first
/// addition that does not improve the best model's indicator pair.
template <class Evaluate>
FeatureSelection constructive_selection(Evaluate&& evaluate_set, double pearson_margin = 0.005) {
  FeatureSelection out;
  for (auto f : kFeatureOrder) {
    auto [row, grid] = evaluate_set(f);
    out.table.push_back(row);
    out.grids.push_back(std::move(grid));
    const std::size_t idx = out.table.size() - 1;
    if (idx == 0) continue;
    if (!improves(out.table[idx], out.table[out.selected_index], pearson_margin)) break;
    out.selected_index = idx;
  }
  out.selected = out.table[out.selected_index].features;
  return out;
}

inline FeatureSelection constructive_feature_selection(const Workbench& wb, const std::vector<int>& hus,
                                                       const std::vector<int>& delays, const TrainOptions& opt,
                                                       const RankOptions& rank, int jobs = 1,
                                                       double pearson_margin = 0.005) {
  return constructive_selection(
      [&](FeatureSet f) {
        GridResult g = grid_search(wb, f, hus, delays, opt, jobs);
        const auto cands = ranked_candidates(g.cells, rank.set);
        if (cands.empty()) fail(ErrorCode::NumericalFailure, "every grid cell failed for features " + to_string(f));
        const auto top = rank_models(cands, rank).ranked.front();
        return std::pair{FeatureRow{f, top.heuristic_pct, top.pearson_r, top.hidden_units, top.delays}, std::move(g)};
      },
      pearson_margin);
}

struct ApplicabilityReport {
  PerformanceReport tested;
  std::optional<PerformanceReport> truth;
  std::vector<AthleteOutcome> athletes;  // against tested LT
  std::vector<AthleteOutcome> athletes_truth;
  std::vector<std::string> failed;  // outside their band against tested LT
  std::vector<std::string> passed;
  double parity_delta = 0.0;  // |train - test| heuristic, points
};

inline ApplicabilityReport applicability_report(const LrnnModel& model, const Workbench& wb) {
  ApplicabilityReport r;
  const Evaluation ev = evaluate_model(model, wb, Reference::Tested);
  r.tested = ev.report;
  r.athletes = ev.athletes;
  for (const auto& a : ev.athletes) (a.within ? r.passed : r.failed).push_back(a.athlete_id);
  r.parity_delta = std::abs(r.tested.train.heuristic_pct - r.tested.test.heuristic_pct);
  const bool has_truth = !wb.subjects.empty() && std::all_of(wb.subjects.begin(), wb.subjects.end(),
                                                             [](const Subject& s) { return s.truth_pace.has_value(); });
  if (has_truth) {
    const Evaluation tv = evaluate_model(model, wb, Reference::Truth);
    r.truth = tv.report;
    r.athletes_truth = tv.athletes;
  }
  return r;
}

}  // namespace ltest
