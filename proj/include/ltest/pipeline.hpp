// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltest/domain.hpp"
#include "ltest/sampling.hpp"
#include "ltest/workflow.hpp"

namespace ltest {

/// Everything one end-to-end run depends on.
struct PipelineConfig {
  std::size_t grid_k = kDefaultGridSize;
  std::uint64_t seed = 42;

  SplitMethod split_method = SplitMethod::Stratified;
  double test_fraction = kDefaultTestFraction;
  Linkage linkage = Linkage::Average;
  int n_strata = 0;            // 0: cut at the largest merge-height gap
  std::string knowledge_plan;  // split file content for the knowledge method

  bool tune = true;
  double tuning_min_pts = 17.5;
  std::size_t tuning_max_athletes = 14;
  int tuning_restarts = 10;
  std::vector<TuningStage> tuning_plan = default_tuning_plan();

  std::vector<int> hidden_units = int_range(1, 4);  // used when tuning is off
  std::vector<int> delays = int_range(5, 11);
  TrainOptions train;  // its seed field is ignored; streams derive from `seed`
  std::optional<FeatureSet> features;  // unset: constructive selection
  double pearson_margin = 0.005;
  RankOptions rank;
  int jobs = 1;
};

struct PipelineResult {
  std::vector<Rejection> rejected;
  std::vector<std::string> excluded;  // accepted but without a usable tested LT
  std::optional<Strata> strata;
  SplitPlan plan;
  std::vector<std::string> cohort_order;
  Workbench bench;

  std::vector<std::string> tuning_subset;
  std::optional<TuningResult> tuning;
  std::vector<int> hidden_units;
  std::vector<int> delays;

  FeatureSelection selection;
  Ranking ranking;
  RankedModel final_choice;
  LrnnModel model;
  ApplicabilityReport report;

  const GridResult& final_grid() const { return selection.grids[selection.selected_index]; }
};

/// Athletes that reached `min_pts`, in cohort order, capped at `cap`.
inline std::vector<std::string> tuning_subset(const std::vector<ValidatedSession>& cohort, double min_pts,
                                              std::size_t cap) {
  std::vector<std::string> ids;
  for (const auto& s : cohort)
    if (s.pts() >= min_pts - 1e-9 && ids.size() < cap) ids.push_back(s.athlete_id());
  return ids;
}

inline SplitPlan make_split(const std::vector<ValidatedSession>& cohort, const PipelineConfig& cfg,
                            std::optional<Strata>* strata_out = nullptr) {
  std::vector<std::string> ids;
  for (const auto& s : cohort) ids.push_back(s.athlete_id());
  if (cfg.split_method == SplitMethod::Knowledge) return knowledge_split(cfg.knowledge_plan, ids, cfg.test_fraction);
  const auto series = standardize(cohort, cfg.grid_k);
  Strata strata = hierarchical_cluster(series, cfg.linkage,
                                       cfg.n_strata > 0 ? std::optional<int>(cfg.n_strata) : std::nullopt);
  SplitPlan plan = stratified_split(strata, cfg.test_fraction, cfg.seed);
  if (strata_out) *strata_out = std::move(strata);
  return plan;
}

/// Screening, split, preliminary tuning, grid search with feature
/// selection, ranking and the applicability report. Model choice only ever
/// looks at tested LTs; ground truth, when given, is reported alongside.
inline PipelineResult run_pipeline(const std::vector<TestSession>& sessions, const PipelineConfig& cfg,
                                   const std::map<std::string, double>* truth_pace = nullptr) {
  PipelineResult out;
  ScreeningResult scr = screen(sessions);
  out.rejected = scr.rejected;
  if (scr.accepted.empty()) fail(ErrorCode::EmptyCohort, "no session passed screening");
  for (const auto& s : scr.accepted) out.cohort_order.push_back(s.athlete_id());

  out.plan = make_split(scr.accepted, cfg, &out.strata);
  out.bench = make_workbench(scr.accepted, cfg.grid_k, &out.plan, truth_pace, &out.excluded);
  if (out.bench.subjects.empty()) fail(ErrorCode::EmptyCohort, "no athlete has a usable tested threshold");

  // One run seed drives the split and, through derived streams, every
  // weight initialization.
  TrainOptions grid_opt = cfg.train;
  grid_opt.seed = derive_seed(cfg.seed, 1);
  out.hidden_units = cfg.hidden_units;
  out.delays = cfg.delays;
  if (cfg.tune) {
    out.tuning_subset = tuning_subset(scr.accepted, cfg.tuning_min_pts, cfg.tuning_max_athletes);
    std::vector<ValidatedSession> sub;
    for (const auto& s : scr.accepted)
      if (std::find(out.tuning_subset.begin(), out.tuning_subset.end(), s.athlete_id()) != out.tuning_subset.end())
        sub.push_back(s);
    const Workbench wb = make_workbench(sub, cfg.grid_k);
    TrainOptions o = cfg.train;
    o.seed = derive_seed(cfg.seed, 2);
    o.restarts = cfg.tuning_restarts;
    out.tuning = preliminary_tuning(wb, cfg.tuning_plan, cfg.features.value_or(FeatureSet::None), o, cfg.jobs);
    out.hidden_units = int_range(out.tuning->hu_min, out.tuning->hu_max);
    out.delays = int_range(out.tuning->delay_min, out.tuning->delay_max);
  }

  if (cfg.features) {
    GridResult g = grid_search(out.bench, *cfg.features, out.hidden_units, out.delays, grid_opt, cfg.jobs);
    const auto cands = ranked_candidates(g.cells, cfg.rank.set);
    if (cands.empty()) fail(ErrorCode::NumericalFailure, "every grid cell failed");
    const auto top = rank_models(cands, cfg.rank).ranked.front();
    out.selection.table.push_back({*cfg.features, top.heuristic_pct, top.pearson_r, top.hidden_units, top.delays});
    out.selection.grids.push_back(std::move(g));
    out.selection.selected = *cfg.features;
  } else {
    out.selection = constructive_feature_selection(out.bench, out.hidden_units, out.delays, grid_opt, cfg.rank,
                                                   cfg.jobs, cfg.pearson_margin);
  }

  const GridResult& grid = out.final_grid();
  out.ranking = rank_models(ranked_candidates(grid.cells, cfg.rank.set), cfg.rank);
  out.final_choice = out.ranking.ranked[out.ranking.selected];
  out.model = *grid.winners[out.final_choice.cell];
  out.report = applicability_report(out.model, out.bench);
  return out;
}

}  // namespace ltest
