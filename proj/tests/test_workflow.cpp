// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "helpers.hpp"
#include "ltest/config.hpp"
#include "ltest/model_io.hpp"
#include "ltest/report.hpp"
#include "ltest/session_io.hpp"
#include "ltest/synth.hpp"

using namespace ltest;
using ltest::testing::error_code_of;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.seed = 3;
  c.n_strata = 4;
  c.tune = true;
  c.tuning_min_pts = 16.5;
  c.tuning_max_athletes = 6;
  c.tuning_restarts = 1;
  c.tuning_plan = {{"coarse", {1, 2}, {1, 3}}, {"fine", {1, 2}, {2, 3}}};
  c.train.max_epochs = 15;
  c.train.restarts = 2;
  return c;
}

struct SmallRun {
  synth::Cohort cohort;
  std::map<std::string, double> truth;
};

const SmallRun& small_cohort() {
  static const SmallRun run = [] {
    SmallRun r{synth::gen_cohort(24, 11, 4), {}};
    for (const auto& t : r.cohort.truth) r.truth[t.athlete_id] = t.true_lt_pace;
    return r;
  }();
  return run;
}

}  // namespace

TEST(Pipeline, SmallRunProducesConsistentResult) {
  const auto& run = small_cohort();
  const auto cfg = small_config();
  const auto r = run_pipeline(run.cohort.sessions, cfg, &run.truth);
  EXPECT_TRUE(r.rejected.empty());
  ASSERT_TRUE(r.tuning.has_value());
  EXPECT_EQ(r.tuning->stages.size(), 2u);
  EXPECT_EQ(r.hidden_units, (std::vector<int>{1, 2}));
  EXPECT_EQ(r.delays, (std::vector<int>{2, 3}));
  EXPECT_EQ(r.tuning_subset.size(), 6u);
  EXPECT_GE(r.selection.table.size(), 2u);
  EXPECT_EQ(r.final_grid().cells.size(), 4u);
  EXPECT_EQ(r.model.config.hidden_units, r.final_choice.hidden_units);
  EXPECT_EQ(r.model.config.delays, r.final_choice.delays);
  EXPECT_EQ(r.model.features, r.selection.selected);
  ASSERT_TRUE(r.report.truth.has_value());
  // Passed and failed athletes partition the evaluated cohort.
  std::set<std::string> all(r.report.passed.begin(), r.report.passed.end());
  for (const auto& id : r.report.failed) EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all.size(), r.bench.subjects.size());
  EXPECT_DOUBLE_EQ(r.report.parity_delta,
                   std::abs(r.report.tested.train.heuristic_pct - r.report.tested.test.heuristic_pct));
  // Split is a partition of the cohort.
  EXPECT_EQ(r.plan.train_ids.size() + r.plan.test_ids.size(), 24u);
}

TEST(Pipeline, ParallelRunIsByteIdentical) {
  const auto& run = small_cohort();
  auto cfg = small_config();
  const auto a = run_pipeline(run.cohort.sessions, cfg, &run.truth);
  cfg.jobs = 3;
  const auto b = run_pipeline(run.cohort.sessions, cfg, &run.truth);
  const std::string header = provenance_header(cfg.seed, config_hash(cfg));
  EXPECT_EQ(grid_file(a.final_grid(), header), grid_file(b.final_grid(), header));
  EXPECT_EQ(sensitivity_file(a.final_grid(), header), sensitivity_file(b.final_grid(), header));
  EXPECT_EQ(text_report(a, cfg, header), text_report(b, cfg, header));
  EXPECT_EQ(json_report(a, cfg, config_hash(cfg)), json_report(b, cfg, config_hash(cfg)));
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
}

TEST(Pipeline, FixedFeatureSetSkipsSelection) {
  const auto& run = small_cohort();
  auto cfg = small_config();
  cfg.tune = false;
  cfg.hidden_units = {1};
  cfg.delays = {2};
  cfg.features = FeatureSet::Hr;
  const auto r = run_pipeline(run.cohort.sessions, cfg);
  EXPECT_FALSE(r.tuning.has_value());
  ASSERT_EQ(r.selection.table.size(), 1u);
  EXPECT_EQ(r.model.features, FeatureSet::Hr);
  EXPECT_FALSE(r.report.truth.has_value());
}

TEST(Pipeline, EmptyCohortAfterScreening) {
  std::vector<TestSession> s{ltest::testing::ladder_session("A", 12.0)};
  EXPECT_EQ(error_code_of([&] { run_pipeline(s, small_config()); }), ErrorCode::EmptyCohort);
}

TEST(Pipeline, KnowledgeSplitUsesFileVerbatim) {
  const auto& run = small_cohort();
  auto cfg = small_config();
  cfg.tune = false;
  cfg.hidden_units = {1};
  cfg.delays = {2};
  cfg.features = FeatureSet::None;
  cfg.split_method = SplitMethod::Knowledge;
  cfg.knowledge_plan = "athlete_id,set,stratum\n";
  for (std::size_t i = 0; i < run.cohort.truth.size(); ++i)
    cfg.knowledge_plan += run.cohort.truth[i].athlete_id + (i < 7 ? ",test,\n" : ",train,\n");
  const auto r = run_pipeline(run.cohort.sessions, cfg);
  EXPECT_EQ(r.plan.test_ids.size(), 7u);
  EXPECT_FALSE(r.strata.has_value());
}

TEST(TuningSubset, CapsAndFilters) {
  const auto& run = small_cohort();
  std::vector<ValidatedSession> v;
  for (const auto& s : run.cohort.sessions) v.push_back(validate(s));
  const auto ids = tuning_subset(v, 17.5, 3);
  EXPECT_EQ(ids.size(), 3u);
  for (const auto& id : ids)
    for (const auto& s : v)
      if (s.athlete_id() == id) {
        EXPECT_GE(s.pts(), 17.5);
      }
}

TEST(Estimate, IgnoresLactate) {
  const auto& run = small_cohort();
  auto cfg = small_config();
  cfg.tune = false;
  cfg.hidden_units = {1};
  cfg.delays = {2};
  cfg.features = FeatureSet::HrHrrRpe;
  const auto r = run_pipeline(run.cohort.sessions, cfg);
  for (std::size_t i = 0; i < 5; ++i) {
    const TestSession& with = run.cohort.sessions[i];
    TestSession without = with;
    for (auto& st : without.stages) st.lactate.reset();
    TestSession garbage = with;
    for (auto& st : garbage.stages) st.lactate = 99.0;
    const auto a = estimate_session(r.model, with);
    const auto b = estimate_session(r.model, without);
    const auto c = estimate_session(r.model, garbage);
    EXPECT_EQ(a.x_at_lt, b.x_at_lt);
    EXPECT_EQ(a.x_at_lt, c.x_at_lt);
    EXPECT_EQ(a.pace_at_lt, b.pace_at_lt);
  }
}

TEST(Estimate, FeatureOnlySessionParsesAndEstimates) {
  const auto& run = small_cohort();
  auto cfg = small_config();
  cfg.tune = false;
  cfg.hidden_units = {1};
  cfg.delays = {2};
  cfg.features = FeatureSet::Hr;
  const auto r = run_pipeline(run.cohort.sessions, cfg);
  std::string text = "athlete_id,speed,hr_end\n";
  for (const auto& st : run.cohort.sessions[0].stages)
    text += "X," + csv::format_number(st.speed) + ',' + csv::format_number(*st.hr_end) + '\n';
  const auto parsed = parse_sessions(text);
  const auto t = estimate_session(r.model, parsed[0]);
  EXPECT_GT(t.pace_at_lt, 0.0);
  EXPECT_EQ(t.pace_at_lt, estimate_session(r.model, run.cohort.sessions[0]).pace_at_lt);
}

TEST(Estimate, LowPeakSpeedRejected) {
  const auto& run = small_cohort();
  auto cfg = small_config();
  cfg.tune = false;
  cfg.hidden_units = {1};
  cfg.delays = {2};
  cfg.features = FeatureSet::None;
  const auto r = run_pipeline(run.cohort.sessions, cfg);
  EXPECT_EQ(error_code_of([&] { estimate_session(r.model, ltest::testing::ladder_session("L", 13.5)); }),
            ErrorCode::InsufficientPTS);
}

TEST(Workbench, ExcludesAthletesWithoutDmax) {
  TestSession flat = ltest::testing::ladder_session("F", 16.5);
  for (auto& st : flat.stages) st.lactate = 0.5 * st.speed - 4.0;
  const std::vector<ValidatedSession> v{validate(flat), validate(ltest::testing::ladder_session("G", 16.5))};
  std::vector<std::string> excluded;
  const auto wb = make_workbench(v, 20, nullptr, nullptr, &excluded);
  EXPECT_EQ(excluded, (std::vector<std::string>{"F"}));
  ASSERT_EQ(wb.subjects.size(), 1u);
  EXPECT_EQ(wb.subjects[0].athlete_id, "G");
}

TEST(TestedThreshold, MatchesDirectDmaxOnRelativeIntensity) {
  const auto s = validate(ltest::testing::ladder_session("A", 17.5));
  std::vector<CurvePoint> pts;
  for (const auto& st : s.stages()) pts.push_back({st.speed / 17.5, *st.lactate});
  const auto direct = dmax_threshold(LactateCurve::from_points(pts), 17.5);
  const auto t = tested_threshold(s);
  EXPECT_NEAR(t.x_at_lt, direct.x_at_lt, 1e-12);
  EXPECT_NEAR(t.pace_at_lt, 3600.0 / (17.5 * direct.x_at_lt), 1e-9);
}
