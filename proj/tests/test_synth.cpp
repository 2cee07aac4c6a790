// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "ltest/session_io.hpp"
#include "ltest/synth.hpp"
#include "ltest/workflow.hpp"

using namespace ltest;
using ltest::testing::error_code_of;

TEST(Synth, NoiselessSessionRecoversTruth) {
  for (double pts : {14.5, 16.5, 18.5, 19.5}) {
    synth::AthleteProfile p;
    p.pts = pts;
    p.lactate_noise = 0.0;
    p.threshold_fraction = p.start_fraction() + 0.62 * (1.0 - p.start_fraction());
    const auto g = synth::gen_session(p, 1);
    const auto tested = tested_threshold(validate(g.session));
    // Lactate is rounded to 0.01 mmol/L, as an analyzer would report it.
    EXPECT_NEAR(tested.x_at_lt, g.truth.x_at_lt, 0.01) << "pts " << pts;
  }
}

TEST(Synth, SameSeedSameSession) {
  synth::AthleteProfile p;
  EXPECT_EQ(synth::gen_session(p, 5).session, synth::gen_session(p, 5).session);
  EXPECT_NE(synth::gen_session(p, 5).session, synth::gen_session(p, 6).session);
}

TEST(Synth, NoiseMovesMeasuredThreshold) {
  synth::AthleteProfile p;
  p.pts = 17.5;
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = synth::gen_session(p, seed);
    errors.push_back(std::abs(tested_threshold(validate(g.session)).x_at_lt - g.truth.x_at_lt));
  }
  std::nth_element(errors.begin(), errors.begin() + 50, errors.end());
  EXPECT_GT(errors[50], 0.0);
}

TEST(Synth, ChannelsBehave) {
  synth::AthleteProfile p;
  p.pts = 18.5;
  p.hr_noise = 0.0;
  const auto s = synth::gen_session(p, 3).session;
  for (std::size_t i = 0; i < s.stages.size(); ++i) {
    EXPECT_LT(*s.stages[i].hrr_1min, *s.stages[i].hr_end);
    EXPECT_GE(*s.stages[i].rpe_respiratory, 0.0);
    EXPECT_LE(*s.stages[i].rpe_respiratory, 10.0);
    if (i > 0) {
      EXPECT_GE(*s.stages[i].hr_end, *s.stages[i - 1].hr_end);
      EXPECT_GE(*s.stages[i].rpe(), *s.stages[i - 1].rpe());
    }
  }
  EXPECT_EQ(*s.stages.front().rpe_respiratory, 1.0);
  EXPECT_EQ(*s.stages.back().rpe_respiratory, 10.0);
}

TEST(Synth, NoiselessCurveIncreasingAndConvex) {
  const auto cohort = synth::gen_cohort(105, 7, 10);
  for (const auto& p : cohort.profiles) {
    const double b = synth::steepness(p);
    double prev = -1.0, prev_slope = -1.0;
    for (int i = 1; i <= 200; ++i) {
      const double r = 0.5 + 0.5 * i / 200.0;
      const double y = synth::lactate_at(p, b, r);
      if (i > 1) {
        const double slope = y - prev;
        EXPECT_GT(slope, 0.0);
        if (i > 2) {
          EXPECT_GE(slope, prev_slope - 1e-12);
        }
        prev_slope = slope;
      }
      prev = y;
    }
  }
}

TEST(Synth, ProfileInvariants) {
  synth::AthleteProfile p;
  p.pts = 15.0;
  EXPECT_EQ(error_code_of([&] { p.check(); }), ErrorCode::InvalidArgument);
  p.pts = 16.5;
  p.threshold_fraction = 0.97;
  EXPECT_EQ(error_code_of([&] { p.check(); }), ErrorCode::InvalidArgument);
}

TEST(Synth, ExpDmaxPositionLimits) {
  EXPECT_NEAR(synth::exp_dmax_position(1e-9), 0.5, 1e-9);
  EXPECT_GT(synth::exp_dmax_position(50.0), 0.9);
  for (double s = 0.1; s < 30.0; s += 0.1)
    EXPECT_GT(synth::exp_dmax_position(s + 0.1), synth::exp_dmax_position(s));
}

TEST(Synth, SteepnessPlacesExponentialDmax) {
  synth::AthleteProfile p;
  p.pts = 17.5;
  p.threshold_fraction = 0.86;
  const double b = synth::steepness(p), r0 = p.start_fraction();
  const double y0 = synth::lactate_at(p, b, r0), y1 = synth::lactate_at(p, b, 1.0);
  double best = -1.0, arg = r0;
  for (int i = 1; i < 100000; ++i) {
    const double r = r0 + (1.0 - r0) * i / 100000.0;
    const double d = y0 + (y1 - y0) * (r - r0) / (1.0 - r0) - synth::lactate_at(p, b, r);
    if (d > best) {
      best = d;
      arg = r;
    }
  }
  EXPECT_NEAR(arg, 0.86, 1e-4);
}

TEST(Cohort, PlantedFamilies) {
  const auto c = synth::gen_cohort(105, 42, 10);
  EXPECT_EQ(c.sessions.size(), 105u);
  std::set<int> fam;
  for (const auto& t : c.truth) fam.insert(t.family);
  EXPECT_EQ(fam.size(), 10u);
  EXPECT_EQ(c.truth[0].athlete_id, "A001");
  EXPECT_EQ(c.truth[104].athlete_id, "A105");
}

TEST(Cohort, SingleFamilyIsHomogeneous) {
  const auto c = synth::gen_cohort(20, 1, 1);
  for (const auto& p : c.profiles) {
    EXPECT_EQ(p.family, 0);
    EXPECT_EQ(p.pts, c.profiles.front().pts);
  }
}

TEST(Cohort, AllSessionsAcceptedAndInScope) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto c = synth::gen_cohort(105, seed, 10);
    const auto res = screen(c.sessions);
    EXPECT_EQ(res.accepted.size(), 105u);
    for (const auto& t : c.truth) {
      EXPECT_GE(t.true_lt_pace, 180.0);
      EXPECT_GT(t.true_lt_rel, 0.6);
      EXPECT_LT(t.true_lt_rel, 0.95);
    }
    for (const auto& p : c.profiles) EXPECT_NO_THROW(p.check());
  }
}

TEST(Cohort, FamiliesMustFit) {
  EXPECT_EQ(error_code_of([] { synth::gen_cohort(5, 1, 6); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_code_of([] { synth::gen_cohort(5, 1, 0); }), ErrorCode::InvalidArgument);
}

TEST(Cohort, SessionFileRoundTripIsLossless) {
  const auto c = synth::gen_cohort(30, 9, 3);
  const auto text = serialize_sessions(c.sessions);
  EXPECT_EQ(parse_sessions(text), c.sessions);
}

TEST(Cohort, TruthFileRoundTrip) {
  const auto c = synth::gen_cohort(12, 4, 2);
  const auto back = synth::parse_truth(synth::serialize_truth(c.truth));
  ASSERT_EQ(back.size(), c.truth.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].athlete_id, c.truth[i].athlete_id);
    EXPECT_EQ(back[i].true_lt_rel, c.truth[i].true_lt_rel);
    EXPECT_EQ(back[i].true_lt_pace, c.truth[i].true_lt_pace);
    EXPECT_EQ(back[i].family, c.truth[i].family);
  }
}
