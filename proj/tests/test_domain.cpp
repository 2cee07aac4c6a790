// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "ltest/domain.hpp"
#include "ltest/session_io.hpp"

using namespace ltest;
using ltest::testing::error_code_of;
using ltest::testing::ladder_session;

TEST(ProtocolSpeeds, CoarseLadderEndsAt13_5) {
  EXPECT_EQ(protocol_speeds(13.5), (std::vector<double>{9, 10.5, 12, 13.5}));
}

TEST(ProtocolSpeeds, SingleStartingStage) { EXPECT_EQ(protocol_speeds(9.0), (std::vector<double>{9})); }

TEST(ProtocolSpeeds, FineStepsAfterCoarse) {
  EXPECT_EQ(protocol_speeds(17.5), (std::vector<double>{9, 10.5, 12, 13.5, 14.5, 15.5, 16.5, 17.5}));
}

TEST(ProtocolSpeeds, OffLadderMaximumRoundsDown) {
  EXPECT_EQ(protocol_speeds(14.0), (std::vector<double>{9, 10.5, 12, 13.5}));
}

TEST(ProtocolSpeeds, BelowStartIsProtocolError) {
  EXPECT_EQ(error_code_of([] { protocol_speeds(8.5); }), ErrorCode::ProtocolError);
}

TEST(ProtocolSpeeds, StepPropertyHoldsOverSweep) {
  for (double m = 9.0; m <= 25.0; m += 0.25) {
    const auto v = protocol_speeds(m);
    ASSERT_FALSE(v.empty());
    EXPECT_LE(v.back(), m + 1e-12);
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double d = v[i] - v[i - 1];
      if (v[i] <= 13.5)
        EXPECT_EQ(d, 1.5);
      else
        EXPECT_EQ(d, 1.0);
    }
  }
}

TEST(ProtocolSpeeds, LadderIndexAgreesWithList) {
  const auto v = protocol_speeds(20.5);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(ladder_speed(i), v[i]);
    EXPECT_TRUE(on_ladder(v[i]));
  }
  EXPECT_FALSE(on_ladder(11.0));
  EXPECT_FALSE(on_ladder(14.0));
}

TEST(Validate, BoundaryPtsWithFiveLactatePointsAccepted) {
  TestSession s = ladder_session("A", 14.5);
  ASSERT_EQ(s.stages.size(), 5u);
  const ValidatedSession v = validate(s);
  EXPECT_EQ(v.pts(), 14.5);
  EXPECT_EQ(v.n_lactate_points(), 5);
}

TEST(Validate, LowPtsRejected) {
  EXPECT_EQ(error_code_of([] { validate(ladder_session("A", 13.5)); }), ErrorCode::InsufficientPTS);
}

TEST(Validate, TooFewLactatePointsRejected) {
  TestSession s = ladder_session("A", 16.5);
  for (std::size_t i = 0; i + 4 < s.stages.size(); ++i) s.stages[i].lactate.reset();
  ASSERT_EQ(s.lactate_points(), 4);
  EXPECT_EQ(error_code_of([&] { validate(s); }), ErrorCode::InsufficientLactatePoints);
}

TEST(Validate, AcceptedImpliesLadderPts) {
  for (double pts : {14.5, 15.5, 18.5, 20.5}) {
    const auto v = validate(ladder_session("A", pts));
    const auto ladder = protocol_speeds(v.pts());
    EXPECT_EQ(ladder.back(), v.pts());
    EXPECT_GE(v.pts(), 14.5);
  }
}

TEST(Validate, HrRecoveryAboveHrEndIsAllowed) {
  TestSession s = ladder_session("A", 15.5);
  s.stages[2].hrr_1min = *s.stages[2].hr_end + 10.0;
  EXPECT_NO_THROW(validate(s));
}

TEST(Screen, RejectionsCarryRule) {
  const auto res = screen({ladder_session("A", 15.5), ladder_session("B", 12.0), ladder_session("C", 16.5)});
  ASSERT_EQ(res.accepted.size(), 2u);
  ASSERT_EQ(res.rejected.size(), 1u);
  EXPECT_EQ(res.rejected[0].athlete_id, "B");
  EXPECT_EQ(res.rejected[0].rule, ErrorCode::InsufficientPTS);
}

TEST(Stage, RpeAveragesAvailableChannels) {
  Stage st;
  EXPECT_FALSE(st.rpe().has_value());
  st.rpe_respiratory = 4.0;
  EXPECT_DOUBLE_EQ(*st.rpe(), 4.0);
  st.rpe_muscular = 6.0;
  EXPECT_DOUBLE_EQ(*st.rpe(), 5.0);
}

// ---------------------------------------------------------------------------
// Session file format.

TEST(ParseSessions, SevenStageBlock) {
  std::string text = std::string(kSessionHeader) + "\n";
  for (double v : protocol_speeds(15.5))
    text += "X1," + csv::format_number(v) + ",2.5,150,120,5,6\n";
  const auto s = parse_sessions(text);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].stages.size(), 6u);
  text += "X2,9,1,1,1,1,1\n";
  for (double v : protocol_speeds(16.5))
    if (v > 9) text += "X2," + csv::format_number(v) + ",2.5,150,120,5,6\n";
  const auto s2 = parse_sessions(text);
  ASSERT_EQ(s2.size(), 2u);
  EXPECT_EQ(s2[1].stages.size(), 7u);
}

TEST(ParseSessions, DashMeansMissingLactate) {
  const std::string text = std::string(kSessionHeader) + "\nA,9,-,140,110,2,2\nA,10.5,1.8,150,120,3,3\n";
  const auto s = parse_sessions(text);
  EXPECT_FALSE(s[0].stages[0].lactate.has_value());
  EXPECT_DOUBLE_EQ(*s[0].stages[1].lactate, 1.8);
}

TEST(ParseSessions, OffLadderSpeedIsProtocolError) {
  const std::string text = std::string(kSessionHeader) + "\nA,9,1,140,110,2,2\nA,10.5,1,150,120,3,3\nA,11.0,1,1,1,1,1\n";
  EXPECT_EQ(error_code_of([&] { parse_sessions(text); }), ErrorCode::ProtocolError);
}

TEST(ParseSessions, MalformedRowReportsLineNumber) {
  const std::string text = std::string(kSessionHeader) + "\nA,9,1,140,110,2,2\nA,10.5,abc,150,120,3,3\n";
  try {
    parse_sessions(text);
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseSessions, WrongFieldCountIsParseError) {
  const std::string text = std::string(kSessionHeader) + "\nA,9,1,140\n";
  EXPECT_EQ(error_code_of([&] { parse_sessions(text); }), ErrorCode::ParseError);
}

TEST(ParseSessions, NonContiguousAthleteIsParseError) {
  const std::string text = std::string(kSessionHeader) + "\nA,9,1,1,1,1,1\nB,9,1,1,1,1,1\nA,10.5,1,1,1,1,1\n";
  EXPECT_EQ(error_code_of([&] { parse_sessions(text); }), ErrorCode::ParseError);
}

TEST(ParseSessions, FeatureOnlyFileHasNoLactate) {
  const std::string text = "athlete_id,speed,hr_end\nA,9,140\nA,10.5,150\n";
  const auto s = parse_sessions(text);
  EXPECT_FALSE(s[0].stages[1].lactate.has_value());
  EXPECT_DOUBLE_EQ(*s[0].stages[1].hr_end, 150.0);
}

TEST(ParseSessions, IncidenceNotesAttach) {
  const std::string text = "# incidence,A,stopped early\n" + std::string(kSessionHeader) + "\nA,9,1,1,1,1,1\n";
  const auto s = parse_sessions(text);
  ASSERT_EQ(s[0].incidences.size(), 1u);
  EXPECT_EQ(s[0].incidences[0], "stopped early");
}

TEST(SerializeSessions, ByteStableRoundTrip) {
  std::vector<TestSession> cohort{ladder_session("A", 15.5), ladder_session("B", 18.5)};
  cohort[0].stages[1].lactate.reset();
  cohort[1].incidences.push_back("note, with comma");
  const std::string once = serialize_sessions(cohort);
  const auto parsed = parse_sessions(once);
  EXPECT_EQ(parsed, cohort);
  EXPECT_EQ(serialize_sessions(parsed), once);
}
