// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ltest/error.hpp"

namespace ltest {

/// Incremental treadmill protocol: 9 km/h start, +1.5 km/h steps up to
/// 13.5 km/h, then +1 km/h steps until exhaustion.
namespace protocol {
inline constexpr double kStartSpeed = 9.0;
inline constexpr double kCoarseStep = 1.5;
inline constexpr double kCoarseEnd = 13.5;
inline constexpr double kFineStep = 1.0;
inline constexpr double kMinPts = 14.5;
inline constexpr int kMinLactatePoints = 5;
inline constexpr double kSpeedTolerance = 1e-6;
}  // namespace protocol

struct Stage {
  double speed = 0.0;                   // km/h
  std::optional<double> lactate;        // mmol/L, empty if not sampled
  std::optional<double> hr_end;         // beats/min at end of stage
  std::optional<double> hrr_1min;       // beats/min after 1 min recovery
  std::optional<double> rpe_respiratory;  // Borg 0-10
  std::optional<double> rpe_muscular;     // Borg 0-10

  /// Mean of the available RPE channels.
  std::optional<double> rpe() const {
    if (rpe_respiratory && rpe_muscular) return 0.5 * (*rpe_respiratory + *rpe_muscular);
    if (rpe_respiratory) return rpe_respiratory;
    return rpe_muscular;
  }

  bool operator==(const Stage&) const = default;
};

struct TestSession {
  std::string athlete_id;
  std::vector<Stage> stages;
  std::vector<std::string> incidences;

  /// Peak treadmill speed: speed of the last completed stage.
  double pts() const { return stages.empty() ? 0.0 : stages.back().speed; }

  int lactate_points() const {
    int n = 0;
    for (const auto& s : stages) n += s.lactate.has_value();
    return n;
  }

  bool operator==(const TestSession&) const = default;
};

/// A session that passed screening. Only constructible through validate().
class ValidatedSession {
 public:
  const TestSession& session() const { return session_; }
  const std::string& athlete_id() const { return session_.athlete_id; }
  const std::vector<Stage>& stages() const { return session_.stages; }
  double pts() const { return session_.pts(); }
  int n_lactate_points() const { return n_lactate_points_; }

 private:
  friend ValidatedSession validate(const TestSession&);
  explicit ValidatedSession(TestSession s)
      : session_(std::move(s)), n_lactate_points_(session_.lactate_points()) {}

  TestSession session_;
  int n_lactate_points_ = 0;
};

/// Ladder of stage speeds from 9 km/h up to the largest value <= max_speed.
inline std::vector<double> protocol_speeds(double max_speed) {
  if (!(max_speed >= protocol::kStartSpeed - protocol::kSpeedTolerance))
    fail(ErrorCode::ProtocolError, "maximum speed below protocol start of 9 km/h");
  std::vector<double> out;
  // Integer half-km/h units keep the ladder exact.
  int v2 = 18;
  const int limit2 = static_cast<int>(std::floor(2.0 * max_speed + 2.0 * protocol::kSpeedTolerance));
  while (v2 <= limit2) {
    out.push_back(v2 / 2.0);
    v2 += v2 < 27 ? 3 : 2;
  }
  return out;
}

/// Speed expected at 0-based stage index, per the protocol ladder.
inline double ladder_speed(std::size_t index) {
  if (index <= 3) return protocol::kStartSpeed + protocol::kCoarseStep * static_cast<double>(index);
  return protocol::kCoarseEnd + protocol::kFineStep * static_cast<double>(index - 3);
}

inline bool on_ladder(double speed) {
  if (speed < protocol::kStartSpeed - protocol::kSpeedTolerance) return false;
  for (std::size_t i = 0;; ++i) {
    const double l = ladder_speed(i);
    if (std::abs(l - speed) <= protocol::kSpeedTolerance) return true;
    if (l > speed) return false;
  }
}

/// Structural checks that hold for every session accepted by the parser.
inline void check_protocol(const TestSession& s) {
  if (s.stages.empty()) fail(ErrorCode::ProtocolError, "athlete " + s.athlete_id + " has no stages");
  for (std::size_t i = 0; i < s.stages.size(); ++i) {
    const Stage& st = s.stages[i];
    if (std::abs(st.speed - ladder_speed(i)) > protocol::kSpeedTolerance)
      fail(ErrorCode::ProtocolError, "athlete " + s.athlete_id + " stage " + std::to_string(i + 1) +
                                         " speed " + std::to_string(st.speed) +
                                         " is not the protocol ladder value " +
                                         std::to_string(ladder_speed(i)));
    if (st.lactate && *st.lactate < 0.0)
      fail(ErrorCode::ProtocolError, "athlete " + s.athlete_id + " negative lactate");
    for (const auto& rpe : {st.rpe_respiratory, st.rpe_muscular})
      if (rpe && (*rpe < 0.0 || *rpe > 10.0))
        fail(ErrorCode::ProtocolError, "athlete " + s.athlete_id + " RPE outside Borg 0-10");
  }
}

/// Screens one session: PTS >= 14.5 km/h and at least 5 lactate samples.
inline ValidatedSession validate(const TestSession& s) {
  check_protocol(s);
  if (s.pts() < protocol::kMinPts - protocol::kSpeedTolerance)
    fail(ErrorCode::InsufficientPTS,
         "athlete " + s.athlete_id + " peak speed below 14.5 km/h");
  if (s.lactate_points() < protocol::kMinLactatePoints)
    fail(ErrorCode::InsufficientLactatePoints,
         "athlete " + s.athlete_id + " has " + std::to_string(s.lactate_points()) +
             " lactate points, 5 required");
  return ValidatedSession(s);
}

struct Rejection {
  std::string athlete_id;
  ErrorCode rule;
  std::string message;
};

struct ScreeningResult {
  std::vector<ValidatedSession> accepted;
  std::vector<Rejection> rejected;
};

inline ScreeningResult screen(const std::vector<TestSession>& sessions) {
  ScreeningResult out;
  for (const auto& s : sessions) {
    try {
      out.accepted.push_back(validate(s));
    } catch (const Error& e) {
      out.rejected.push_back({s.athlete_id, e.code(), e.what()});
    }
  }
  return out;
}

}  // namespace ltest
