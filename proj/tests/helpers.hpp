// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "ltest/domain.hpp"
#include "ltest/error.hpp"

namespace ltest::testing {

/// Session on the protocol ladder up to `pts` with lactate on every stage
/// (y = 1 + 0.05 * exp(v / 2)) and plausible HR / RPE channels.
inline TestSession ladder_session(const std::string& id, double pts) {
  TestSession s;
  s.athlete_id = id;
  const auto speeds = protocol_speeds(pts);
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    Stage st;
    st.speed = speeds[i];
    st.lactate = 1.0 + 0.05 * std::exp(speeds[i] / 2.0);
    st.hr_end = 120.0 + 5.0 * static_cast<double>(i);
    st.hrr_1min = 95.0 + 4.0 * static_cast<double>(i);
    st.rpe_respiratory = std::min(10.0, 1.0 + static_cast<double>(i));
    st.rpe_muscular = std::min(10.0, 2.0 + static_cast<double>(i));
    s.stages.push_back(st);
  }
  return s;
}

template <class F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an ltest::Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace ltest::testing
