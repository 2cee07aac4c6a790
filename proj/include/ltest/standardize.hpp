// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ltest/csv.hpp"
#include "ltest/domain.hpp"

namespace ltest {

inline constexpr std::size_t kDefaultGridSize = 20;

/// Stage intensities expressed as a fraction of the athlete's peak speed.
struct RelativizedSession {
  std::string athlete_id;
  double pts = 0.0;
  std::vector<double> rel;  // one per stage, last == 1.0
  std::vector<Stage> stages;
};

inline RelativizedSession relativize(const TestSession& s) {
  if (s.stages.empty() || s.pts() <= 0.0)
    fail(ErrorCode::InvalidArgument, "athlete " + s.athlete_id + " has no completed stages");
  RelativizedSession out{s.athlete_id, s.pts(), {}, s.stages};
  out.rel.reserve(s.stages.size());
  for (const auto& st : s.stages) out.rel.push_back(st.speed / out.pts);
  out.rel.back() = 1.0;
  return out;
}

inline RelativizedSession relativize(const ValidatedSession& s) { return relativize(s.session()); }

/// Equal-length, intensity-relativized series. Channels absent from the
/// source session are left empty.
struct FixedGridSeries {
  std::string athlete_id;
  std::vector<double> grid;
  std::vector<double> lactate;
  std::vector<double> hrevo;
  std::vector<double> hrrevo;
  std::vector<double> rpeevo;
  double pts = 0.0;

  std::size_t size() const { return grid.size(); }
};

namespace detail {

/// Piecewise-linear interpolation through (xs, ys), held constant outside
/// the sampled range.
inline double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  if (x == xs[lo]) return ys[lo];
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

template <class Getter>
std::vector<double> resample_channel(const RelativizedSession& s, const std::vector<double>& grid,
                                     Getter get, const char* name, bool required) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < s.stages.size(); ++i) {
    if (auto v = get(s.stages[i])) {
      xs.push_back(s.rel[i]);
      ys.push_back(*v);
    }
  }
  if (xs.size() < 2 && !required) return {};
  if (xs.size() < 2)
    fail(ErrorCode::ChannelTooShort, "athlete " + s.athlete_id + " channel " + name + " has " +
                                         std::to_string(xs.size()) + " samples, 2 required");
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) out.push_back(interpolate(xs, ys, g));
  return out;
}

}  // namespace detail

/// Uniform grid of k points spanning [first, 1.0]; the last point is 1.0 exactly.
inline std::vector<double> uniform_grid(double first, std::size_t k) {
  std::vector<double> g(k);
  for (std::size_t i = 0; i < k; ++i)
    g[i] = first + (1.0 - first) * static_cast<double>(i) / static_cast<double>(k - 1);
  g.front() = first;
  g.back() = 1.0;
  return g;
}

/// Resamples every available channel onto k points between the athlete's
/// first and last relative intensity by linear interpolation.
inline FixedGridSeries resample(const RelativizedSession& s, std::size_t k = kDefaultGridSize,
                                bool require_lactate = true) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "grid size must be at least 2");
  if (s.stages.size() < 2)
    fail(ErrorCode::ChannelTooShort, "athlete " + s.athlete_id + " has fewer than 2 stages");
  FixedGridSeries out;
  out.athlete_id = s.athlete_id;
  out.pts = s.pts;
  out.grid = uniform_grid(s.rel.front(), k);
  out.lactate = detail::resample_channel(s, out.grid, [](const Stage& st) { return st.lactate; },
                                         "lactate", require_lactate);
  out.hrevo = detail::resample_channel(s, out.grid, [](const Stage& st) { return st.hr_end; },
                                       "hr_end", false);
  out.hrrevo = detail::resample_channel(s, out.grid, [](const Stage& st) { return st.hrr_1min; },
                                        "hrr_1min", false);
  out.rpeevo = detail::resample_channel(s, out.grid, [](const Stage& st) { return st.rpe(); },
                                        "rpe", false);
  return out;
}

inline FixedGridSeries standardize(const ValidatedSession& s, std::size_t k = kDefaultGridSize) {
  return resample(relativize(s), k, true);
}

inline std::vector<FixedGridSeries> standardize(const std::vector<ValidatedSession>& cohort,
                                                std::size_t k = kDefaultGridSize) {
  std::vector<FixedGridSeries> out;
  out.reserve(cohort.size());
  for (const auto& s : cohort) out.push_back(standardize(s, k));
  return out;
}

/// Standardized cohort file: one row per athlete per grid point.
inline std::string serialize_standardized(const std::vector<FixedGridSeries>& cohort) {
  std::string out = "athlete_id,rel_intensity,lactate,hrevo,hrrevo,rpeevo\n";
  auto cell = [](const std::vector<double>& ch, std::size_t i) {
    return ch.empty() ? std::string("-") : csv::format_number(ch[i]);
  };
  for (const auto& s : cohort)
    for (std::size_t i = 0; i < s.size(); ++i)
      out += s.athlete_id + ',' + csv::format_number(s.grid[i]) + ',' + cell(s.lactate, i) + ',' +
             cell(s.hrevo, i) + ',' + cell(s.hrrevo, i) + ',' + cell(s.rpeevo, i) + '\n';
  return out;
}

}  // namespace ltest
