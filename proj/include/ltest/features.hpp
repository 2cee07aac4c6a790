// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ltest/lrnn.hpp"
#include "ltest/standardize.hpp"

namespace ltest {

/// Driving features, nested in their constructive order. Relative
/// intensity is always the first channel.
enum class FeatureSet { None = 0, Hr = 1, HrHrr = 2, HrHrrRpe = 3 };

inline constexpr FeatureSet kFeatureOrder[] = {FeatureSet::None, FeatureSet::Hr, FeatureSet::HrHrr,
                                               FeatureSet::HrHrrRpe};

inline std::string to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::None: return "none";
    case FeatureSet::Hr: return "hr";
    case FeatureSet::HrHrr: return "hr+hrr";
    case FeatureSet::HrHrrRpe: return "hr+hrr+rpe";
  }
  return "none";
}

/// Labels in the style of the feature-selection tables.
inline std::string feature_label(FeatureSet f) {
  switch (f) {
    case FeatureSet::None: return "-";
    case FeatureSet::Hr: return "HRevo";
    case FeatureSet::HrHrr: return "HRevo, HRRevo";
    case FeatureSet::HrHrrRpe: return "HRevo, HRRevo, RPEevo";
  }
  return "-";
}

inline FeatureSet parse_feature_set(const std::string& s) {
  for (auto f : kFeatureOrder)
    if (to_string(f) == s) return f;
  fail(ErrorCode::InvalidArgument, "unknown feature set '" + s + "'");
}

inline int channel_count(FeatureSet f) { return 1 + static_cast<int>(f); }

/// Raw (unnormalized) K x channels driving matrix for one athlete.
inline Eigen::MatrixXd raw_inputs(const FixedGridSeries& s, FeatureSet f) {
  const int nch = channel_count(f);
  const std::vector<double>* channels[] = {&s.grid, &s.hrevo, &s.hrrevo, &s.rpeevo};
  static const char* names[] = {"rel_intensity", "hr_end", "hrr_1min", "rpe"};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(s.size()), nch);
  for (int c = 0; c < nch; ++c) {
    const auto& ch = *channels[c];
    if (ch.size() != s.size())
      fail(ErrorCode::ChannelTooShort, "athlete " + s.athlete_id + " lacks channel " + names[c] +
                                           " required by feature set " + to_string(f));
    for (std::size_t i = 0; i < ch.size(); ++i) m(static_cast<Eigen::Index>(i), c) = ch[i];
  }
  return m;
}

/// Per-channel z-score statistics; computed on training athletes only.
struct Normalization {
  std::vector<double> input_mean;
  std::vector<double> input_std;
  double target_mean = 0.0;
  double target_std = 1.0;

  static Normalization fit(const std::vector<FixedGridSeries>& train, FeatureSet f) {
    const int nch = channel_count(f);
    Normalization n;
    n.input_mean.assign(static_cast<std::size_t>(nch), 0.0);
    n.input_std.assign(static_cast<std::size_t>(nch), 1.0);
    std::vector<double> s1(static_cast<std::size_t>(nch), 0.0), s2(static_cast<std::size_t>(nch), 0.0);
    double t1 = 0.0, t2 = 0.0, count = 0.0;
    for (const auto& s : train) {
      const Eigen::MatrixXd m = raw_inputs(s, f);
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (int c = 0; c < nch; ++c) {
          s1[static_cast<std::size_t>(c)] += m(i, c);
          s2[static_cast<std::size_t>(c)] += m(i, c) * m(i, c);
        }
        const double y = s.lactate.at(static_cast<std::size_t>(i));
        t1 += y;
        t2 += y * y;
        count += 1.0;
      }
    }
    if (count == 0.0) fail(ErrorCode::EmptyCohort, "no training series for normalization");
    auto finish = [&](double a, double b, double& mean, double& sd) {
      mean = a / count;
      const double var = b / count - mean * mean;
      sd = var > 1e-24 ? std::sqrt(var) : 1.0;
    };
    for (std::size_t c = 0; c < s1.size(); ++c) finish(s1[c], s2[c], n.input_mean[c], n.input_std[c]);
    finish(t1, t2, n.target_mean, n.target_std);
    return n;
  }

  Eigen::MatrixXd inputs(const FixedGridSeries& s, FeatureSet f) const {
    Eigen::MatrixXd m = raw_inputs(s, f);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m.col(c) = (m.col(c).array() - input_mean[static_cast<std::size_t>(c)]) /
                 input_std[static_cast<std::size_t>(c)];
    return m;
  }

  Sequence sequence(const FixedGridSeries& s, FeatureSet f) const {
    Sequence q;
    q.inputs = inputs(s, f);
    q.targets.resize(static_cast<Eigen::Index>(s.size()));
    if (s.lactate.size() != s.size())
      fail(ErrorCode::ChannelTooShort, "athlete " + s.athlete_id + " has no lactate target");
    for (std::size_t i = 0; i < s.size(); ++i)
      q.targets(static_cast<Eigen::Index>(i)) = (s.lactate[i] - target_mean) / target_std;
    return q;
  }
};

/// A trained network together with everything needed to apply it.
struct LrnnModel {
  LrnnConfig config;
  LrnnWeights weights;
  FeatureSet features = FeatureSet::None;
  Normalization norm;
  std::size_t grid_size = kDefaultGridSize;

  /// Estimated lactate (mmol/L) at each grid point. Never reads lactate.
  std::vector<double> predict(const FixedGridSeries& s) const {
    if (s.size() != grid_size)
      fail(ErrorCode::GridMismatch, "series has " + std::to_string(s.size()) + " points, model expects " +
                                        std::to_string(grid_size));
    const Eigen::VectorXd y = forward(config, weights, norm.inputs(s, features));
    std::vector<double> out(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i)
      out[static_cast<std::size_t>(i)] = y(i) * norm.target_std + norm.target_mean;
    return out;
  }
};

}  // namespace ltest
