// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ltest/csv.hpp"
#include "ltest/dmax.hpp"
#include "ltest/domain.hpp"

namespace ltest::synth {

/// Parameters of one synthetic athlete. The lactate curve is
/// baseline + amplitude * exp(steepness * (r - 1)) over relative intensity r.
struct AthleteProfile {
  double pts = 16.5;                 // km/h, on the protocol ladder
  double baseline = 1.0;             // mmol/L
  double amplitude = 8.0;            // mmol/L above baseline at r = 1
  double threshold_fraction = 0.82;  // exponential-curve Dmax as a fraction of pts
  double hr_start = 140.0;           // bpm at the first stage
  double hr_max = 190.0;             // bpm at the last stage
  double hr_deflection = 0.5;        // slope ratio above/below the deflection point
  double hr_deflection_offset = 0.0; // deflection point minus threshold fraction
  double hrr_drop = 25.0;            // bpm recovered after one minute at r = 1
  double rpe_exponent = 1.4;
  double lactate_noise = 0.3;        // mmol/L, additive gaussian
  double hr_noise = 1.5;             // bpm
  int family = 0;

  double start_fraction() const { return protocol::kStartSpeed / pts; }

  void check() const {
    if (!on_ladder(pts) || pts < protocol::kMinPts)
      fail(ErrorCode::InvalidArgument, "profile peak speed must be a ladder value >= 14.5 km/h");
    if (!(threshold_fraction > 0.6 && threshold_fraction < 0.95))
      fail(ErrorCode::InvalidArgument, "threshold fraction must lie in (0.6, 0.95)");
    const double r0 = start_fraction();
    if (!(threshold_fraction > r0 + 0.5 * (1.0 - r0)))
      fail(ErrorCode::InvalidArgument, "an exponential curve cannot place Dmax before mid-span");
  }
};

/// Relative position of the exponential Dmax inside its span for s = b * L:
/// ln((e^s - 1) / s) / s, increasing from 1/2 (s -> 0) towards 1.
inline double exp_dmax_position(double s) {
  if (s < 1e-6) return 0.5 + s / 24.0;
  return std::log(std::expm1(s) / s) / s;
}

/// Steepness b such that the exponential curve's Dmax sits at the profile's
/// threshold fraction.
inline double steepness(const AthleteProfile& p) {
  const double r0 = p.start_fraction(), span = 1.0 - r0;
  const double target = (p.threshold_fraction - r0) / span;
  double lo = 1e-6, hi = 200.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (exp_dmax_position(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / span;
}

inline double lactate_at(const AthleteProfile& p, double b, double r) {
  return p.baseline + p.amplitude * std::exp(b * (r - 1.0));
}

inline double hr_at(const AthleteProfile& p, double r) {
  const double r0 = p.start_fraction();
  const double f = std::clamp(p.threshold_fraction + p.hr_deflection_offset, r0 + 0.05 * (1.0 - r0), 1.0);
  const double slope = (p.hr_max - p.hr_start) / ((f - r0) + p.hr_deflection * (1.0 - f));
  if (r <= f) return p.hr_start + slope * (r - r0);
  return p.hr_start + slope * (f - r0) + p.hr_deflection * slope * (r - f);
}

/// Ground truth: Dmax of the noiseless curve sampled densely over the span.
inline ThresholdPoint true_threshold(const AthleteProfile& p, int samples = 200) {
  const double b = steepness(p), r0 = p.start_fraction();
  std::vector<CurvePoint> pts;
  for (int i = 0; i < samples; ++i) {
    const double r = r0 + (1.0 - r0) * i / (samples - 1);
    pts.push_back({r, lactate_at(p, b, r)});
  }
  return dmax_threshold(LactateCurve::from_points(std::move(pts)), p.pts);
}

struct GeneratedSession {
  TestSession session;
  ThresholdPoint truth;
};

inline double round_to(double v, double q) { return std::round(v / q) * q; }

inline GeneratedSession gen_session(const AthleteProfile& p, std::uint64_t seed, const std::string& id = "A001") {
  p.check();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double b = steepness(p);
  GeneratedSession g;
  g.session.athlete_id = id;
  const auto speeds = protocol_speeds(p.pts);
  const double r0 = p.start_fraction();
  for (double v : speeds) {
    const double r = v / p.pts;
    const double u = (r - r0) / (1.0 - r0);
    Stage st;
    st.speed = v;
    const double lac = lactate_at(p, b, r) + p.lactate_noise * gauss(rng);
    st.lactate = round_to(std::max(0.3, lac), 0.01);
    const double hr = hr_at(p, r) + p.hr_noise * gauss(rng);
    st.hr_end = std::round(hr);
    const double drop = p.hrr_drop * (0.6 + 0.4 * (1.0 - u));
    st.hrr_1min = std::round(hr - drop + p.hr_noise * gauss(rng));
    st.rpe_respiratory = std::clamp(std::round(1.0 + 9.0 * std::pow(u, p.rpe_exponent)), 0.0, 10.0);
    st.rpe_muscular = std::clamp(std::round(1.0 + 9.0 * std::pow(u, p.rpe_exponent * 1.2)), 0.0, 10.0);
    g.session.stages.push_back(st);
  }
  g.truth = true_threshold(p);
  return g;
}

/// Family archetype: the centre of a cluster of similar athletes.
struct Family {
  double pts_centre;
  double baseline;
  double amplitude;
  double position;  // Dmax position inside the athlete's span
};

/// Deterministic, well-separated archetypes. Fitter families sit at higher
/// peak speeds and place their threshold later in the span.
inline Family family_archetype(int k) {
  static constexpr double kPts[] = {15.5, 16.5, 17.5, 16.5, 15.5, 16.5, 17.5, 15.5, 16.5, 17.5};
  const double pts = kPts[k % 10];
  return {pts, 0.8 + 1.8 * (k / 5), 4.0 + 3.5 * (k % 5),
          0.60 + 0.025 * (pts - 15.5)};
}

struct TruthRow {
  std::string athlete_id;
  double true_lt_rel = 0.0;
  double true_lt_pace = 0.0;
  int family = 0;
};

struct Cohort {
  std::vector<TestSession> sessions;
  std::vector<TruthRow> truth;
  std::vector<AthleteProfile> profiles;
};

struct CohortOptions {
  double lactate_noise = 0.3;
  double hr_noise = 1.5;
  double position_sd = 0.005;  // within-family spread of the threshold position
  double hr_offset_sd = 0.0;   // spread of the HR deflection around the threshold
};

inline std::string athlete_id(std::size_t i, std::size_t n) {
  const auto digits = std::max<std::size_t>(3, std::to_string(n).size());
  std::string s = std::to_string(i + 1);
  return "A" + std::string(digits - s.size(), '0') + s;
}

/// Athlete i belongs to family i mod n_families; profile parameters are
/// drawn around the family archetype.
inline Cohort gen_cohort(std::size_t n, std::uint64_t seed, int n_families, const CohortOptions& opt = {}) {
  if (n_families < 1 || static_cast<std::size_t>(n_families) > n)
    fail(ErrorCode::InvalidArgument, "need 1 <= families <= cohort size");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Cohort c;
  for (std::size_t i = 0; i < n; ++i) {
    const int fam = static_cast<int>(i % static_cast<std::size_t>(n_families));
    const Family arch = family_archetype(fam);
    AthleteProfile p;
    p.family = fam;
    p.pts = arch.pts_centre;
    p.baseline = std::max(0.5, arch.baseline + 0.08 * gauss(rng));
    p.amplitude = std::max(2.0, arch.amplitude + 0.25 * gauss(rng));
    const double position = std::clamp(arch.position + opt.position_sd * gauss(rng), 0.53, 0.8);
    const double r0 = p.start_fraction();
    p.threshold_fraction = r0 + position * (1.0 - r0);
    p.hr_start = 128.0 + 6.0 * gauss(rng);
    p.hr_max = 188.0 + 5.0 * gauss(rng);
    p.hr_deflection = std::clamp(0.45 + 0.05 * gauss(rng), 0.25, 0.7);
    p.hr_deflection_offset = opt.hr_offset_sd * gauss(rng);
    p.hrr_drop = 28.0 + 3.0 * gauss(rng);
    p.rpe_exponent = 1.3 + 0.1 * gauss(rng);
    p.lactate_noise = opt.lactate_noise;
    p.hr_noise = opt.hr_noise;
    const auto id = athlete_id(i, n);
    auto g = gen_session(p, rng(), id);
    c.truth.push_back({id, g.truth.x_at_lt, g.truth.pace_at_lt, fam});
    c.sessions.push_back(std::move(g.session));
    c.profiles.push_back(p);
  }
  return c;
}

inline std::string serialize_truth(const std::vector<TruthRow>& rows) {
  std::string out = "athlete_id,true_lt_rel,true_lt_pace,family\n";
  for (const auto& r : rows)
    out += r.athlete_id + ',' + csv::format_number(r.true_lt_rel) + ',' + csv::format_number(r.true_lt_pace) +
           ',' + std::to_string(r.family) + '\n';
  return out;
}

inline std::vector<TruthRow> parse_truth(std::string_view content) {
  const auto lines = csv::data_lines(content);
  std::vector<TruthRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i].text);
    if (f.size() != 4) fail(ErrorCode::ParseError, "line " + std::to_string(lines[i].number) + ": expected 4 fields");
    auto rel = csv::parse_number(f[1]), pace = csv::parse_number(f[2]), fam = csv::parse_number(f[3]);
    if (!rel || !pace || !fam) fail(ErrorCode::ParseError, "line " + std::to_string(lines[i].number) + ": bad number");
    out.push_back({f[0], *rel, *pace, static_cast<int>(*fam)});
  }
  return out;
}

}  // namespace ltest::synth
