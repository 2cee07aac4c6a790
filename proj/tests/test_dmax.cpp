// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "ltest/dmax.hpp"

using namespace ltest;
using ltest::testing::error_code_of;

namespace {

std::vector<CurvePoint> sample(const std::vector<double>& xs, const std::function<double(double)>& f) {
  std::vector<CurvePoint> p;
  for (double x : xs) p.push_back({x, f(x)});
  return p;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
  return v;
}

// Oracle: least squares through the normal equations (V^T V) c = V^T y,
// solved by Gaussian elimination with partial pivoting on the raw
// monomial basis.
std::vector<double> normal_equations_fit(const std::vector<CurvePoint>& pts, int degree) {
  const int m = degree + 1;
  std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
  for (const auto& p : pts) {
    std::vector<double> pw(2 * m, 1.0);
    for (int k = 1; k < 2 * m; ++k) pw[k] = pw[k - 1] * p.x;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) a[i][j] += pw[i + j];
      a[i][m] += pw[i] * p.y;
    }
  }
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> c(m);
  for (int i = 0; i < m; ++i) c[i] = a[i][m] / a[i][i];
  return c;
}

// Oracle: dense grid search of the perpendicular distance to the chord.
double brute_force_dmax(const Polynomial& p, double x0, double x1, int n = 100000) {
  const double y0 = p(x0), y1 = p(x1), slope = (y1 - y0) / (x1 - x0);
  double best = -1.0, bx = x0;
  for (int i = 1; i < n; ++i) {
    const double x = x0 + (x1 - x0) * i / n;
    const double d = std::abs(p(x) - (y0 + slope * (x - x0)));
    if (d > best) {
      best = d;
      bx = x;
    }
  }
  return bx;
}

}  // namespace

TEST(FitCubic, ExactCubicRecovered) {
  const auto p = fit_cubic(sample(linspace(0.0, 1.5, 7), [](double x) { return x * x * x; }));
  ASSERT_EQ(p.coefficients.size(), 4u);
  EXPECT_NEAR(p.coefficients[0], 0.0, 1e-9);
  EXPECT_NEAR(p.coefficients[1], 0.0, 1e-9);
  EXPECT_NEAR(p.coefficients[2], 0.0, 1e-9);
  EXPECT_NEAR(p.coefficients[3], 1.0, 1e-9);
}

TEST(FitCubic, CollinearPointsGiveLine) {
  const auto p = fit_cubic(sample(linspace(0.5, 1.0, 5), [](double x) { return 2.0 + 3.0 * x; }));
  EXPECT_NEAR(p.coefficients[0], 2.0, 1e-9);
  EXPECT_NEAR(p.coefficients[1], 3.0, 1e-9);
  EXPECT_NEAR(p.coefficients[2], 0.0, 1e-8);
  EXPECT_NEAR(p.coefficients[3], 0.0, 1e-8);
}

TEST(FitCubic, NoisyCubicMatchesNormalEquationsOracle) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng), c3 = coef(rng);
    std::vector<CurvePoint> pts;
    for (double x : linspace(0.0, 2.0, 8)) pts.push_back({x, c0 + x * (c1 + x * (c2 + x * c3)) + noise(rng)});
    const auto fit = fit_cubic(pts);
    const auto oracle = normal_equations_fit(pts, 3);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(fit.coefficients[j], oracle[j], 1e-8) << "trial " << trial;
    // Residual norm is minimal: any perturbation of the solution increases it.
    auto rss = [&](const std::vector<double>& c) {
      double s = 0.0;
      for (const auto& p : pts) {
        const double r = Polynomial{c}(p.x) - p.y;
        s += r * r;
      }
      return s;
    };
    const double base = rss(fit.coefficients);
    for (int j = 0; j < 4; ++j) {
      auto c = fit.coefficients;
      c[j] += 1e-3;
      EXPECT_GT(rss(c), base);
    }
    // Coefficients stay near the generating cubic (3 sigma of the noise is
    // loose here because the monomial basis amplifies it; compare values).
    for (double x : linspace(0.0, 2.0, 9)) EXPECT_NEAR(fit(x), c0 + x * (c1 + x * (c2 + x * c3)), 0.3);
  }
}

TEST(FitCubic, RepeatedXIsSingular) {
  std::vector<CurvePoint> pts{{0, 1}, {1, 2}, {1, 3}, {2, 4}, {3, 5}};
  EXPECT_EQ(error_code_of([&] { fit_cubic(pts); }), ErrorCode::SingularFit);
}

TEST(LactateCurve, NeedsFivePointsStrictlyIncreasing) {
  EXPECT_EQ(error_code_of([] { LactateCurve::from_points({{0, 1}, {1, 2}, {2, 3}, {3, 5}}); }),
            ErrorCode::InsufficientLactatePoints);
  EXPECT_EQ(error_code_of([] { LactateCurve::from_points({{0, 1}, {2, 2}, {1, 3}, {3, 5}, {4, 8}}); }),
            ErrorCode::SingularFit);
}

TEST(Dmax, ParabolaOnUnitInterval) {
  const auto curve = LactateCurve::from_points(sample(linspace(0.0, 1.0, 6), [](double x) { return x * x; }));
  const auto t = dmax_threshold(curve);
  EXPECT_NEAR(t.x_at_lt, 0.5, 1e-9);
  EXPECT_NEAR(t.lactate_at_lt, 0.25, 1e-9);
}

TEST(Dmax, StraightLineIsDegenerate) {
  const auto curve = LactateCurve::from_points(sample(linspace(0.5, 1.0, 6), [](double x) { return 1 + 4 * x; }));
  EXPECT_EQ(error_code_of([&] { dmax_threshold(curve); }), ErrorCode::DegenerateCurve);
}

TEST(Dmax, AgreesWithBruteForceOnRandomCubics) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  int checked = 0;
  while (checked < 100) {
    std::vector<double> c{coef(rng), coef(rng), coef(rng), coef(rng)};
    const Polynomial truth{c};
    const auto curve = LactateCurve::from_points(sample(linspace(0.0, 1.0, 6), truth));
    ThresholdPoint t;
    try {
      t = dmax_threshold(curve);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::DegenerateCurve);
      continue;
    }
    EXPECT_NEAR(t.x_at_lt, brute_force_dmax(curve.fit, 0.0, 1.0), 1e-4);
    EXPECT_GT(t.x_at_lt, 0.0);
    EXPECT_LT(t.x_at_lt, 1.0);
    ++checked;
  }
}

TEST(Dmax, HigherDegreeUsesCompanionRoots) {
  const auto curve = LactateCurve::from_points(
      sample(linspace(0.5, 1.0, 9), [](double x) { return 1.0 + std::exp(6.0 * (x - 1.0)) * 8.0; }), 5);
  const auto t = dmax_threshold(curve);
  EXPECT_NEAR(t.x_at_lt, brute_force_dmax(curve.fit, 0.5, 1.0), 1e-4);
}

TEST(Dmax, ArgmaxInvariantUnderPositiveScaling) {
  const auto base = sample(linspace(0.55, 1.0, 8), [](double x) { return 0.8 + 0.3 * std::exp(5.0 * x); });
  const double x = dmax_threshold(LactateCurve::from_points(base)).x_at_lt;
  for (double a : {0.1, 2.0, 37.0}) {
    auto scaled = base;
    for (auto& p : scaled) p.y = a * p.y + 4.0;
    EXPECT_NEAR(dmax_threshold(LactateCurve::from_points(scaled)).x_at_lt, x, 1e-9);
  }
}

TEST(Dmax, ConvexCurveLiesBelowChord) {
  const auto curve =
      LactateCurve::from_points(sample(linspace(0.55, 1.0, 8), [](double x) { return 1.0 + std::pow(x, 4.0) * 6; }));
  const auto t = dmax_threshold(curve);
  const double y0 = curve.fit(0.55), y1 = curve.fit(1.0);
  const double chord = y0 + (y1 - y0) / 0.45 * (t.x_at_lt - 0.55);
  EXPECT_LT(t.lactate_at_lt, chord);
}

TEST(Dmax, EqualDistanceRootsPickLowerX) {
  // x(x - 1/2)(x - 1) + x: antisymmetric bulge about x = 1/2.
  const auto curve = LactateCurve::from_points(
      sample(linspace(0.0, 1.0, 7), [](double x) { return x * (x - 0.5) * (x - 1.0) + x; }));
  const auto t = dmax_threshold(curve);
  EXPECT_NEAR(t.x_at_lt, 0.5 - 1.0 / (2.0 * std::sqrt(3.0)), 1e-9);
}

TEST(Dmax, SpeedScaleConvertsToPace) {
  const auto curve = LactateCurve::from_points(sample(linspace(0.0, 1.0, 6), [](double x) { return x * x; }));
  const auto t = dmax_threshold(curve, 16.0);
  EXPECT_NEAR(t.speed_at_lt, 8.0, 1e-9);
  EXPECT_NEAR(t.pace_at_lt, 450.0, 1e-7);
}

TEST(ToPace, Examples) {
  EXPECT_DOUBLE_EQ(to_pace(1.0, 12.0), 300.0);
  EXPECT_NEAR(to_pace(0.8, 15.0), 300.0, 1e-12);
  EXPECT_NEAR(to_pace(0.9, 16.5), 242.4, 0.05);
  EXPECT_NEAR(to_pace(0.9, 16.5), 3600.0 / 14.85, 1e-12);
}
