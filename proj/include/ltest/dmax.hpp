// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "ltest/error.hpp"

namespace ltest {

struct CurvePoint {
  double x = 0.0;  // relative intensity or km/h
  double y = 0.0;  // mmol/L
};

/// Polynomial with ascending coefficients c0 + c1 x + c2 x^2 + ...
struct Polynomial {
  std::vector<double> coefficients;

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  Polynomial derivative() const {
    Polynomial d;
    for (std::size_t i = 1; i < coefficients.size(); ++i)
      d.coefficients.push_back(static_cast<double>(i) * coefficients[i]);
    if (d.coefficients.empty()) d.coefficients.push_back(0.0);
    return d;
  }

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
};

/// Least-squares polynomial fit. x is mapped to [-1, 1] for conditioning
/// and the solution expanded back into the monomial basis of x.
inline Polynomial fit_polynomial(std::span<const CurvePoint> points, int degree) {
  if (degree < 1) fail(ErrorCode::InvalidArgument, "polynomial degree must be >= 1");
  std::vector<double> xs;
  for (const auto& p : points) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  if (std::adjacent_find(xs.begin(), xs.end()) != xs.end())
    fail(ErrorCode::SingularFit, "curve x values are not distinct");
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < degree + 1) fail(ErrorCode::SingularFit, "too few points for polynomial degree");

  const double lo = xs.front(), hi = xs.back();
  const double centre = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (points[static_cast<std::size_t>(i)].x - centre) / half;
    double p = 1.0;
    for (int j = 0; j <= degree; ++j, p *= t) a(i, j) = p;
    b(i) = points[static_cast<std::size_t>(i)].y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < degree + 1) fail(ErrorCode::SingularFit, "rank-deficient polynomial fit");
  const Eigen::VectorXd ct = qr.solve(b);

  // p(x) = sum_j ct_j ((x - centre)/half)^j, expanded binomially.
  std::vector<double> c(static_cast<std::size_t>(degree + 1), 0.0);
  for (int j = 0; j <= degree; ++j) {
    const double scale = ct(j) / std::pow(half, j);
    double binom = 1.0;
    for (int k = 0; k <= j; ++k) {
      c[static_cast<std::size_t>(k)] += scale * binom * std::pow(-centre, j - k);
      binom = binom * (j - k) / (k + 1);
    }
  }
  return Polynomial{std::move(c)};
}

inline Polynomial fit_cubic(std::span<const CurvePoint> points) { return fit_polynomial(points, 3); }

/// Lactate-vs-intensity curve with its least-squares polynomial fit.
struct LactateCurve {
  std::vector<CurvePoint> points;
  Polynomial fit;

  double x_first() const { return points.front().x; }
  double x_last() const { return points.back().x; }

  static LactateCurve from_points(std::vector<CurvePoint> pts, int degree = 3) {
    if (pts.size() < 5)
      fail(ErrorCode::InsufficientLactatePoints, "lactate curve needs at least 5 points");
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (!(pts[i].x > pts[i - 1].x))
        fail(ErrorCode::SingularFit, "lactate curve x values must be strictly increasing");
    LactateCurve c;
    c.fit = fit_polynomial(pts, degree);
    c.points = std::move(pts);
    return c;
  }
};

struct ThresholdPoint {
  double x_at_lt = 0.0;
  double lactate_at_lt = 0.0;
  double speed_at_lt = 0.0;  // km/h
  double pace_at_lt = 0.0;   // s/km
};

/// Pace in s/km for a relative intensity and a peak speed in km/h.
inline double to_pace(double x_at_lt, double pts) { return 3600.0 / (x_at_lt * pts); }

inline constexpr double kDegenerateDistance = 1e-9;
inline constexpr double kRootTieTolerance = 1e-12;

namespace detail {

/// Real roots of a x^2 + b x + c, numerically stable form.
inline std::vector<double> quadratic_roots(double a, double b, double c) {
  if (a == 0.0) {
    if (b == 0.0) return {};
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  std::vector<double> r;
  if (q != 0.0) {
    r.push_back(q / a);
    r.push_back(c / q);
  } else {
    r.push_back(0.0);
  }
  return r;
}

/// Real roots of a general polynomial via the companion matrix.
inline std::vector<double> polynomial_roots(std::vector<double> c) {
  while (c.size() > 1 && std::abs(c.back()) <= 1e-300) c.pop_back();
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg <= 0) return {};
  if (deg <= 2) return quadratic_roots(deg == 2 ? c[2] : 0.0, c[1], c[0]);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<double> out;
  for (int i = 0; i < deg; ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) <= 1e-10 * std::max(1.0, std::abs(z.real()))) out.push_back(z.real());
  }
  return out;
}

}  // namespace detail

/// Dmax threshold: the interior point of the fitted curve farthest from the
/// chord joining the fitted values at the first and last sampled x. The
/// maximizer solves p'(x) = chord slope. `speed_scale` converts x into km/h
/// (peak speed for relative curves, 1 for curves already in km/h).
inline ThresholdPoint dmax_threshold(const LactateCurve& curve, double speed_scale = 1.0) {
  const double x0 = curve.x_first(), x1 = curve.x_last();
  if (!(x1 > x0)) fail(ErrorCode::DegenerateCurve, "curve endpoints coincide");
  const Polynomial& p = curve.fit;
  const double y0 = p(x0), y1 = p(x1);
  const double slope = (y1 - y0) / (x1 - x0);
  const double norm = std::sqrt(1.0 + slope * slope);
  auto distance = [&](double x) { return std::abs(p(x) - (y0 + slope * (x - x0))) / norm; };

  std::vector<double> deriv = p.derivative().coefficients;
  deriv[0] -= slope;
  const auto roots = deriv.size() <= 3
                         ? detail::quadratic_roots(deriv.size() == 3 ? deriv[2] : 0.0,
                                                   deriv.size() >= 2 ? deriv[1] : 0.0, deriv[0])
                         : detail::polynomial_roots(deriv);

  double best_x = 0.0, best_d = -1.0;
  std::vector<double> sorted = roots;
  std::sort(sorted.begin(), sorted.end());
  for (double r : sorted) {
    if (!(r > x0 && r < x1)) continue;
    const double d = distance(r);
    if (d > best_d + kRootTieTolerance) {
      best_d = d;
      best_x = r;
    }
  }
  if (best_d < kDegenerateDistance)
    fail(ErrorCode::DegenerateCurve, "curve is indistinguishable from its chord");

  ThresholdPoint t;
  t.x_at_lt = best_x;
  t.lactate_at_lt = p(best_x);
  t.speed_at_lt = best_x * speed_scale;
  t.pace_at_lt = 3600.0 / t.speed_at_lt;
  return t;
}

}  // namespace ltest
