// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ltest/error.hpp"

namespace ltest {

/// Single-hidden-layer layer-recurrent network: tanh hidden units fed back
/// through `delays` unit-delay taps, linear scalar output.
struct LrnnConfig {
  int n_inputs = 1;
  int hidden_units = 1;
  int delays = 1;

  int parameter_count() const {
    const int h = hidden_units;
    return h * n_inputs + h * h * delays + h + h + 1;
  }

  void check() const {
    if (n_inputs < 1 || hidden_units < 1 || delays < 1)
      fail(ErrorCode::InvalidArgument, "network needs >= 1 input, hidden unit and delay");
  }

  bool operator==(const LrnnConfig&) const = default;
};

struct LrnnWeights {
  Eigen::MatrixXd input;      // H x n
  Eigen::MatrixXd recurrent;  // H x (H * delays); column block d-1 acts on h(t - d)
  Eigen::VectorXd hidden_bias;
  Eigen::VectorXd output;     // H
  double output_bias = 0.0;

  static LrnnWeights zeros(const LrnnConfig& c) {
    const int h = c.hidden_units;
    return {Eigen::MatrixXd::Zero(h, c.n_inputs), Eigen::MatrixXd::Zero(h, h * c.delays),
            Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h), 0.0};
  }

  bool matches(const LrnnConfig& c) const {
    const int h = c.hidden_units;
    return input.rows() == h && input.cols() == c.n_inputs && recurrent.rows() == h &&
           recurrent.cols() == h * c.delays && hidden_bias.size() == h && output.size() == h;
  }

  /// Flat parameter vector: input (row-major), recurrent (row-major),
  /// hidden bias, output weights, output bias.
  Eigen::VectorXd pack() const {
    Eigen::VectorXd w(input.size() + recurrent.size() + hidden_bias.size() + output.size() + 1);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < input.rows(); ++i)
      for (Eigen::Index j = 0; j < input.cols(); ++j) w(k++) = input(i, j);
    for (Eigen::Index i = 0; i < recurrent.rows(); ++i)
      for (Eigen::Index j = 0; j < recurrent.cols(); ++j) w(k++) = recurrent(i, j);
    for (Eigen::Index i = 0; i < hidden_bias.size(); ++i) w(k++) = hidden_bias(i);
    for (Eigen::Index i = 0; i < output.size(); ++i) w(k++) = output(i);
    w(k) = output_bias;
    return w;
  }

  static LrnnWeights unpack(const LrnnConfig& c, const Eigen::VectorXd& w) {
    if (w.size() != c.parameter_count())
      fail(ErrorCode::ShapeMismatch, "parameter vector length does not match network configuration");
    LrnnWeights out = zeros(c);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < out.input.rows(); ++i)
      for (Eigen::Index j = 0; j < out.input.cols(); ++j) out.input(i, j) = w(k++);
    for (Eigen::Index i = 0; i < out.recurrent.rows(); ++i)
      for (Eigen::Index j = 0; j < out.recurrent.cols(); ++j) out.recurrent(i, j) = w(k++);
    for (Eigen::Index i = 0; i < out.hidden_bias.size(); ++i) out.hidden_bias(i) = w(k++);
    for (Eigen::Index i = 0; i < out.output.size(); ++i) out.output(i) = w(k++);
    out.output_bias = w(k);
    return out;
  }
};

/// Driving inputs (K x n) and aligned target series (K).
struct Sequence {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;
};

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
inline double symmetric_uniform(std::mt19937_64& rng, double half_width) {
  return half_width * (2.0 * unit_uniform(rng) - 1.0);
}

/// Hidden trajectory (H x K) for one sequence with zero pre-sequence state.
inline Eigen::MatrixXd hidden_trajectory(const LrnnConfig& c, const LrnnWeights& w,
                                         const Eigen::MatrixXd& inputs) {
  const int h = c.hidden_units;
  const auto steps = inputs.rows();
  Eigen::MatrixXd hid(h, steps);
  Eigen::VectorXd a(h);
  for (Eigen::Index t = 0; t < steps; ++t) {
    a.noalias() = w.input * inputs.row(t).transpose();
    a += w.hidden_bias;
    for (int d = 1; d <= c.delays && t - d >= 0; ++d)
      a.noalias() += w.recurrent.middleCols((d - 1) * h, h) * hid.col(t - d);
    hid.col(t) = a.array().tanh();
  }
  return hid;
}

inline void check_shapes(const LrnnConfig& c, const LrnnWeights& w, const Eigen::MatrixXd& inputs) {
  if (!w.matches(c)) fail(ErrorCode::ShapeMismatch, "weights do not match network configuration");
  if (inputs.cols() != c.n_inputs)
    fail(ErrorCode::ShapeMismatch, "input series has " + std::to_string(inputs.cols()) +
                                       " channels, network expects " + std::to_string(c.n_inputs));
  if (inputs.rows() < 1) fail(ErrorCode::ShapeMismatch, "input series is empty");
}

}  // namespace detail

/// Nguyen-Widrow scale for a layer of `hidden` units with `fan_in` inputs.
inline double nguyen_widrow_scale(int hidden, int fan_in) {
  return 0.7 * std::pow(static_cast<double>(hidden), 1.0 / static_cast<double>(fan_in));
}

/// Input rows are drawn uniform and rescaled to the Nguyen-Widrow magnitude
/// (fan-in = exogenous inputs); hidden biases are spread evenly over
/// [-scale, scale]. Recurrent taps and the output layer start small.
inline LrnnWeights init_nguyen_widrow(const LrnnConfig& c, std::uint64_t seed) {
  c.check();
  std::mt19937_64 rng(seed);
  LrnnWeights w = LrnnWeights::zeros(c);
  const int h = c.hidden_units;
  const double scale = nguyen_widrow_scale(h, c.n_inputs);
  for (int i = 0; i < h; ++i) {
    double norm = 0.0;
    do {
      for (int j = 0; j < c.n_inputs; ++j) w.input(i, j) = detail::symmetric_uniform(rng, 1.0);
      norm = w.input.row(i).norm();
    } while (norm < 1e-12);
    w.input.row(i) *= scale / norm;
  }
  for (int i = 0; i < h; ++i) {
    if (h == 1) {
      w.hidden_bias(i) = detail::symmetric_uniform(rng, scale);
    } else {
      const double spread = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(h - 1);
      w.hidden_bias(i) = scale * spread * (w.input(i, 0) >= 0.0 ? 1.0 : -1.0);
    }
  }
  const double rec = 0.5 / std::sqrt(static_cast<double>(h * c.delays));
  for (Eigen::Index i = 0; i < w.recurrent.size(); ++i)
    w.recurrent.data()[i] = detail::symmetric_uniform(rng, rec);
  for (int i = 0; i < h; ++i) w.output(i) = detail::symmetric_uniform(rng, 0.5);
  w.output_bias = detail::symmetric_uniform(rng, 0.5);
  return w;
}

/// Simulates the network over K steps from zero state; returns K outputs.
inline Eigen::VectorXd forward(const LrnnConfig& c, const LrnnWeights& w, const Eigen::MatrixXd& inputs) {
  detail::check_shapes(c, w, inputs);
  const Eigen::MatrixXd hid = detail::hidden_trajectory(c, w, inputs);
  Eigen::VectorXd y = hid.transpose() * w.output;
  y.array() += w.output_bias;
  return y;
}

struct ResidualJacobian {
  Eigen::VectorXd residuals;  // output - target, sequences concatenated
  Eigen::MatrixXd jacobian;   // residuals x parameters
};

/// Residuals only; cheaper than jacobian() when derivatives are not needed.
inline Eigen::VectorXd residuals(const LrnnConfig& c, const LrnnWeights& w, std::span<const Sequence> data) {
  Eigen::Index n = 0;
  for (const auto& s : data) n += s.targets.size();
  Eigen::VectorXd r(n);
  Eigen::Index row = 0;
  for (const auto& s : data) {
    if (s.inputs.rows() != s.targets.size())
      fail(ErrorCode::ShapeMismatch, "targets are not aligned with inputs");
    r.segment(row, s.targets.size()) = forward(c, w, s.inputs) - s.targets;
    row += s.targets.size();
  }
  return r;
}

/// Exact Jacobian of the residuals by backpropagation through time. Each
/// output y(t) is back-propagated through every delay tap down to t = 1.
inline ResidualJacobian jacobian(const LrnnConfig& c, const LrnnWeights& w, std::span<const Sequence> data) {
  if (data.empty()) fail(ErrorCode::ShapeMismatch, "jacobian needs at least one sequence");
  Eigen::Index n_res = 0;
  for (const auto& s : data) {
    detail::check_shapes(c, w, s.inputs);
    if (s.inputs.rows() != s.targets.size())
      fail(ErrorCode::ShapeMismatch, "targets are not aligned with inputs");
    n_res += s.targets.size();
  }
  const int h = c.hidden_units, n_in = c.n_inputs, taps = c.delays;
  const Eigen::Index hd = static_cast<Eigen::Index>(h) * taps;
  const Eigen::Index off_rec = static_cast<Eigen::Index>(h) * n_in;
  const Eigen::Index off_bias = off_rec + h * hd;
  const Eigen::Index off_out = off_bias + h;
  const Eigen::Index off_obias = off_out + h;
  const Eigen::Index n_par = off_obias + 1;

  ResidualJacobian out{Eigen::VectorXd(n_res), Eigen::MatrixXd::Zero(n_res, n_par)};
  Eigen::Index row = 0;
  Eigen::VectorXd da(h), back(hd);
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor g_in(h, n_in), g_rec(h, hd);
  Eigen::VectorXd g_bias(h);

  for (const auto& s : data) {
    const auto steps = s.inputs.rows();
    const Eigen::MatrixXd hid = detail::hidden_trajectory(c, w, s.inputs);
    // Tapped history [h(t-1); ...; h(t-delays)] per step, zero before t = 1.
    Eigen::MatrixXd tapped = Eigen::MatrixXd::Zero(hd, steps);
    for (Eigen::Index t = 0; t < steps; ++t)
      for (int d = 1; d <= taps && t - d >= 0; ++d) tapped.block((d - 1) * h, t, h, 1) = hid.col(t - d);
    const Eigen::MatrixXd deriv = 1.0 - hid.array().square();

    Eigen::MatrixXd adj(h, steps);
    for (Eigen::Index t = 0; t < steps; ++t, ++row) {
      out.residuals(row) = hid.col(t).dot(w.output) + w.output_bias - s.targets(t);
      auto jr = out.jacobian.row(row);
      g_in.setZero();
      g_rec.setZero();
      g_bias.setZero();
      adj.leftCols(t + 1).setZero();
      adj.col(t) = w.output;
      for (Eigen::Index tau = t; tau >= 0; --tau) {
        da = adj.col(tau).cwiseProduct(deriv.col(tau));
        g_in.noalias() += da * s.inputs.row(tau);
        g_bias += da;
        if (tau == 0) break;
        g_rec.noalias() += da * tapped.col(tau).transpose();
        back.noalias() = w.recurrent.transpose() * da;
        for (int d = 1; d <= taps && tau - d >= 0; ++d) adj.col(tau - d) += back.segment((d - 1) * h, h);
      }
      jr.segment(0, off_rec) = Eigen::Map<const Eigen::RowVectorXd>(g_in.data(), off_rec);
      jr.segment(off_rec, h * hd) = Eigen::Map<const Eigen::RowVectorXd>(g_rec.data(), h * hd);
      jr.segment(off_bias, h) = g_bias.transpose();
      jr.segment(off_out, h) = hid.col(t).transpose();
      jr(off_obias) = 1.0;
    }
  }
  return out;
}

/// Bound implied by tanh saturation: |y| <= sum|W_out| + |b_out|.
inline double output_bound(const LrnnWeights& w) {
  return w.output.cwiseAbs().sum() + std::abs(w.output_bias);
}

}  // namespace ltest
