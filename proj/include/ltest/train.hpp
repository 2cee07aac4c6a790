// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ltest/lrnn.hpp"

namespace ltest {

struct TrainOptions {
  int max_epochs = 1000;
  double mu_init = 1e-3;
  double mu_increase = 10.0;
  double mu_decrease = 0.1;
  double mu_max = 1e10;
  double min_gradient = 1e-7;
  int restarts = 10;
  std::uint64_t seed = 1;
  // With bayesian == false the objective is fixed_beta * E_D + fixed_alpha * E_W.
  bool bayesian = true;
  double fixed_alpha = 0.0;
  double fixed_beta = 1.0;

  void check() const {
    if (!(mu_increase > 1.0 && mu_decrease > 0.0 && mu_decrease < 1.0))
      fail(ErrorCode::InvalidArgument, "LM damping factors must satisfy increase > 1 > decrease > 0");
    if (restarts < 1) fail(ErrorCode::InvalidArgument, "restarts must be >= 1");
    if (max_epochs < 0) fail(ErrorCode::InvalidArgument, "max_epochs must be >= 0");
  }
};

struct BayesState {
  double alpha = 0.0;  // weight-decay hyperparameter
  double beta = 1.0;   // noise hyperparameter
  double gamma = 0.0;  // effective number of parameters
};

enum class StopReason { MaxEpochs, MinGradient, MuMax, ZeroError };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::MinGradient: return "min_gradient";
    case StopReason::MuMax: return "mu_max";
    case StopReason::ZeroError: return "zero_error";
  }
  return "unknown";
}

/// One accepted LM step. Both objectives use the hyperparameters that were
/// in force for the step, so objective_after <= objective_before.
struct EpochRecord {
  double objective_before = 0.0;
  double objective_after = 0.0;
  double mu = 0.0;
  BayesState bayes;  // after the re-estimation that followed the step
  double gamma_estimate = 0.0;  // P - alpha * tr(H^-1) before clamping to [0, P]
};

struct TrainedModel {
  LrnnConfig config;
  LrnnWeights weights;
  BayesState bayes;
  std::vector<EpochRecord> trace;
  StopReason stop = StopReason::MaxEpochs;
  int epochs = 0;
  double objective = 0.0;  // objective after the last accepted step (initial one if none)
  double sse = 0.0;        // final E_D
  std::size_t n_residuals = 0;
};

namespace detail {

/// Spectral factorization of J^T J restricted to its range, built from
/// whichever Gram matrix is smaller. Solves (beta J^T J + c I) x = v for
/// any c > 0 without refactoring.
class GaussNewtonSpectrum {
 public:
  explicit GaussNewtonSpectrum(const Eigen::MatrixXd& jac) : n_par_(jac.cols()) {
    const Eigen::Index n = jac.rows(), p = jac.cols();
    if (p <= n) {
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
      g.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
      if (es.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "eigen-decomposition failed");
      basis_ = es.eigenvectors();
      lambda_ = es.eigenvalues().cwiseMax(0.0);
    } else {
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
      k.selfadjointView<Eigen::Lower>().rankUpdate(jac);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
      if (es.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "eigen-decomposition failed");
      const double tol = std::max(1e-300, es.eigenvalues().maxCoeff() * 1e-13 * static_cast<double>(n));
      std::vector<Eigen::Index> keep;
      for (Eigen::Index i = 0; i < n; ++i)
        if (es.eigenvalues()(i) > tol) keep.push_back(i);
      basis_.resize(p, static_cast<Eigen::Index>(keep.size()));
      lambda_.resize(static_cast<Eigen::Index>(keep.size()));
      for (std::size_t j = 0; j < keep.size(); ++j) {
        const auto i = keep[j];
        const auto jj = static_cast<Eigen::Index>(j);
        lambda_(jj) = es.eigenvalues()(i);
        basis_.col(jj) = jac.transpose() * es.eigenvectors().col(i) / std::sqrt(lambda_(jj));
      }
    }
    if (!lambda_.allFinite() || !basis_.allFinite())
      fail(ErrorCode::NumericalFailure, "non-finite Gauss-Newton spectrum");
  }

  Eigen::VectorXd solve(double beta, double c, const Eigen::VectorXd& v) const {
    const Eigen::VectorXd coef = basis_.transpose() * v;
    Eigen::VectorXd x = (v - basis_ * coef) / c;
    x.noalias() += basis_ * (coef.array() / (beta * lambda_.array() + c)).matrix();
    return x;
  }

  /// trace((beta J^T J + alpha I)^-1)
  double trace_inverse(double beta, double alpha) const {
    const double in_range = (1.0 / (beta * lambda_.array() + alpha)).sum();
    return in_range + static_cast<double>(n_par_ - lambda_.size()) / alpha;
  }

 private:
  Eigen::Index n_par_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd lambda_;
};

}  // namespace detail

/// Levenberg-Marquardt minimization of F = beta * E_D + alpha * E_W with
/// evidence-framework re-estimation of alpha and beta after every accepted
/// step, using the Gauss-Newton Hessian beta J^T J + alpha I.
inline TrainedModel train_lm_bayes(const LrnnConfig& config, std::span<const Sequence> data,
                                   const TrainOptions& options, const LrnnWeights& initial) {
  options.check();
  config.check();
  if (data.empty()) fail(ErrorCode::EmptyCohort, "training set is empty");

  Eigen::VectorXd w = initial.pack();
  const auto n_par = static_cast<double>(w.size());
  auto ew_of = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };

  ResidualJacobian rj = jacobian(config, LrnnWeights::unpack(config, w), data);
  if (!rj.residuals.allFinite() || !rj.jacobian.allFinite())
    fail(ErrorCode::NumericalFailure, "non-finite residuals at initial weights");
  const auto n_res = static_cast<double>(rj.residuals.size());
  double ed = rj.residuals.squaredNorm();
  double ew = ew_of(w);

  BayesState bayes;
  if (options.bayesian) {
    bayes.gamma = n_par;
    bayes.alpha = n_par / (2.0 * std::max(ew, 1e-300));
    bayes.beta = n_res / (2.0 * std::max(ed, 1e-300));
  } else {
    bayes.alpha = options.fixed_alpha;
    bayes.beta = options.fixed_beta;
  }

  TrainedModel out;
  out.config = config;
  out.n_residuals = rj.residuals.size();
  double mu = options.mu_init;
  bool stepped = false;

  for (int epoch = 0;; ++epoch) {
    if (ed <= 0.0) {
      out.stop = StopReason::ZeroError;
      break;
    }
    const detail::GaussNewtonSpectrum spectrum(rj.jacobian);
    if (options.bayesian && stepped) {
      const double tr = spectrum.trace_inverse(bayes.beta, bayes.alpha);
      const double gamma_estimate = n_par - bayes.alpha * tr;
      bayes.gamma = std::clamp(gamma_estimate, 0.0, n_par);
      bayes.alpha = std::max(bayes.gamma, 1e-12) / (2.0 * std::max(ew, 1e-300));
      bayes.beta = std::max(n_res - bayes.gamma, 1e-12) / (2.0 * std::max(ed, 1e-300));
      out.trace.back().bayes = bayes;
      out.trace.back().gamma_estimate = gamma_estimate;
    }
    if (epoch >= options.max_epochs) {
      out.stop = StopReason::MaxEpochs;
      break;
    }
    const Eigen::VectorXd grad = bayes.beta * (rj.jacobian.transpose() * rj.residuals) + bayes.alpha * w;
    if (2.0 * grad.norm() < options.min_gradient) {
      out.stop = StopReason::MinGradient;
      break;
    }
    const double f_before = bayes.beta * ed + bayes.alpha * ew;
    bool accepted = false;
    while (mu <= options.mu_max) {
      const Eigen::VectorXd step = -spectrum.solve(bayes.beta, bayes.alpha + mu, grad);
      const Eigen::VectorXd trial = w + step;
      double f_trial = std::numeric_limits<double>::infinity();
      double ed_trial = 0.0;
      if (trial.allFinite()) {
        const Eigen::VectorXd r = residuals(config, LrnnWeights::unpack(config, trial), data);
        if (r.allFinite()) {
          ed_trial = r.squaredNorm();
          f_trial = bayes.beta * ed_trial + bayes.alpha * ew_of(trial);
        }
      }
      if (f_trial < f_before) {
        w = trial;
        ed = ed_trial;
        ew = ew_of(w);
        out.trace.push_back({f_before, f_trial, mu, bayes, bayes.gamma});
        mu *= options.mu_decrease;
        accepted = true;
        break;
      }
      mu *= options.mu_increase;
    }
    if (!accepted) {
      out.stop = StopReason::MuMax;
      break;
    }
    stepped = true;
    ++out.epochs;
    rj = jacobian(config, LrnnWeights::unpack(config, w), data);
    if (!rj.jacobian.allFinite()) fail(ErrorCode::NumericalFailure, "non-finite Jacobian");
  }

  out.weights = LrnnWeights::unpack(config, w);
  out.bayes = bayes;
  out.sse = ed;
  // Re-estimation drives beta * E_D + alpha * E_W towards N / 2 whatever the
  // fit, so the comparable figure is the one reached by the last step.
  out.objective = out.trace.empty() ? bayes.beta * ed + bayes.alpha * ew : out.trace.back().objective_after;
  return out;
}

inline TrainedModel train_lm_bayes(const LrnnConfig& config, std::span<const Sequence> data,
                                   const TrainOptions& options) {
  return train_lm_bayes(config, data, options, init_nguyen_widrow(config, options.seed));
}

/// Seed of restart `index` derived from a base seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace ltest
