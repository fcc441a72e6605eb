#pragma once

#include <array>
#include <cmath>
#include <type_traits>
#include <vector>

#include "deepssm/errors.hpp"
#include "deepssm/inference.hpp"
#include "deepssm/linalg.hpp"
#include "deepssm/model.hpp"
#include "deepssm/types.hpp"

namespace deepssm {

/// Expected sufficient statistics of one E-step, each averaged over the K steps:
///   sigma = E[z_k z_k^T]       phi = E[z_{k-1} z_{k-1}^T]   c = E[z_k z_{k-1}^T]
///   b     = x_k E[z_k]^T       a   = E[z_k] u_k^T           f = E[z_{k-1}] u_k^T
///   i_mat = u_k u_k^T          delta = x_k x_k^T
template <typename Scalar>
struct SufficientStats {
  Matrix<Scalar> sigma, phi, b, c, a, f, i_mat, delta;
  Index steps = 0;
};

template <typename Scalar>
SufficientStats<Scalar> compute_sufficient_stats(
    const SmootherResult<Scalar>& smo, const std::type_identity_t<Matrix<Scalar>>& obs,
    const std::type_identity_t<Matrix<Scalar>>& controls) {
  const Index steps = smo.size();
  if (steps < 1) throw DimensionError("compute_sufficient_stats: empty smoother result");
  if (obs.cols() != steps || controls.cols() != steps) {
    throw DimensionError("compute_sufficient_stats: sequence lengths differ");
  }
  const Index n_z = smo.smoothed.front().mean.size();
  const Index n_x = obs.rows();
  const Index n_y = controls.rows();

  SufficientStats<Scalar> s;
  s.steps = steps;
  s.sigma = Matrix<Scalar>::Zero(n_z, n_z);
  s.phi = Matrix<Scalar>::Zero(n_z, n_z);
  s.b = Matrix<Scalar>::Zero(n_x, n_z);
  s.c = Matrix<Scalar>::Zero(n_z, n_z);
  s.a = Matrix<Scalar>::Zero(n_z, n_y);
  s.f = Matrix<Scalar>::Zero(n_z, n_y);
  s.i_mat = Matrix<Scalar>::Zero(n_y, n_y);
  s.delta = Matrix<Scalar>::Zero(n_x, n_x);

  for (Index k = 0; k < steps; ++k) {
    const auto& cur = smo.smoothed[k];
    const auto& prev = k == 0 ? smo.initial : smo.smoothed[k - 1];
    const auto& prev_gain = k == 0 ? smo.initial_gain : smo.gains[k - 1];
    const auto x = obs.col(k);
    const auto u = controls.col(k);

    s.sigma.noalias() += cur.cov + cur.mean * cur.mean.transpose();
    s.phi.noalias() += prev.cov + prev.mean * prev.mean.transpose();
    s.b.noalias() += x * cur.mean.transpose();
    s.c.noalias() += cur.cov * prev_gain.transpose() + cur.mean * prev.mean.transpose();
    s.a.noalias() += cur.mean * u.transpose();
    s.f.noalias() += prev.mean * u.transpose();
    s.i_mat.noalias() += u * u.transpose();
    s.delta.noalias() += x * x.transpose();
  }
  const Scalar inv = Scalar(1) / Scalar(steps);
  for (auto* m : {&s.sigma, &s.phi, &s.b, &s.c, &s.a, &s.f, &s.i_mat, &s.delta}) *m *= inv;
  s.sigma = symmetrize(s.sigma);
  s.phi = symmetrize(s.phi);
  s.i_mat = symmetrize(s.i_mat);
  s.delta = symmetrize(s.delta);
  return s;
}

/// Position of one factor within the parameter set.
struct FactorSlot {
  Operator op;
  int position;

  bool operator==(const FactorSlot&) const = default;
};

/// Gauss-Seidel sweep order of the M-step.
inline constexpr std::array<FactorSlot, 9> kSweepOrder = {{
    {Operator::State, 0},
    {Operator::State, 1},
    {Operator::State, 2},
    {Operator::Control, 0},
    {Operator::Control, 1},
    {Operator::Control, 2},
    {Operator::Observation, 0},
    {Operator::Observation, 1},
    {Operator::Observation, 2},
}};

/// The part of the M-step objective that involves one operator M, written as
///   tr(weight * (M curvature M^T - M target^T - target M^T)) + const,
/// with the other two operators held at their current composites.
template <typename Scalar>
struct OperatorQuadratic {
  Matrix<Scalar> weight;
  Matrix<Scalar> curvature;
  Matrix<Scalar> target;
};

template <typename Scalar>
Matrix<Scalar> spd_inverse(const Matrix<Scalar>& m, const char* name) {
  auto llt = spd_factor(m);
  if (!llt) throw ValidationError(std::string(name) + " is not positive definite");
  return llt->solve(Matrix<Scalar>::Identity(m.rows(), m.cols()));
}

template <typename Scalar>
OperatorQuadratic<Scalar> operator_quadratic(Operator op, const ModelParameters<Scalar>& params,
                                             const SufficientStats<Scalar>& stats) {
  switch (op) {
    case Operator::State:
      return {spd_inverse(params.q_cov, "q_cov"), stats.phi,
              stats.c - params.control_gain() * stats.f.transpose()};
    case Operator::Control:
      return {spd_inverse(params.q_cov, "q_cov"), stats.i_mat,
              stats.a - params.transition() * stats.f};
    case Operator::Observation:
      return {spd_inverse(params.r_cov, "r_cov"), stats.sigma, stats.b};
  }
  return {};
}

/// Value of the M-step objective for the given factors (lower is better). It
/// equals, up to terms constant in the factors, the negated expected complete-data
/// log-likelihood with Q, R and the prior held fixed.
template <typename Scalar>
Scalar q_objective(const ModelParameters<Scalar>& params, const SufficientStats<Scalar>& stats) {
  const Matrix<Scalar> t1 = params.transition();
  const Matrix<Scalar> t2 = params.control_gain();
  const Matrix<Scalar> d = params.emission();
  const Matrix<Scalar> state_resid = stats.sigma - stats.c * t1.transpose() -
                                     t1 * stats.c.transpose() + t1 * stats.phi * t1.transpose() -
                                     stats.a * t2.transpose() - t2 * stats.a.transpose() +
                                     t1 * stats.f * t2.transpose() +
                                     t2 * stats.f.transpose() * t1.transpose() +
                                     t2 * stats.i_mat * t2.transpose();
  const Matrix<Scalar> obs_resid = stats.delta - stats.b * d.transpose() - d * stats.b.transpose() +
                                   d * stats.sigma * d.transpose();
  const Scalar state_term = (spd_inverse(params.q_cov, "q_cov") * state_resid).trace();
  const Scalar obs_term = (spd_inverse(params.r_cov, "r_cov") * obs_resid).trace();
  return Scalar(0.5) * Scalar(stats.steps) * (state_term + obs_term);
}

struct UpdateOptions {
  bool project_nonnegative = true;
  double pinv_cutoff = 1e-10;
};

template <typename Scalar>
struct FactorUpdate {
  Matrix<Scalar> value;
  bool clamped = false;
  bool degenerate = false;
};

/// Minimizes the M-step objective over one factor with every other factor frozen,
/// then projects onto the nonnegative orthant. Writing the operator as
/// M = left * X * right, the stationarity condition is
///   (left^T W left) X (right H right^T) = left^T W G right^T,
/// solved with pseudo-inverses on both sides.
template <typename Scalar>
FactorUpdate<Scalar> update_factor(FactorSlot slot, const ModelParameters<Scalar>& params,
                                   const SufficientStats<Scalar>& stats,
                                   const UpdateOptions& options = {}) {
  const auto& stack = params.stack(slot.op);
  const auto& current = stack.factors.at(slot.position);
  const Index out_rows = stack.factors.front().rows();
  const Index out_cols = stack.factors.back().cols();
  const Matrix<Scalar> left = stack.partial(0, slot.position, out_rows);
  const Matrix<Scalar> right = stack.partial(slot.position + 1, kStackDepth, out_cols);
  const auto quad = operator_quadratic(slot.op, params, stats);

  const Matrix<Scalar> left_gram = left.transpose() * quad.weight * left;
  const Matrix<Scalar> right_gram = right * quad.curvature * right.transpose();
  const Matrix<Scalar> cross = left.transpose() * quad.weight * quad.target * right.transpose();

  FactorUpdate<Scalar> out;
  const bool zero_gram = left_gram.cwiseAbs().maxCoeff() == Scalar(0) ||
                         right_gram.cwiseAbs().maxCoeff() == Scalar(0);
  out.value = pseudo_inverse(left_gram, options.pinv_cutoff) * cross *
              pseudo_inverse(right_gram, options.pinv_cutoff);
  if (zero_gram || !out.value.allFinite()) {
    out.value = Matrix<Scalar>::Zero(current.rows(), current.cols());
    out.degenerate = true;
    return out;
  }
  if (options.project_nonnegative) out.clamped = relu_inplace(out.value);
  return out;
}

template <typename Scalar>
struct MStepResult {
  ModelParameters<Scalar> params;
  int solves = 0;
  bool clamped = false;
  std::vector<FactorSlot> degenerate;
};

/// One alternating sweep over the learned factors in kSweepOrder; each solve sees
/// the factors already updated in this sweep.
template <typename Scalar>
MStepResult<Scalar> m_step(const ModelParameters<Scalar>& params,
                           const SufficientStats<Scalar>& stats,
                           const UpdateOptions& options = {}) {
  MStepResult<Scalar> out{params, 0, false, {}};
  for (const auto slot : kSweepOrder) {
    if (slot.position >= params.layers) continue;
    auto update = update_factor(slot, out.params, stats, options);
    ++out.solves;
    out.clamped = out.clamped || update.clamped;
    if (update.degenerate) out.degenerate.push_back(slot);
    out.params.stack(slot.op).factors[slot.position] = std::move(update.value);
  }
  return out;
}

struct EmOptions {
  int max_iters = 50;
  /// Stop once no factor entry moves by more than this in one iteration.
  double param_tol = 1e-8;
  /// Stop once the log-likelihood moves by less than this between iterations.
  /// Zero disables the check.
  double loglik_tol = 1e-9;
  UpdateOptions update;

  static EmOptions from_config(const ModelConfig& config) {
    EmOptions o;
    o.max_iters = config.em_iters;
    return o;
  }
};

enum class StopReason { MaxIterations, ParameterChange, LikelihoodChange };

struct EmReport {
  /// Log-likelihood at the E-step of each iteration (before its M-step).
  std::vector<double> log_likelihood;
  /// Whether the M-step of each iteration clamped a negative entry.
  std::vector<bool> clamped;
  std::vector<double> param_change;
  int iterations_run = 0;
  bool converged = false;
  StopReason reason = StopReason::MaxIterations;
  double final_param_change = 0;
  /// Log-likelihood of the returned parameters.
  double final_log_likelihood = 0;
  int degenerate_updates = 0;
};

template <typename Scalar>
struct EmFit {
  ModelParameters<Scalar> params;
  FilterResult<Scalar> filter;
  SmootherResult<Scalar> smoother;
  EmReport report;
};

/// Alternates Kalman/RTS inference with one M-step sweep. The returned filter and
/// smoother outputs are computed with the returned parameters.
template <typename Scalar>
EmFit<Scalar> em_fit(const ModelParameters<Scalar>& initial,
                     const std::type_identity_t<Matrix<Scalar>>& obs,
                     const std::type_identity_t<Matrix<Scalar>>& controls,
                     const EmOptions& options) {
  if (options.max_iters < 1) throw ConfigError("em_iters", "must be >= 1");
  EmFit<Scalar> fit{initial, {}, {}, {}};
  auto& report = fit.report;

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    FilterResult<Scalar> filt;
    SmootherResult<Scalar> smo;
    try {
      filt = kalman_filter(fit.params, obs, controls);
      smo = rts_smooth(fit.params, filt);
    } catch (const InferenceError& e) {
      throw e.at_iteration(iter);
    }
    const auto stats = compute_sufficient_stats(smo, obs, controls);
    auto step = m_step(fit.params, stats, options.update);
    const double change = static_cast<double>(max_factor_change(fit.params, step.params));
    fit.params = std::move(step.params);

    report.log_likelihood.push_back(static_cast<double>(filt.log_likelihood));
    report.clamped.push_back(step.clamped);
    report.param_change.push_back(change);
    report.degenerate_updates += static_cast<int>(step.degenerate.size());
    report.iterations_run = iter;
    report.final_param_change = change;

    if (change < options.param_tol) {
      report.converged = true;
      report.reason = StopReason::ParameterChange;
      break;
    }
    const auto n = report.log_likelihood.size();
    if (options.loglik_tol > 0 && n >= 2 &&
        std::abs(report.log_likelihood[n - 1] - report.log_likelihood[n - 2]) <
            options.loglik_tol) {
      report.converged = true;
      report.reason = StopReason::LikelihoodChange;
      break;
    }
  }

  try {
    fit.filter = kalman_filter(fit.params, obs, controls);
    fit.smoother = rts_smooth(fit.params, fit.filter);
  } catch (const InferenceError& e) {
    throw e.at_iteration(report.iterations_run + 1);
  }
  report.final_log_likelihood = static_cast<double>(fit.filter.log_likelihood);
  return fit;
}

}  // namespace deepssm
