#pragma once

#include <cmath>
#include <numbers>
#include <type_traits>
#include <vector>

#include "deepssm/errors.hpp"
#include "deepssm/linalg.hpp"
#include "deepssm/model.hpp"
#include "deepssm/types.hpp"

namespace deepssm {

template <typename Scalar>
struct GaussianBelief {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;

  bool operator==(const GaussianBelief&) const = default;
};

/// Per-step output of the forward pass. All sequences have one entry per time step.
template <typename Scalar>
struct FilterResult {
  std::vector<GaussianBelief<Scalar>> predicted;  // z_k^-, P_k^-
  std::vector<GaussianBelief<Scalar>> filtered;   // z_k,   P_k
  std::vector<Vector<Scalar>> innovations;        // y_k
  std::vector<Matrix<Scalar>> innovation_covs;    // S_k
  std::vector<Matrix<Scalar>> gains;              // K_k
  Scalar log_likelihood = 0;

  Index size() const { return static_cast<Index>(filtered.size()); }
};

template <typename Scalar>
struct SmootherResult {
  std::vector<GaussianBelief<Scalar>> smoothed;
  /// gains[k] links step k to step k+1; length K-1.
  std::vector<Matrix<Scalar>> gains;
  /// Smoothed belief of the initial state z_0 and the gain linking it to step 1.
  GaussianBelief<Scalar> initial;
  Matrix<Scalar> initial_gain;

  Index size() const { return static_cast<Index>(smoothed.size()); }
};

namespace detail {

inline void check_sequences(Index n_x, Index n_y, Index obs_rows, Index obs_cols,
                            Index ctl_rows, Index ctl_cols) {
  if (obs_cols < 1) throw DimensionError("kalman_filter: need at least one observation");
  if (obs_cols != ctl_cols) {
    throw DimensionError("kalman_filter: " + std::to_string(obs_cols) + " observations but " +
                         std::to_string(ctl_cols) + " controls");
  }
  if (obs_rows != n_x) throw DimensionError("kalman_filter: observation dimension mismatch");
  if (ctl_rows != n_y) throw DimensionError("kalman_filter: control dimension mismatch");
}

}  // namespace detail

/// Forward Kalman recursion over the columns of `obs` (n_x x K) with inputs
/// `controls` (n_y x K). Step 1 predicts from the prior (z0_mean, p0_cov).
/// The log-likelihood is the innovation decomposition sum_k log N(y_k; 0, S_k).
template <typename Scalar>
FilterResult<Scalar> kalman_filter(const ModelParameters<Scalar>& params,
                                   const std::type_identity_t<Matrix<Scalar>>& obs,
                                   const std::type_identity_t<Matrix<Scalar>>& controls) {
  detail::check_sequences(params.n_x(), params.n_y(), obs.rows(), obs.cols(), controls.rows(),
                          controls.cols());
  const Matrix<Scalar> transition = params.transition();
  const Matrix<Scalar> control_gain = params.control_gain();
  const Matrix<Scalar> emission = params.emission();
  const Index steps = obs.cols();
  const Index n_x = obs.rows();
  const Scalar log_two_pi = Scalar(std::log(2 * std::numbers::pi));

  FilterResult<Scalar> out;
  out.predicted.reserve(steps);
  out.filtered.reserve(steps);
  out.innovations.reserve(steps);
  out.innovation_covs.reserve(steps);
  out.gains.reserve(steps);

  Vector<Scalar> mean = params.z0_mean;
  Matrix<Scalar> cov = params.p0_cov;
  for (Index k = 0; k < steps; ++k) {
    Vector<Scalar> mean_pred = transition * mean + control_gain * controls.col(k);
    Matrix<Scalar> cov_pred = symmetrize(transition * cov * transition.transpose() + params.q_cov);

    Vector<Scalar> innovation = obs.col(k) - emission * mean_pred;
    Matrix<Scalar> innovation_cov =
        symmetrize(emission * cov_pred * emission.transpose() + params.r_cov);
    auto llt = spd_factor(innovation_cov);
    if (!llt) throw InferenceError(k + 1, "innovation covariance is not positive definite");

    // K = P^- D^T S^{-1}, formed as (S^{-1} D P^-)^T since S and P^- are symmetric.
    Matrix<Scalar> gain = llt->solve(emission * cov_pred).transpose();
    mean = mean_pred + gain * innovation;
    cov = symmetrize(cov_pred - gain * innovation_cov * gain.transpose());

    const Matrix<Scalar> chol = llt->matrixL();
    const Scalar log_det = Scalar(2) * chol.diagonal().array().log().sum();
    const Scalar mahalanobis = innovation.dot(llt->solve(innovation));
    out.log_likelihood += Scalar(-0.5) * (Scalar(n_x) * log_two_pi + log_det + mahalanobis);
    using std::isfinite;
    if (!isfinite(out.log_likelihood) || !mean.allFinite()) {
      throw InferenceError(k + 1, "non-finite filtered state or log-likelihood");
    }

    out.predicted.push_back({std::move(mean_pred), std::move(cov_pred)});
    out.filtered.push_back({mean, cov});
    out.innovations.push_back(std::move(innovation));
    out.innovation_covs.push_back(std::move(innovation_cov));
    out.gains.push_back(std::move(gain));
  }
  return out;
}

/// Rauch-Tung-Striebel backward pass over a filter run made with the same
/// parameters. Also smooths the initial state so that lag-one statistics are
/// available at step 1.
template <typename Scalar>
SmootherResult<Scalar> rts_smooth(const ModelParameters<Scalar>& params,
                                  const FilterResult<Scalar>& filt) {
  const Index steps = filt.size();
  if (steps < 1) throw DimensionError("rts_smooth: empty filter result");
  const Matrix<Scalar> transition = params.transition();

  SmootherResult<Scalar> out;
  out.smoothed.resize(steps);
  out.gains.resize(steps - 1);
  out.smoothed[steps - 1] = filt.filtered[steps - 1];

  // G = P T^T (P_next^-)^{-1}, formed as ((P_next^-)^{-1} T P)^T.
  auto backward = [&](const GaussianBelief<Scalar>& current, Index next,
                      GaussianBelief<Scalar>& result) -> Matrix<Scalar> {
    const auto& pred = filt.predicted[next];
    const auto& smoothed_next = out.smoothed[next];
    auto llt = spd_factor(pred.cov);
    if (!llt) throw InferenceError(next + 1, "predicted covariance is not positive definite");
    Matrix<Scalar> gain = llt->solve(transition * current.cov).transpose();
    result.mean = current.mean + gain * (smoothed_next.mean - pred.mean);
    result.cov = symmetrize(current.cov + gain * (smoothed_next.cov - pred.cov) * gain.transpose());
    return gain;
  };

  for (Index k = steps - 2; k >= 0; --k) {
    out.gains[k] = backward(filt.filtered[k], k + 1, out.smoothed[k]);
  }
  const GaussianBelief<Scalar> prior{params.z0_mean, params.p0_cov};
  out.initial_gain = backward(prior, 0, out.initial);
  return out;
}

template <typename Scalar>
struct Prediction {
  GaussianBelief<Scalar> state;  // z^-, P^-
  Vector<Scalar> mean;           // D z^-
  Matrix<Scalar> cov;            // D P^- D^T + R
};

/// One-step-ahead predictive distribution of the next observation given the
/// current filtered belief and the next control input.
template <typename Scalar>
Prediction<Scalar> forecast_next(const ModelParameters<Scalar>& params,
                                 const GaussianBelief<Scalar>& belief,
                                 const std::type_identity_t<Vector<Scalar>>& control) {
  if (belief.mean.size() != params.n_z() || belief.cov.rows() != params.n_z()) {
    throw DimensionError("forecast_next: belief dimension mismatch");
  }
  if (control.size() != params.n_y()) throw DimensionError("forecast_next: control size mismatch");
  const Matrix<Scalar> transition = params.transition();
  const Matrix<Scalar> emission = params.emission();
  Prediction<Scalar> out;
  out.state.mean = transition * belief.mean + params.control_gain() * control;
  out.state.cov = symmetrize(transition * belief.cov * transition.transpose() + params.q_cov);
  out.mean = emission * out.state.mean;
  out.cov = symmetrize(emission * out.state.cov * emission.transpose() + params.r_cov);
  return out;
}

/// Root mean square of the one-step innovations, averaged over steps and features.
template <typename Scalar>
Scalar one_step_rmse(const FilterResult<Scalar>& filt) {
  Scalar total = 0;
  Index count = 0;
  for (const auto& y : filt.innovations) {
    total += y.squaredNorm();
    count += y.size();
  }
  return count > 0 ? std::sqrt(total / Scalar(count)) : Scalar(0);
}

}  // namespace deepssm
