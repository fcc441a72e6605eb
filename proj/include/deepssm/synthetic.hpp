#pragma once

#include <cstdint>
#include <random>

#include "deepssm/model.hpp"
#include "deepssm/ohlcv.hpp"
#include "deepssm/types.hpp"

namespace deepssm {

/// Draws from N(mean, cov) for a symmetric positive semidefinite `cov`
/// (zero or rank-deficient covariances are allowed).
template <typename Scalar, typename Rng>
Vector<Scalar> sample_gaussian(const Vector<Scalar>& mean, const Matrix<Scalar>& cov, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<Scalar> white(mean.size());
  for (Index i = 0; i < white.size(); ++i) white(i) = Scalar(normal(rng));
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrize(cov));
  const Vector<Scalar> root = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return mean + es.eigenvectors() * root.asDiagonal() * white;
}

template <typename Scalar>
struct Trajectory {
  Matrix<Scalar> states;  // n_z x K
  Matrix<Scalar> obs;     // n_x x K
};

/// Samples z_k = T1 z_{k-1} + T2 u_k + v_k, x_k = D z_k + w_k for the columns of
/// `controls`, with z_0 ~ N(z0_mean, p0_cov).
template <typename Scalar>
Trajectory<Scalar> sample_trajectory(const ModelParameters<Scalar>& params,
                                     const Matrix<Scalar>& controls, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix<Scalar> t1 = params.transition();
  const Matrix<Scalar> t2 = params.control_gain();
  const Matrix<Scalar> d = params.emission();
  const Index steps = controls.cols();
  const Vector<Scalar> zero_z = Vector<Scalar>::Zero(params.n_z());
  const Vector<Scalar> zero_x = Vector<Scalar>::Zero(params.n_x());

  Trajectory<Scalar> out{Matrix<Scalar>(params.n_z(), steps), Matrix<Scalar>(params.n_x(), steps)};
  Vector<Scalar> z = sample_gaussian(params.z0_mean, params.p0_cov, rng);
  for (Index k = 0; k < steps; ++k) {
    z = t1 * z + t2 * controls.col(k) + sample_gaussian(zero_z, params.q_cov, rng);
    out.states.col(k) = z;
    out.obs.col(k) = d * z + sample_gaussian(zero_x, params.r_cov, rng);
  }
  return out;
}

/// Random nonnegative ground truth for `config`: learned factor entries drawn from
/// U[0.2, 1], the state operator rescaled to spectral radius `spectral_radius`, and
/// the noise taken from the config sigmas.
ModelParameters<double> random_ground_truth(const ModelConfig& config, std::uint64_t seed,
                                            double spectral_radius = 0.9);

/// Generates an OHLCV-shaped series from `truth` (n_x = 5, n_y = 1). Every column
/// is `level` plus the model output, and the control driving day k is the SMA of
/// the close deviations up to day k-1 (zero on day 0), as in the forecasting
/// pipeline. The control operator is rescaled so the close-to-close loop gain is
/// `loop_gain`: 1 gives a random-walk price, smaller values a stationary one.
struct SynthSeries {
  OhlcvSeries series;
  ModelParameters<double> truth;  // with the rescaled control operator
  Matrix<double> states;
  Matrix<double> controls;        // deviation-scale inputs actually applied
  double level = 0;
};
SynthSeries synthesize_ohlcv(const ModelParameters<double>& truth, std::size_t days,
                             const Date& start, int sma_period, std::uint64_t seed,
                             double level = 100.0, double loop_gain = 1.0);

}  // namespace deepssm
