#pragma once

#include <random>

#include "deepssm/learning.hpp"
#include "deepssm/model.hpp"
#include "deepssm/synthetic.hpp"
#include "oracles/joint_gaussian.hpp"
#include "oracles/qp.hpp"

namespace testing_support {

using deepssm::Index;
using deepssm::Matrix;
using deepssm::ModelParameters;
using deepssm::Vector;

inline Matrix<double> random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = -1,
                                    double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

/// Random symmetric positive definite matrix with eigenvalues roughly in [floor, floor + n].
inline Matrix<double> random_spd(Index n, std::mt19937_64& rng, double floor = 0.1) {
  const Matrix<double> a = random_matrix(n, n, rng);
  Matrix<double> s = a * a.transpose() + floor * Matrix<double>::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

/// Arbitrary-sign single-layer model: factor 0 of each stack is random, the rest are
/// the fixed identities.
inline ModelParameters<double> random_model(Index n_z, Index n_x, Index n_y, std::mt19937_64& rng,
                                            int layers = 1, double lo = -1, double hi = 1) {
  deepssm::ModelConfig c;
  c.n_z = n_z;
  c.n_x = n_x;
  c.n_y = n_y;
  c.layers = layers;
  auto p = deepssm::init_parameters<double>(c);
  for (auto op : {deepssm::Operator::State, deepssm::Operator::Control,
                  deepssm::Operator::Observation}) {
    for (int pos = 0; pos < layers; ++pos) {
      auto& f = p.stack(op).factors[pos];
      f = random_matrix(f.rows(), f.cols(), rng, lo, hi);
    }
  }
  // Keep the transition stable so long sequences stay well scaled.
  const Matrix<double> t1 = p.transition();
  const double radius = t1.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.95) p.state_stack.factors[0] *= 0.9 / radius;
  p.q_cov = random_spd(n_z, rng);
  p.r_cov = random_spd(n_x, rng);
  p.p0_cov = random_spd(n_z, rng);
  p.z0_mean = random_matrix(n_z, 1, rng);
  return p;
}

inline oracle::Lds to_lds(const ModelParameters<double>& p) {
  return {p.transition(), p.control_gain(), p.emission(), p.q_cov, p.r_cov, p.z0_mean, p.p0_cov};
}

struct Sequence {
  Matrix<double> obs;
  Matrix<double> controls;
};

inline Sequence random_sequence(const ModelParameters<double>& p, Index steps, std::uint64_t seed,
                                bool zero_controls = false) {
  std::mt19937_64 rng(seed);
  Sequence s;
  s.controls = zero_controls ? Matrix<double>::Zero(p.n_y(), steps)
                             : random_matrix(p.n_y(), steps, rng);
  s.obs = deepssm::sample_trajectory(p, s.controls, seed + 1).obs;
  return s;
}

/// A random nonnegative parameter set with `layers` learned factors per stack.
inline ModelParameters<double> random_nonnegative_model(Index n_z, Index n_x, Index n_y,
                                                        int layers, std::mt19937_64& rng) {
  auto p = random_model(n_z, n_x, n_y, rng, layers, 0.2, 1.0);
  p.q_cov = random_spd(n_z, rng, 0.5);
  p.r_cov = random_spd(n_x, rng, 0.5);
  return p;
}

struct QpInstance {
  ModelParameters<double> params;
  deepssm::SufficientStats<double> stats;
  deepssm::FactorSlot slot;
  Matrix<double> optimum;  // a minimizer over the slot's factor, all entries > 0
};

/// Random statistics arranged so that, with every other factor at its current
/// value, the objective restricted to `slot` is minimized at a known positive matrix.
inline QpInstance qp_instance(deepssm::FactorSlot slot, Index n_z, Index n_x, Index n_y,
                              int layers, std::mt19937_64& rng) {
  using deepssm::Operator;
  QpInstance in;
  in.slot = slot;
  in.params = random_nonnegative_model(n_z, n_x, n_y, layers, rng);
  const auto& current = in.params.stack(slot.op).factors[slot.position];
  in.optimum = random_matrix(current.rows(), current.cols(), rng, 0.2, 1.0);

  auto best = in.params;
  best.stack(slot.op).factors[slot.position] = in.optimum;
  auto& s = in.stats;
  s.steps = 1;
  s.phi = random_spd(n_z, rng);
  s.sigma = random_spd(n_z, rng);
  s.i_mat = random_spd(n_y, rng);
  s.delta = random_spd(n_x, rng);
  s.f = random_matrix(n_z, n_y, rng);
  s.c = random_matrix(n_z, n_z, rng);
  s.a = random_matrix(n_z, n_y, rng);
  s.b = random_matrix(n_x, n_z, rng);
  switch (slot.op) {
    case Operator::State:
      s.c = best.transition() * s.phi + in.params.control_gain() * s.f.transpose();
      break;
    case Operator::Control:
      s.a = best.control_gain() * s.i_mat + in.params.transition() * s.f;
      break;
    case Operator::Observation:
      s.b = best.emission() * s.sigma;
      break;
  }
  return in;
}

struct QpSolution {
  Matrix<double> constrained;
  Matrix<double> unconstrained;  // minimum-norm when the objective ignores some directions
  double constrained_value = 0;
  bool identifiable = true;  // Hessian over the factor entries has full rank
  oracle::Quadratic quadratic;
};

/// Minimizes the full M-step objective over the slot's factor, treating it as a
/// black box of the factor entries.
inline QpSolution solve_slot_qp(const ModelParameters<double>& params,
                                const deepssm::SufficientStats<double>& stats,
                                deepssm::FactorSlot slot) {
  const auto& f0 = params.stack(slot.op).factors[slot.position];
  const Index rows = f0.rows(), cols = f0.cols();
  auto trial = params;
  auto objective = [&](const Eigen::VectorXd& x) {
    trial.stack(slot.op).factors[slot.position] =
        Eigen::Map<const Matrix<double>>(x.data(), rows, cols);
    return deepssm::q_objective(trial, stats);
  };
  const auto quad = oracle::polarize(objective, rows * cols);
  const Eigen::VectorXd free = oracle::unconstrained_min(quad);
  const Eigen::VectorXd nonneg = oracle::nonnegative_min(quad);
  return {Eigen::Map<const Matrix<double>>(nonneg.data(), rows, cols),
          Eigen::Map<const Matrix<double>>(free.data(), rows, cols), oracle::evaluate(quad, nonneg),
          oracle::hessian_rank(quad) == rows * cols, quad};
}

}  // namespace testing_support
