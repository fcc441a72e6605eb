#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deepssm/errors.hpp"
#include "deepssm/linalg.hpp"
#include "deepssm/types.hpp"

namespace deepssm {

/// Every operator is a product of this many factors. Shallower models keep the
/// trailing factors pinned to identity.
inline constexpr int kStackDepth = 3;

struct ModelConfig {
  Index n_z = 5;
  Index n_x = 5;
  Index n_y = 1;
  int layers = 3;
  Index window = 50;
  int em_iters = 50;
  double sigma_q = 1e-5;
  double sigma_r = 1e-1;
  double sigma_p = 1e-1;
  double init_scale = 1e-1;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first offending field.
  void validate() const {
    if (n_z < 1) throw ConfigError("n_z", "must be >= 1");
    if (n_x < 1) throw ConfigError("n_x", "must be >= 1");
    if (n_y < 1) throw ConfigError("n_y", "must be >= 1");
    if (layers < 1 || layers > kStackDepth) throw ConfigError("layers", "must be 1, 2 or 3");
    if (window < 2) throw ConfigError("window", "must be >= 2");
    if (em_iters < 1) throw ConfigError("em_iters", "must be >= 1");
    if (!(sigma_q > 0)) throw ConfigError("sigma_q", "must be > 0");
    if (!(sigma_r > 0)) throw ConfigError("sigma_r", "must be > 0");
    if (!(sigma_p > 0)) throw ConfigError("sigma_p", "must be > 0");
    if (!(init_scale > 0)) throw ConfigError("init_scale", "must be > 0");
  }

  bool operator==(const ModelConfig&) const = default;
};

enum class Operator { State, Control, Observation };

inline std::string_view to_string(Operator op) {
  switch (op) {
    case Operator::State: return "state";
    case Operator::Control: return "control";
    case Operator::Observation: return "observation";
  }
  return "?";
}

/// Shape of factor `position` within the stack for `op`:
///   state:       n_z x n_z throughout
///   control:     n_z x n_z, n_z x n_z, n_z x n_y
///   observation: n_x x n_z, n_z x n_z, n_z x n_z
inline std::pair<Index, Index> factor_shape(Operator op, int position, Index n_z, Index n_x,
                                            Index n_y) {
  switch (op) {
    case Operator::State: return {n_z, n_z};
    case Operator::Control: return {n_z, position == kStackDepth - 1 ? n_y : n_z};
    case Operator::Observation: return {position == 0 ? n_x : n_z, n_z};
  }
  return {0, 0};
}

/// Left-to-right product of a chain of matrices.
template <typename Scalar>
Matrix<Scalar> compose(std::span<const Matrix<Scalar>> factors) {
  if (factors.empty()) throw DimensionError("compose: empty factor list");
  Matrix<Scalar> product = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) {
    if (product.cols() != factors[i].rows()) {
      throw DimensionError("compose: factor " + std::to_string(i) + " has " +
                           std::to_string(factors[i].rows()) + " rows, expected " +
                           std::to_string(product.cols()));
    }
    product = (product * factors[i]).eval();
  }
  return product;
}

template <typename Scalar>
struct FactorStack {
  Operator role = Operator::State;
  std::vector<Matrix<Scalar>> factors;

  Matrix<Scalar> compose() const { return deepssm::compose<Scalar>(factors); }

  /// Product of factors [begin, end). Returns an identity of `identity_dim` when
  /// the range is empty.
  Matrix<Scalar> partial(int begin, int end, Index identity_dim) const {
    if (begin >= end) return Matrix<Scalar>::Identity(identity_dim, identity_dim);
    return deepssm::compose<Scalar>(
        std::span<const Matrix<Scalar>>(factors).subspan(begin, end - begin));
  }

  bool operator==(const FactorStack&) const = default;
};

template <typename Scalar>
struct ModelParameters {
  /// Number of learned factors per stack; factors at positions >= layers stay fixed.
  int layers = kStackDepth;
  FactorStack<Scalar> state_stack{Operator::State, {}};
  FactorStack<Scalar> control_stack{Operator::Control, {}};
  FactorStack<Scalar> obs_stack{Operator::Observation, {}};
  Matrix<Scalar> q_cov;
  Matrix<Scalar> r_cov;
  Vector<Scalar> z0_mean;
  Matrix<Scalar> p0_cov;

  Index n_z() const { return q_cov.rows(); }
  Index n_x() const { return r_cov.rows(); }
  Index n_y() const { return control_stack.factors.back().cols(); }

  Matrix<Scalar> transition() const { return state_stack.compose(); }
  Matrix<Scalar> control_gain() const { return control_stack.compose(); }
  Matrix<Scalar> emission() const { return obs_stack.compose(); }

  FactorStack<Scalar>& stack(Operator op) {
    switch (op) {
      case Operator::State: return state_stack;
      case Operator::Control: return control_stack;
      default: return obs_stack;
    }
  }
  const FactorStack<Scalar>& stack(Operator op) const {
    switch (op) {
      case Operator::State: return state_stack;
      case Operator::Control: return control_stack;
      default: return obs_stack;
    }
  }

  bool operator==(const ModelParameters&) const = default;
};

/// Largest absolute entry difference over all factors of two parameter sets.
template <typename Scalar>
Scalar max_factor_change(const ModelParameters<Scalar>& a, const ModelParameters<Scalar>& b) {
  Scalar delta = 0;
  for (auto op : {Operator::State, Operator::Control, Operator::Observation}) {
    const auto& fa = a.stack(op).factors;
    const auto& fb = b.stack(op).factors;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      delta = std::max(delta, (fa[i] - fb[i]).cwiseAbs().maxCoeff());
    }
  }
  return delta;
}

/// Checks shapes, nonnegativity and covariance definiteness. Throws
/// ValidationError describing the first violation.
template <typename Scalar>
void validate_parameters(const ModelParameters<Scalar>& p, const ModelConfig& config) {
  if (p.layers != config.layers) {
    throw ValidationError("parameter depth " + std::to_string(p.layers) +
                          " disagrees with config layers " + std::to_string(config.layers));
  }
  for (auto op : {Operator::State, Operator::Control, Operator::Observation}) {
    const auto& stack = p.stack(op);
    if (static_cast<int>(stack.factors.size()) != kStackDepth) {
      throw ValidationError(std::string(to_string(op)) + " stack must hold 3 factors");
    }
    for (int pos = 0; pos < kStackDepth; ++pos) {
      const auto& f = stack.factors[pos];
      const auto [rows, cols] = factor_shape(op, pos, config.n_z, config.n_x, config.n_y);
      if (f.rows() != rows || f.cols() != cols) {
        throw ValidationError(std::string(to_string(op)) + " factor " + std::to_string(pos) +
                              " is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                              ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
      }
      if (!f.allFinite()) {
        throw ValidationError(std::string(to_string(op)) + " factor " + std::to_string(pos) +
                              " has a non-finite entry");
      }
      if ((f.array() < Scalar(0)).any()) {
        throw ValidationError(std::string(to_string(op)) + " factor " + std::to_string(pos) +
                              " has a negative entry");
      }
    }
  }
  auto check_spd = [](const Matrix<Scalar>& m, Index n, const char* name) {
    if (m.rows() != n || m.cols() != n) {
      throw ValidationError(std::string(name) + " must be " + std::to_string(n) + "x" +
                            std::to_string(n));
    }
    if (!m.allFinite() || !m.isApprox(m.transpose())) {
      throw ValidationError(std::string(name) + " must be symmetric");
    }
    Eigen::LLT<Matrix<Scalar>> llt(m);
    if (llt.info() != Eigen::Success) {
      throw ValidationError(std::string(name) + " must be positive definite");
    }
  };
  check_spd(p.q_cov, config.n_z, "q_cov");
  check_spd(p.r_cov, config.n_x, "r_cov");
  check_spd(p.p0_cov, config.n_z, "p0_cov");
  if (p.z0_mean.size() != config.n_z || !p.z0_mean.allFinite()) {
    throw ValidationError("z0_mean must be a finite vector of length " +
                          std::to_string(config.n_z));
  }
}

/// Draws every learned factor entry i.i.d. from U[0, init_scale]; fixed factors are
/// (rectangular) identities. Noise covariances are scaled identities and the prior
/// mean is zero. Deterministic in `config.seed`.
template <typename Scalar = double>
ModelParameters<Scalar> init_parameters(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, config.init_scale);

  ModelParameters<Scalar> p;
  p.layers = config.layers;
  for (auto op : {Operator::State, Operator::Control, Operator::Observation}) {
    auto& stack = p.stack(op);
    stack.role = op;
    stack.factors.clear();
    for (int pos = 0; pos < kStackDepth; ++pos) {
      const auto [rows, cols] = factor_shape(op, pos, config.n_z, config.n_x, config.n_y);
      Matrix<Scalar> f(rows, cols);
      if (pos < config.layers) {
        for (Index j = 0; j < cols; ++j)
          for (Index i = 0; i < rows; ++i) f(i, j) = Scalar(uniform(rng));
      } else {
        f.setIdentity();
      }
      stack.factors.push_back(std::move(f));
    }
  }
  const Scalar q = Scalar(config.sigma_q * config.sigma_q);
  const Scalar r = Scalar(config.sigma_r * config.sigma_r);
  const Scalar p0 = Scalar(config.sigma_p * config.sigma_p);
  p.q_cov = q * Matrix<Scalar>::Identity(config.n_z, config.n_z);
  p.r_cov = r * Matrix<Scalar>::Identity(config.n_x, config.n_x);
  p.p0_cov = p0 * Matrix<Scalar>::Identity(config.n_z, config.n_z);
  p.z0_mean = Vector<Scalar>::Zero(config.n_z);
  return p;
}

}  // namespace deepssm
