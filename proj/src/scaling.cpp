#include "deepssm/scaling.hpp"

#include <algorithm>
#include <cmath>

#include "deepssm/errors.hpp"

namespace deepssm {

bool ScaleState::any_clamped() const {
  return std::any_of(clamped.begin(), clamped.end(), [](bool b) { return b; });
}

ScaleState ScaleState::identity(Index n) {
  return {Vector<double>::Zero(n), Vector<double>::Ones(n), std::vector<bool>(n, false)};
}

Standardized standardize_window(const Matrix<double>& window) {
  if (window.cols() < 2) throw DimensionError("standardize_window: need at least 2 time steps");
  const Index n = window.rows();
  Standardized out;
  out.state.mean = window.rowwise().mean();
  out.state.scale.resize(n);
  out.state.clamped.assign(n, false);
  out.values.resize(n, window.cols());
  for (Index i = 0; i < n; ++i) {
    const auto centered = (window.row(i).array() - out.state.mean(i)).eval();
    const double sd = std::sqrt(centered.square().mean());
    if (!(sd > 1e-12 * std::max(1.0, std::abs(out.state.mean(i))))) {
      out.state.scale(i) = 1.0;
      out.state.clamped[i] = true;
      out.values.row(i).setZero();
    } else {
      out.state.scale(i) = sd;
      out.values.row(i) = centered / sd;
    }
  }
  return out;
}

Matrix<double> apply_scale(const ScaleState& state, const Matrix<double>& values) {
  if (values.rows() != state.mean.size()) throw DimensionError("apply_scale: size mismatch");
  return ((values.colwise() - state.mean).array().colwise() / state.scale.array()).matrix();
}

Vector<double> destandardize(const ScaleState& state, const Vector<double>& mean) {
  if (mean.size() != state.mean.size()) throw DimensionError("destandardize: size mismatch");
  return (mean.array() * state.scale.array() + state.mean.array()).matrix();
}

Matrix<double> destandardize_cov(const ScaleState& state, const Matrix<double>& cov) {
  if (cov.rows() != state.scale.size() || cov.cols() != state.scale.size()) {
    throw DimensionError("destandardize_cov: size mismatch");
  }
  return state.scale.asDiagonal() * cov * state.scale.asDiagonal();
}

}  // namespace deepssm
