#pragma once

#include <vector>

#include "deepssm/types.hpp"

namespace deepssm {

/// Per-feature affine map x -> (x - mean) / scale.
struct ScaleState {
  Vector<double> mean;
  Vector<double> scale;
  /// Features whose spread was zero; their scale was clamped to 1.
  std::vector<bool> clamped;

  bool any_clamped() const;
  static ScaleState identity(Index n);
};

struct Standardized {
  Matrix<double> values;
  ScaleState state;
};

/// Standardizes each row of `window` (features x time) to zero mean and unit
/// population variance over the window.
Standardized standardize_window(const Matrix<double>& window);

Matrix<double> apply_scale(const ScaleState& state, const Matrix<double>& values);
Vector<double> destandardize(const ScaleState& state, const Vector<double>& mean);
/// Conjugates a covariance by diag(scale).
Matrix<double> destandardize_cov(const ScaleState& state, const Matrix<double>& cov);

}  // namespace deepssm
