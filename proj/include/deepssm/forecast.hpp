#pragma once

#include <cmath>

#include "deepssm/ohlcv.hpp"
#include "deepssm/types.hpp"

namespace deepssm {

/// Predictive distribution of the next day's feature vector, in original units.
struct ForecastResult {
  Date date;
  Vector<double> mean;
  Matrix<double> cov;
  double p_up = 0.5;
  int target_index = kAdjClose;
  /// Set when the target variance was zero and p_up is a hard 0/1.
  bool degenerate = false;

  double target_mean() const { return mean(target_index); }
  double target_variance() const { return cov(target_index, target_index); }
};

struct IncreaseProbability {
  double p = 0.5;
  bool degenerate = false;
};

/// Probability that a Gaussian N(mean, variance) exceeds `reference`.
inline IncreaseProbability prob_increase(double mean, double variance, double reference) {
  if (!(variance > 0)) {
    return {mean > reference ? 1.0 : (mean < reference ? 0.0 : 0.5), true};
  }
  const double z = (reference - mean) / std::sqrt(2.0 * variance);
  return {0.5 * std::erfc(z), false};
}

inline IncreaseProbability prob_increase(const ForecastResult& f, double reference) {
  return prob_increase(f.target_mean(), f.target_variance(), reference);
}

}  // namespace deepssm
