#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "deepssm/errors.hpp"

namespace deepssm {

struct ControlSeries {
  std::vector<double> values;
  int period = 1;
};

/// Simple moving average of the last `period` closes ending at each index; the
/// first period-1 entries average the closes available so far. Each window is
/// summed independently so values depend only on the closes inside the window.
inline ControlSeries compute_sma(std::span<const double> close, int period) {
  if (period < 1) throw ConfigError("sma_period", "must be >= 1");
  if (close.empty()) throw DimensionError("compute_sma: empty series");
  ControlSeries out;
  out.period = period;
  out.values.resize(close.size());
  for (std::size_t k = 0; k < close.size(); ++k) {
    const std::size_t len = std::min<std::size_t>(k + 1, static_cast<std::size_t>(period));
    double sum = 0;
    for (std::size_t j = k + 1 - len; j <= k; ++j) sum += close[j];
    out.values[k] = sum / static_cast<double>(len);
  }
  return out;
}

}  // namespace deepssm
