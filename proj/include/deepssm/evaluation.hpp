#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>

namespace deepssm {

struct MetricsReport {
  double rmse = 0;
  double mape_pct = 0;
  double smape_pct = 0;
  double pearson_r = 0;
  /// NaN until filled in from direction labels and probabilities.
  double log_loss = std::numeric_limits<double>::quiet_NaN();
  /// Welch two-sample t statistic between predictions and actuals.
  double t_stat = 0;
  std::size_t n = 0;
  /// Some MAPE terms were skipped because the actual was zero.
  bool mape_skipped_zero = false;

  /// Flat `key=value` record; doubles printed with round-trip precision.
  std::string to_record() const;
};

/// Throws DimensionError for mismatched or too-short inputs and DataError when
/// either series has zero variance (Pearson r undefined).
MetricsReport metrics(std::span<const double> pred, std::span<const double> actual);

enum class LogLossMode {
  /// Penalizes only days with a realized increase: mean of -L log p.
  OneSided,
  /// Adds the -(1-L) log(1-p) term.
  Symmetric,
};

/// Probabilities are clamped to [1e-12, 1 - 1e-12]. Throws ValidationError for a
/// label outside {0, 1}.
double log_loss(std::span<const int> labels, std::span<const double> probs,
                LogLossMode mode = LogLossMode::OneSided);

struct VolatilityReport {
  double cvi = 0;
  std::size_t window_days = 0;
  /// Deviations are measured from the last close of the window.
  std::string anchor = "final_close";
};

/// Annualized root-mean-square deviation of the trailing `window_days` closes
/// from the final close: sqrt(365) * sqrt(mean((c_final - c_n)^2)).
VolatilityReport cvi(std::span<const double> close, std::size_t window_days = 30);

/// Welch's unequal-variance t statistic (mean(a) - mean(b)) / sqrt(va/na + vb/nb).
double welch_t(std::span<const double> a, std::span<const double> b);

}  // namespace deepssm
