#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deepssm/forecast.hpp"
#include "deepssm/inference.hpp"
#include "deepssm/learning.hpp"
#include "deepssm/model.hpp"
#include "deepssm/ohlcv.hpp"
#include "deepssm/scaling.hpp"

namespace deepssm {

struct PipelineOptions {
  ModelConfig model;
  int sma_period = 10;
  int target_index = kAdjClose;
  bool standardize = true;
  /// Start each window's prior from the previous window's smoothed belief.
  bool warm_start_prior = true;

  void validate() const;
  EmOptions em_options() const { return EmOptions::from_config(model); }
};

/// Control input for each day: the SMA of closes up to and including the previous
/// day, so that the input driving day k is known at the end of day k-1. Day 0 uses
/// its own close.
std::vector<double> control_inputs(const OhlcvSeries& series, int sma_period);

/// Observations and controls of one training window, possibly standardized.
struct WindowData {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  Matrix<double> obs;
  Matrix<double> controls;
  ScaleState obs_scale;
  ScaleState control_scale;
};

WindowData prepare_window(const Matrix<double>& features, std::span<const double> controls,
                          std::size_t begin, std::size_t end, bool standardize);

/// Forecast for the day after the window, reported in original units. `reference`
/// is today's actual target value used for the probability of increase.
ForecastResult forecast_after_window(const ModelParameters<double>& params,
                                     const GaussianBelief<double>& last_filtered,
                                     double next_control, const WindowData& window,
                                     const Date& date, int target_index, double reference);

struct WindowSummary {
  std::size_t target = 0;
  int iterations = 0;
  bool converged = false;
  double final_log_likelihood = 0;
  double seconds = 0;
};

struct BacktestRun {
  std::vector<ForecastResult> forecasts;
  std::vector<Vector<double>> actuals;
  /// Today's actual target value each forecast was scored against.
  std::vector<double> references;
  /// 1 when the target rose from the reference day to the forecast day.
  std::vector<int> labels_up;
  std::vector<WindowSummary> windows;
  /// Parameters fitted on the first window and on the last one.
  ModelParameters<double> first_params;
  ModelParameters<double> final_params;
  double total_seconds = 0;
};

/// Walk-forward backtest: every day from `split` on is forecast from an EM fit on
/// the preceding `window` days, warm-started from the previous fit.
BacktestRun walk_forward(const OhlcvSeries& series, const PipelineOptions& options,
                         const Date& split);

/// Fits the last `window` days of the series from `initial` parameters.
struct FinalFit {
  EmFit<double> fit;
  WindowData window;
};
FinalFit fit_final_window(const OhlcvSeries& series, const PipelineOptions& options,
                          const ModelParameters<double>& initial);

/// Filters the final window with fixed parameters and forecasts the next calendar day.
ForecastResult forecast_beyond(const OhlcvSeries& series, const PipelineOptions& options,
                               const ModelParameters<double>& params);

}  // namespace deepssm
