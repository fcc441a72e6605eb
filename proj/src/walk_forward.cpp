#include "deepssm/walk_forward.hpp"

#include <chrono>
#include <optional>

#include "deepssm/errors.hpp"
#include "deepssm/indicators.hpp"
#include "deepssm/log.hpp"

namespace deepssm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void PipelineOptions::validate() const {
  model.validate();
  if (model.n_x != kFeatureCount) throw ConfigError("n_x", "must be 5 for OHLCV data");
  if (model.n_y != 1) throw ConfigError("n_y", "must be 1 (SMA control)");
  if (sma_period < 1) throw ConfigError("sma_period", "must be >= 1");
  if (target_index < 0 || target_index >= kFeatureCount) {
    throw ConfigError("target_index", "must be in [0, 4]");
  }
}

std::vector<double> control_inputs(const OhlcvSeries& series, int sma_period) {
  const auto sma = compute_sma(series.close, sma_period);
  std::vector<double> u(series.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = sma.values[k == 0 ? 0 : k - 1];
  return u;
}

WindowData prepare_window(const Matrix<double>& features, std::span<const double> controls,
                          std::size_t begin, std::size_t end, bool standardize) {
  if (end <= begin || end > static_cast<std::size_t>(features.cols()) || end > controls.size()) {
    throw DimensionError("prepare_window: window out of range");
  }
  WindowData w;
  w.begin = begin;
  w.end = end;
  const auto len = static_cast<Index>(end - begin);
  const Matrix<double> raw_obs = features.middleCols(static_cast<Index>(begin), len);
  Matrix<double> raw_ctl(1, len);
  for (Index k = 0; k < len; ++k) raw_ctl(0, k) = controls[begin + static_cast<std::size_t>(k)];
  if (standardize) {
    auto obs = standardize_window(raw_obs);
    auto ctl = standardize_window(raw_ctl);
    w.obs = std::move(obs.values);
    w.obs_scale = std::move(obs.state);
    w.controls = std::move(ctl.values);
    w.control_scale = std::move(ctl.state);
  } else {
    w.obs = raw_obs;
    w.controls = raw_ctl;
    w.obs_scale = ScaleState::identity(raw_obs.rows());
    w.control_scale = ScaleState::identity(1);
  }
  return w;
}

ForecastResult forecast_after_window(const ModelParameters<double>& params,
                                     const GaussianBelief<double>& last_filtered,
                                     double next_control, const WindowData& window,
                                     const Date& date, int target_index, double reference) {
  Matrix<double> u(1, 1);
  u(0, 0) = next_control;
  const Vector<double> scaled_u = apply_scale(window.control_scale, u).col(0);
  const auto pred = forecast_next(params, last_filtered, scaled_u);

  ForecastResult f;
  f.date = date;
  f.target_index = target_index;
  f.mean = destandardize(window.obs_scale, pred.mean);
  f.cov = symmetrize(destandardize_cov(window.obs_scale, pred.cov));
  const auto p = prob_increase(f, reference);
  f.p_up = p.p;
  f.degenerate = p.degenerate;
  return f;
}

BacktestRun walk_forward(const OhlcvSeries& series, const PipelineOptions& options,
                         const Date& split) {
  options.validate();
  const auto tau = static_cast<std::size_t>(options.model.window);
  const std::size_t n = series.size();
  if (n < tau + 1) throw ConfigError("window", "series is shorter than window + 1");
  const std::size_t first_target = series.lower_bound(split);
  if (first_target >= n) throw ConfigError("split_date", "no data on or after the split date");
  if (first_target < tau) {
    throw ConfigError("split_date", "needs at least " + std::to_string(tau) +
                                        " days of history before the split");
  }

  const Matrix<double> features = series.features();
  const auto controls = control_inputs(series, options.sma_period);
  const auto em = options.em_options();
  const auto run_start = Clock::now();

  BacktestRun run;
  ModelParameters<double> params = init_parameters<double>(options.model);
  std::optional<GaussianBelief<double>> carried_prior;

  for (std::size_t target = first_target; target < n; ++target) {
    const auto start = Clock::now();
    const auto window = prepare_window(features, controls, target - tau, target, options.standardize);
    if (options.warm_start_prior && carried_prior) {
      params.z0_mean = carried_prior->mean;
      params.p0_cov = carried_prior->cov;
    }
    auto fit = em_fit(params, window.obs, window.controls, em);
    params = fit.params;
    if (run.forecasts.empty()) run.first_params = params;
    // The next window starts one day later, so its prior sits on this window's first day.
    carried_prior = fit.smoother.smoothed.front();

    const int ti = options.target_index;
    const double reference = features(ti, static_cast<Index>(target - 1));
    auto forecast = forecast_after_window(params, fit.filter.filtered.back(), controls[target],
                                          window, series.dates[target], ti, reference);
    const double actual = features(ti, static_cast<Index>(target));
    run.labels_up.push_back(actual > reference ? 1 : 0);
    run.references.push_back(reference);
    run.actuals.push_back(features.col(static_cast<Index>(target)));
    run.forecasts.push_back(std::move(forecast));
    run.windows.push_back({target, fit.report.iterations_run, fit.report.converged,
                           fit.report.final_log_likelihood, seconds_since(start)});
    log::debug("{}: {} EM iterations, loglik {:.6g}", series.dates[target].to_string(),
               fit.report.iterations_run, fit.report.final_log_likelihood);
  }
  run.final_params = params;
  run.total_seconds = seconds_since(run_start);
  return run;
}

FinalFit fit_final_window(const OhlcvSeries& series, const PipelineOptions& options,
                          const ModelParameters<double>& initial) {
  options.validate();
  const auto tau = static_cast<std::size_t>(options.model.window);
  if (series.size() < tau) throw ConfigError("window", "series is shorter than the window");
  const auto controls = control_inputs(series, options.sma_period);
  auto window = prepare_window(series.features(), controls, series.size() - tau, series.size(),
                               options.standardize);
  auto fit = em_fit(initial, window.obs, window.controls, options.em_options());
  return {std::move(fit), std::move(window)};
}

ForecastResult forecast_beyond(const OhlcvSeries& series, const PipelineOptions& options,
                               const ModelParameters<double>& params) {
  options.validate();
  const auto tau = static_cast<std::size_t>(options.model.window);
  const std::size_t n = series.size();
  if (n < tau) throw ConfigError("window", "series is shorter than the window");
  const Matrix<double> features = series.features();
  const auto sma = compute_sma(series.close, options.sma_period);
  const auto controls = control_inputs(series, options.sma_period);
  const auto window = prepare_window(features, controls, n - tau, n, options.standardize);
  const auto filt = kalman_filter(params, window.obs, window.controls);
  const int ti = options.target_index;
  return forecast_after_window(params, filt.filtered.back(), sma.values[n - 1], window,
                               series.dates[n - 1].next_day(), ti,
                               features(ti, static_cast<Index>(n - 1)));
}

}  // namespace deepssm
