#include "deepssm/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "deepssm/errors.hpp"

namespace deepssm {
namespace {

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double m) {
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

std::string MetricsReport::to_record() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "rmse=%.17g mape_pct=%.17g smape_pct=%.17g pearson_r=%.17g log_loss=%.17g "
                "t_stat=%.17g n=%zu",
                rmse, mape_pct, smape_pct, pearson_r, log_loss, t_stat, n);
  return buf;
}

double welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DimensionError("welch_t: need at least 2 samples each");
  const double ma = mean(a), mb = mean(b);
  const double se2 = sample_variance(a, ma) / static_cast<double>(a.size()) +
                     sample_variance(b, mb) / static_cast<double>(b.size());
  if (ma == mb) return 0.0;
  if (!(se2 > 0)) return ma > mb ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
  return (ma - mb) / std::sqrt(se2);
}

MetricsReport metrics(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw DimensionError("metrics: length mismatch");
  if (pred.size() < 2) throw DimensionError("metrics: need at least 2 samples");
  const std::size_t n = pred.size();
  MetricsReport r;
  r.n = n;

  double se = 0, ape = 0, sape = 0;
  std::size_t ape_terms = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double err = pred[k] - actual[k];
    se += err * err;
    if (actual[k] != 0) {
      ape += std::abs(err) / std::abs(actual[k]);
      ++ape_terms;
    } else {
      r.mape_skipped_zero = true;
    }
    const double denom = std::abs(actual[k]) + std::abs(pred[k]);
    if (denom > 0) sape += 2 * std::abs(err) / denom;
  }
  r.rmse = std::sqrt(se / static_cast<double>(n));
  r.mape_pct = ape_terms > 0 ? 100 * ape / static_cast<double>(ape_terms) : 0;
  r.smape_pct = 100 * sape / static_cast<double>(n);

  const double mp = mean(pred), ma = mean(actual);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (pred[k] - mp) * (actual[k] - ma);
    sxx += (pred[k] - mp) * (pred[k] - mp);
    syy += (actual[k] - ma) * (actual[k] - ma);
  }
  if (!(sxx > 0) || !(syy > 0)) throw DataError("metrics: pearson r undefined for a constant series");
  r.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  r.t_stat = welch_t(pred, actual);
  return r;
}

double log_loss(std::span<const int> labels, std::span<const double> probs, LogLossMode mode) {
  if (labels.size() != probs.size()) throw DimensionError("log_loss: length mismatch");
  if (labels.empty()) throw DimensionError("log_loss: empty input");
  constexpr double kEps = 1e-12;
  double total = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != 0 && labels[k] != 1) {
      throw ValidationError("log_loss: label " + std::to_string(labels[k]) + " at index " +
                            std::to_string(k) + " is not 0 or 1");
    }
    const double p = std::clamp(probs[k], kEps, 1 - kEps);
    if (labels[k] == 1) total -= std::log(p);
    else if (mode == LogLossMode::Symmetric) total -= std::log(1 - p);
  }
  return total / static_cast<double>(labels.size());
}

VolatilityReport cvi(std::span<const double> close, std::size_t window_days) {
  if (window_days < 2) throw ConfigError("cvi_window", "must be >= 2");
  if (window_days > close.size()) throw ConfigError("cvi_window", "exceeds the series length");
  const auto tail = close.subspan(close.size() - window_days);
  const double last = tail.back();
  double ss = 0;
  for (double c : tail) ss += (last - c) * (last - c);
  VolatilityReport r;
  r.window_days = window_days;
  r.cvi = std::sqrt(365.0) * std::sqrt(ss / static_cast<double>(window_days));
  return r;
}

}  // namespace deepssm
