#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepssm/evaluation.hpp"
#include "deepssm/forecast.hpp"
#include "deepssm/walk_forward.hpp"

namespace deepssm {

/// One line of a forecasts file. Backtest records also carry the realized values.
struct ForecastRecord {
  Date date;
  std::vector<double> mean;
  double var_target = 0;
  double p_up = 0.5;
  std::optional<std::vector<double>> actual;
  std::optional<int> label_up;
};

ForecastRecord to_record(const ForecastResult& forecast);
std::vector<ForecastRecord> to_records(const BacktestRun& run);

/// Single-line JSON: {"date", "mean", "var_target", "p_up"[, "actual", "label_up"]}.
std::string format_record(const ForecastRecord& record);
std::string format_records(const std::vector<ForecastRecord>& records);

/// Parses line-delimited records; blank lines are ignored. Throws RowError with
/// the 1-based line of a malformed record.
std::vector<ForecastRecord> parse_records(std::string_view text);

/// Scores backtest records on feature `target_index`: point metrics of mean vs
/// actual plus the log-loss of p_up against label_up.
MetricsReport metrics_from_records(const std::vector<ForecastRecord>& records, int target_index,
                                   LogLossMode mode = LogLossMode::OneSided);

}  // namespace deepssm
