#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "deepssm/types.hpp"

namespace deepssm {

/// Proleptic Gregorian calendar date.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  /// Parses `YYYY-MM-DD`; returns false on malformed or impossible dates.
  static bool parse(std::string_view text, Date& out);
  static Date from_days(long days);

  /// Days since 1970-01-01.
  long to_days() const;
  Date next_day() const { return from_days(to_days() + 1); }
  std::string to_string() const;

  auto operator<=>(const Date&) const = default;
};

/// Observation features in model order: open, adjusted close, high, low, volume.
enum Feature : int { kOpen = 0, kAdjClose = 1, kHigh = 2, kLow = 3, kVolume = 4 };
inline constexpr int kFeatureCount = 5;

struct OhlcvSeries {
  std::vector<Date> dates;
  std::vector<double> open, high, low, close, adj_close, volume;

  std::size_t size() const { return dates.size(); }

  /// Columns are time steps, rows follow the Feature order.
  Matrix<double> features() const;
  /// Index of the first date >= `date`, or size() if there is none.
  std::size_t lower_bound(const Date& date) const;
};

struct CsvParseResult {
  OhlcvSeries series;
  std::size_t dropped_rows = 0;
};

/// Reads the Yahoo Finance daily schema `Date,Open,High,Low,Close,Adj Close,Volume`.
/// Rows with a `null` field are dropped and counted. Throws SchemaError for a missing
/// column and RowError (1-based line) for unparseable or invalid values.
CsvParseResult parse_ohlcv_csv(std::string_view text);
CsvParseResult read_ohlcv_csv(const std::filesystem::path& path);

std::string to_csv(const OhlcvSeries& series);

}  // namespace deepssm
