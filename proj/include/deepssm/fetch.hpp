#pragma once

#include <string>

#include "deepssm/ohlcv.hpp"

namespace deepssm {

/// Daily OHLCV download for one ticker over [from, to).
struct FetchRequest {
  std::string base_url = "https://query1.finance.yahoo.com";
  std::string ticker;
  Date from;
  Date to;
};

/// Path and query of the CSV download endpoint for `request`.
std::string download_path(const FetchRequest& request);

/// HTTP GET of the CSV endpoint, parsed with parse_ohlcv_csv. Network failures and
/// non-200 responses raise DataError.
CsvParseResult fetch_ohlcv_csv(const FetchRequest& request);

}  // namespace deepssm
