#include "deepssm/fetch.hpp"

#include <httplib.h>

#include "deepssm/errors.hpp"

namespace deepssm {

std::string download_path(const FetchRequest& r) {
  constexpr long kSecondsPerDay = 86400;
  return "/v7/finance/download/" + httplib::detail::encode_url(r.ticker) +
         "?period1=" + std::to_string(r.from.to_days() * kSecondsPerDay) +
         "&period2=" + std::to_string(r.to.to_days() * kSecondsPerDay) +
         "&interval=1d&events=history&includeAdjustedClose=true";
}

CsvParseResult fetch_ohlcv_csv(const FetchRequest& request) {
  if (request.ticker.empty()) throw ConfigError("ticker", "must not be empty");
  if (!(request.from < request.to)) throw ConfigError("range", "start must precede end");
  httplib::Client client(request.base_url);
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  auto res = client.Get(download_path(request));
  if (!res) {
    throw DataError("fetch " + request.ticker + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw DataError("fetch " + request.ticker + ": HTTP " + std::to_string(res->status));
  }
  return parse_ohlcv_csv(res->body);
}

}  // namespace deepssm
