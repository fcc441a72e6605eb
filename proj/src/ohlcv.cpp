#include "deepssm/ohlcv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "deepssm/errors.hpp"
#include "deepssm/log.hpp"

namespace deepssm {
namespace {

// Howard Hinnant's civil-calendar conversions.
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const long yoe = y - era * 400;
  const long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

constexpr std::array<const char*, 7> kColumns = {"Date", "Open", "High", "Low",
                                                 "Close", "Adj Close", "Volume"};

}  // namespace

bool Date::parse(std::string_view text, Date& out) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  int y = 0, m = 0, d = 0;
  auto num = [&](std::size_t pos, std::size_t len, int& v) {
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    return ec == std::errc() && ptr == text.data() + pos + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return false;
  if (m < 1 || m > 12 || d < 1) return false;
  const Date candidate{y, m, d};
  if (from_days(candidate.to_days()) != candidate) return false;
  out = candidate;
  return true;
}

Date Date::from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const long doe = z - era * 146097;
  const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const long mp = (5 * doy + 2) / 153;
  const int d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  const int m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  const int y = static_cast<int>(yoe + era * 400 + (m <= 2));
  return {y, m, d};
}

long Date::to_days() const { return days_from_civil(year, month, day); }

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

Matrix<double> OhlcvSeries::features() const {
  const auto n = static_cast<Index>(size());
  Matrix<double> x(kFeatureCount, n);
  for (Index k = 0; k < n; ++k) {
    x(kOpen, k) = open[k];
    x(kAdjClose, k) = adj_close[k];
    x(kHigh, k) = high[k];
    x(kLow, k) = low[k];
    x(kVolume, k) = volume[k];
  }
  return x;
}

std::size_t OhlcvSeries::lower_bound(const Date& date) const {
  return static_cast<std::size_t>(std::lower_bound(dates.begin(), dates.end(), date) - dates.begin());
}

CsvParseResult parse_ohlcv_csv(std::string_view text) {
  CsvParseResult result;
  auto& s = result.series;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  std::array<std::size_t, kColumns.size()> col{};
  std::size_t n_fields = 0;

  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (trim(line).empty()) continue;

    const auto fields = split(line);
    if (!have_header) {
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto it = std::find(fields.begin(), fields.end(), std::string_view(kColumns[c]));
        if (it == fields.end()) throw SchemaError(kColumns[c]);
        col[c] = static_cast<std::size_t>(it - fields.begin());
      }
      n_fields = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != n_fields) {
      throw RowError(line_no, "expected " + std::to_string(n_fields) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    if (std::any_of(col.begin(), col.end(), [&](std::size_t c) { return fields[c] == "null"; })) {
      ++result.dropped_rows;
      continue;
    }
    Date date;
    if (!Date::parse(fields[col[0]], date)) {
      throw RowError(line_no, "bad date '" + std::string(fields[col[0]]) + "'");
    }
    std::array<double, 6> v{};
    for (std::size_t c = 1; c < kColumns.size(); ++c) {
      if (!parse_double(fields[col[c]], v[c - 1]) || !std::isfinite(v[c - 1])) {
        throw RowError(line_no, std::string("bad number in column '") + kColumns[c] + "'");
      }
    }
    for (std::size_t c = 0; c < 5; ++c) {
      if (!(v[c] > 0)) throw RowError(line_no, std::string("non-positive ") + kColumns[c + 1]);
    }
    if (v[5] < 0) throw RowError(line_no, "negative Volume");
    if (!s.dates.empty() && !(s.dates.back() < date)) {
      throw RowError(line_no, "dates must be strictly increasing");
    }
    s.dates.push_back(date);
    s.open.push_back(v[0]);
    s.high.push_back(v[1]);
    s.low.push_back(v[2]);
    s.close.push_back(v[3]);
    s.adj_close.push_back(v[4]);
    s.volume.push_back(v[5]);
  }
  if (!have_header) throw SchemaError(kColumns[0]);
  if (result.dropped_rows > 0) {
    log::warn("dropped {} row(s) containing null fields", result.dropped_rows);
  }
  return result;
}

CsvParseResult read_ohlcv_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ohlcv_csv(buf.str());
}

std::string to_csv(const OhlcvSeries& s) {
  std::string out = "Date,Open,High,Low,Close,Adj Close,Volume\n";
  char buf[256];
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  s.dates[k].to_string().c_str(), s.open[k], s.high[k], s.low[k], s.close[k],
                  s.adj_close[k], s.volume[k]);
    out += buf;
  }
  return out;
}

}  // namespace deepssm
