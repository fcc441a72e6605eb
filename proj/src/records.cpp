#include "deepssm/records.hpp"

#include <json.hpp>

#include "deepssm/errors.hpp"

namespace deepssm {
namespace {

using json = nlohmann::json;

std::vector<double> to_std(const Vector<double>& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

ForecastRecord to_record(const ForecastResult& f) {
  return {f.date, to_std(f.mean), f.target_variance(), f.p_up, std::nullopt, std::nullopt};
}

std::vector<ForecastRecord> to_records(const BacktestRun& run) {
  std::vector<ForecastRecord> out;
  out.reserve(run.forecasts.size());
  for (std::size_t k = 0; k < run.forecasts.size(); ++k) {
    auto r = to_record(run.forecasts[k]);
    r.actual = to_std(run.actuals[k]);
    r.label_up = run.labels_up[k];
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_record(const ForecastRecord& r) {
  json j;
  j["date"] = r.date.to_string();
  j["mean"] = r.mean;
  j["var_target"] = r.var_target;
  j["p_up"] = r.p_up;
  if (r.actual) j["actual"] = *r.actual;
  if (r.label_up) j["label_up"] = *r.label_up;
  return j.dump();
}

std::string format_records(const std::vector<ForecastRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += format_record(r);
    out += '\n';
  }
  return out;
}

std::vector<ForecastRecord> parse_records(std::string_view text) {
  std::vector<ForecastRecord> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const auto line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = json::parse(line);
      ForecastRecord r;
      if (!Date::parse(j.at("date").get<std::string>(), r.date)) {
        throw RowError(line_no, "bad date");
      }
      r.mean = j.at("mean").get<std::vector<double>>();
      r.var_target = j.at("var_target").get<double>();
      r.p_up = j.at("p_up").get<double>();
      if (j.contains("actual")) r.actual = j.at("actual").get<std::vector<double>>();
      if (j.contains("label_up")) r.label_up = j.at("label_up").get<int>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw RowError(line_no, e.what());
    }
  }
  return out;
}

MetricsReport metrics_from_records(const std::vector<ForecastRecord>& records, int target_index,
                                   LogLossMode mode) {
  std::vector<double> pred, actual, probs;
  std::vector<int> labels;
  for (const auto& r : records) {
    if (!r.actual || !r.label_up) throw DataError("metrics: record without actual values");
    const auto ti = static_cast<std::size_t>(target_index);
    if (ti >= r.mean.size() || ti >= r.actual->size()) {
      throw ConfigError("target_index", "out of range for the records");
    }
    pred.push_back(r.mean[ti]);
    actual.push_back((*r.actual)[ti]);
    probs.push_back(r.p_up);
    labels.push_back(*r.label_up);
  }
  auto report = metrics(pred, actual);
  report.log_loss = log_loss(labels, probs, mode);
  return report;
}

}  // namespace deepssm
