#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "deepssm/checkpoint.hpp"
#include "deepssm/errors.hpp"
#include "deepssm/evaluation.hpp"
#include "deepssm/fetch.hpp"
#include "deepssm/log.hpp"
#include "deepssm/records.hpp"
#include "deepssm/synthetic.hpp"
#include "deepssm/walk_forward.hpp"

namespace deepssm::cli {
namespace {

namespace fs = std::filesystem;

struct ModelFlags {
  PipelineOptions pipeline;
  int layers = 3;
  bool no_standardize = false;

  void add_to(CLI::App& app) {
    auto& m = pipeline.model;
    app.add_option("--tau", m.window, "training window length")->capture_default_str();
    app.add_option("--layers", m.layers, "factors per operator (1-3)")->capture_default_str();
    app.add_option("--em-iters", m.em_iters, "maximum EM iterations")->capture_default_str();
    app.add_option("--seed", m.seed, "random seed")->capture_default_str();
    app.add_option("--sigma-q", m.sigma_q, "state noise std")->capture_default_str();
    app.add_option("--sigma-r", m.sigma_r, "observation noise std")->capture_default_str();
    app.add_option("--sigma-p", m.sigma_p, "prior std")->capture_default_str();
    app.add_option("--nz", m.n_z, "latent dimension")->capture_default_str();
    app.add_option("--init-scale", m.init_scale, "upper bound of factor initialization")
        ->capture_default_str();
    app.add_option("--sma-period", pipeline.sma_period, "SMA period of the control input")
        ->capture_default_str();
    app.add_option("--target-index", pipeline.target_index,
                   "scored feature (0 open, 1 adj close, 2 high, 3 low, 4 volume)")
        ->capture_default_str();
    app.add_flag("--no-standardize", no_standardize, "fit on raw values");
  }

  PipelineOptions resolve() const {
    PipelineOptions p = pipeline;
    p.standardize = !no_standardize;
    p.validate();
    return p;
  }
};

Date parse_date_flag(const std::string& text, const char* field) {
  Date d;
  if (!Date::parse(text, d)) throw ConfigError(field, "expected YYYY-MM-DD, got '" + text + "'");
  return d;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

OhlcvSeries load_csv(const std::string& path) { return read_ohlcv_csv(path).series; }

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string csv;
  std::string out;
  ModelFlags flags;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const auto options = a.flags.resolve();
  const auto series = load_csv(a.csv);
  if (series.size() < static_cast<std::size_t>(options.model.window)) {
    throw ConfigError("tau", "file has " + std::to_string(series.size()) + " rows, fewer than tau");
  }
  const auto result = fit_final_window(series, options, init_parameters<double>(options.model));
  save_checkpoint(result.fit.params, options.model, a.out);
  const auto& r = result.fit.report;
  out << "iterations=" << r.iterations_run << " converged=" << (r.converged ? 1 : 0)
      << " final_log_likelihood=" << std::setprecision(17) << r.final_log_likelihood
      << " checkpoint=" << a.out << "\n";
  return 0;
}

struct ForecastArgs {
  std::string csv;
  std::string checkpoint;
  std::string out;
  ModelFlags flags;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out) {
  auto options = a.flags.resolve();
  const auto series = load_csv(a.csv);
  ModelParameters<double> params;
  if (!a.checkpoint.empty()) {
    auto ck = load_checkpoint(a.checkpoint);
    options.model = ck.config;
    options.validate();
    params = std::move(ck.params);
  } else {
    params = fit_final_window(series, options, init_parameters<double>(options.model)).fit.params;
  }
  const auto line = format_record(to_record(forecast_beyond(series, options, params))) + "\n";
  if (a.out.empty()) out << line;
  else write_file(a.out, line);
  return 0;
}

struct BacktestArgs {
  std::vector<std::string> csvs;
  std::string split_date;
  std::string out = "forecasts.jsonl";
  std::string metrics_out;
  bool sweep_layers = false;
  bool symmetric_logloss = false;
  std::size_t cvi_window = 30;
  ModelFlags flags;
};

struct BacktestJob {
  std::string asset;
  int layers = 0;
  fs::path forecasts_path;
};

struct BacktestOutcome {
  BacktestJob job;
  MetricsReport metrics;
  VolatilityReport volatility;
  double seconds = 0;
};

fs::path forecasts_path_for(const fs::path& base, const std::string& asset, int layers,
                            bool multi_asset, bool sweep) {
  if (!multi_asset && !sweep) return base;
  std::string name = base.stem().string();
  if (multi_asset) name += "." + asset;
  if (sweep) name += ".layers" + std::to_string(layers);
  return base.parent_path() / (name + base.extension().string());
}

int cmd_backtest(const BacktestArgs& a, std::ostream& out) {
  const auto base = a.flags.resolve();
  const Date split = parse_date_flag(a.split_date, "split_date");
  const auto mode = a.symmetric_logloss ? LogLossMode::Symmetric : LogLossMode::OneSided;
  const bool multi = a.csvs.size() > 1;

  std::vector<std::pair<std::string, OhlcvSeries>> assets;
  for (const auto& csv : a.csvs) {
    assets.emplace_back(fs::path(csv).stem().string(), load_csv(csv));
  }
  std::vector<int> layer_list = a.sweep_layers ? std::vector<int>{1, 2, 3}
                                               : std::vector<int>{base.model.layers};

  // Assets and depths are independent chains; each chain itself is sequential.
  std::vector<std::future<BacktestOutcome>> futures;
  for (const auto& [asset, series] : assets) {
    for (int layers : layer_list) {
      BacktestJob job{asset, layers, forecasts_path_for(a.out, asset, layers, multi, a.sweep_layers)};
      futures.push_back(std::async(std::launch::async, [&, job]() {
        PipelineOptions options = base;
        options.model.layers = job.layers;
        const auto run = walk_forward(series, options, split);
        const auto records = to_records(run);
        write_file(job.forecasts_path, format_records(records));
        BacktestOutcome o{job, metrics_from_records(records, options.target_index, mode),
                          cvi(series.close, std::min(a.cvi_window, series.size())),
                          run.total_seconds};
        return o;
      }));
    }
  }
  std::vector<BacktestOutcome> outcomes;
  for (auto& f : futures) outcomes.push_back(f.get());

  std::string metrics_text;
  char row[256];
  std::snprintf(row, sizeof(row), "%-12s %6s %5s %12s %9s %9s %8s %9s %9s %12s %8s\n", "asset",
                "layers", "n", "rmse", "mape%", "smape%", "r", "logloss", "t", "cvi", "seconds");
  out << row;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    metrics_text += "asset=" + o.job.asset + " layers=" + std::to_string(o.job.layers) + " " +
                    o.metrics.to_record() + "\n";
    // One CVI line per asset, after its last depth.
    if (i + 1 == outcomes.size() || outcomes[i + 1].job.asset != o.job.asset) {
      std::ostringstream cvi_line;
      cvi_line << std::setprecision(17) << "asset=" << o.job.asset << " cvi=" << o.volatility.cvi
               << " cvi_window=" << o.volatility.window_days << " anchor=" << o.volatility.anchor
               << "\n";
      metrics_text += cvi_line.str();
    }
    const auto& m = o.metrics;
    std::snprintf(row, sizeof(row), "%-12s %6d %5zu %12.6g %9.4g %9.4g %8.4f %9.4g %9.4g %12.6g %8.3f\n",
                  o.job.asset.c_str(), o.job.layers, m.n, m.rmse, m.mape_pct, m.smape_pct,
                  m.pearson_r, m.log_loss, m.t_stat, o.volatility.cvi, o.seconds);
    out << row;
  }
  const fs::path metrics_path =
      a.metrics_out.empty() ? fs::path(a.out + ".metrics") : fs::path(a.metrics_out);
  write_file(metrics_path, metrics_text);
  return 0;
}

struct MetricsArgs {
  std::string forecasts;
  int target_index = kAdjClose;
  bool symmetric_logloss = false;
};

int cmd_metrics(const MetricsArgs& a, std::ostream& out) {
  const auto records = parse_records(read_file(a.forecasts));
  const auto report = metrics_from_records(
      records, a.target_index, a.symmetric_logloss ? LogLossMode::Symmetric : LogLossMode::OneSided);
  out << report.to_record() << "\n";
  return 0;
}

struct SynthArgs {
  std::string out;
  std::string truth_out;
  std::string truth_in;
  std::size_t days = 400;
  std::string start_date = "2020-01-01";
  double level = 100.0;
  double loop_gain = 1.0;
  ModelConfig model;
  int sma_period = 10;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.model.sigma_q < 0) throw ConfigError("sigma_q", "noise std must be >= 0");
  if (a.model.sigma_r < 0) throw ConfigError("sigma_r", "noise std must be >= 0");
  if (a.model.sigma_p < 0) throw ConfigError("sigma_p", "noise std must be >= 0");
  const Date start = parse_date_flag(a.start_date, "start_date");
  ModelParameters<double> truth;
  if (!a.truth_in.empty()) {
    truth = load_checkpoint(a.truth_in).params;
  } else {
    ModelConfig c = a.model;
    c.n_x = kFeatureCount;
    c.n_y = 1;
    // Zero-noise requests are valid here; the model config itself needs positive sigmas.
    ModelConfig positive = c;
    positive.sigma_q = positive.sigma_r = positive.sigma_p = 1;
    truth = random_ground_truth(positive, c.seed);
    const auto eye = [](Index n) { return Matrix<double>::Identity(n, n); };
    truth.q_cov = c.sigma_q * c.sigma_q * eye(c.n_z);
    truth.r_cov = c.sigma_r * c.sigma_r * eye(kFeatureCount);
    truth.p0_cov = c.sigma_p * c.sigma_p * eye(c.n_z);
  }
  const auto synth = synthesize_ohlcv(truth, a.days, start, a.sma_period, a.model.seed, a.level,
                                      a.loop_gain);
  write_file(a.out, to_csv(synth.series));
  ModelConfig written = a.model;
  written.n_x = kFeatureCount;
  written.n_y = 1;
  written.n_z = synth.truth.n_z();
  written.layers = synth.truth.layers;
  if (!a.truth_out.empty()) write_file(a.truth_out, checkpoint_to_string(synth.truth, written));
  out << "days=" << a.days << " csv=" << a.out;
  if (!a.truth_out.empty()) out << " truth=" << a.truth_out;
  out << "\n";
  return 0;
}

struct FetchArgs {
  std::string ticker;
  std::string from;
  std::string to;
  std::string base_url = FetchRequest{}.base_url;
  std::string out;
};

int cmd_fetch(const FetchArgs& a, std::ostream& out) {
  FetchRequest req{a.base_url, a.ticker, parse_date_flag(a.from, "from"),
                   parse_date_flag(a.to, "to")};
  const auto parsed = fetch_ohlcv_csv(req);
  write_file(a.out, to_csv(parsed.series));
  out << "rows=" << parsed.series.size() << " dropped=" << parsed.dropped_rows
      << " csv=" << a.out << "\n";
  return 0;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DimensionError*>(&e)) {
    return kExitConfig;
  }
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const InferenceError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitData;
  return kExitNumeric;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep state-space forecasting of OHLCV series"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit the final window and write a checkpoint");
  fit_cmd->add_option("csv", fit.csv, "OHLCV CSV file")->required();
  fit_cmd->add_option("--out,--checkpoint", fit.out, "checkpoint path")->required();
  fit.flags.add_to(*fit_cmd);

  ForecastArgs fc;
  auto* fc_cmd = app.add_subcommand("forecast", "forecast the day after the data");
  fc_cmd->add_option("csv", fc.csv, "OHLCV CSV file")->required();
  fc_cmd->add_option("--checkpoint", fc.checkpoint, "fitted checkpoint (fits if omitted)");
  fc_cmd->add_option("--out", fc.out, "output file (stdout if omitted)");
  fc.flags.add_to(*fc_cmd);

  BacktestArgs bt;
  auto* bt_cmd = app.add_subcommand("backtest", "walk-forward backtest");
  bt_cmd->add_option("csv", bt.csvs, "OHLCV CSV file(s)")->required();
  bt_cmd->add_option("--split-date", bt.split_date, "first forecast date")->required();
  bt_cmd->add_option("--out", bt.out, "forecast records file")->capture_default_str();
  bt_cmd->add_option("--metrics-out", bt.metrics_out, "metrics file (default <out>.metrics)");
  bt_cmd->add_flag("--sweep-layers", bt.sweep_layers, "run depths 1, 2 and 3");
  bt_cmd->add_flag("--symmetric-logloss", bt.symmetric_logloss, "two-sided log-loss");
  bt_cmd->add_option("--cvi-window", bt.cvi_window, "CVI window in days")->capture_default_str();
  bt.flags.add_to(*bt_cmd);

  MetricsArgs mt;
  auto* mt_cmd = app.add_subcommand("metrics", "recompute metrics from a forecasts file");
  mt_cmd->add_option("forecasts", mt.forecasts, "backtest forecast records")->required();
  mt_cmd->add_option("--target-index", mt.target_index, "scored feature")->capture_default_str();
  mt_cmd->add_flag("--symmetric-logloss", mt.symmetric_logloss, "two-sided log-loss");

  SynthArgs sy;
  auto* sy_cmd = app.add_subcommand("synth", "generate a synthetic OHLCV series");
  sy_cmd->add_option("--out", sy.out, "CSV output")->required();
  sy_cmd->add_option("--truth-out", sy.truth_out, "ground-truth checkpoint output");
  sy_cmd->add_option("--truth", sy.truth_in, "ground-truth checkpoint to sample from");
  sy_cmd->add_option("--days", sy.days, "number of days")->capture_default_str();
  sy_cmd->add_option("--start-date", sy.start_date, "first date")->capture_default_str();
  sy_cmd->add_option("--level", sy.level, "price level added to every column")
      ->capture_default_str();
  sy_cmd->add_option("--loop-gain", sy.loop_gain, "close-to-close gain of the SMA feedback")
      ->capture_default_str();
  sy_cmd->add_option("--nz", sy.model.n_z, "latent dimension")->capture_default_str();
  sy_cmd->add_option("--layers", sy.model.layers, "factors per operator")->capture_default_str();
  sy_cmd->add_option("--seed", sy.model.seed, "random seed")->capture_default_str();
  sy_cmd->add_option("--sigma-q", sy.model.sigma_q, "state noise std")->capture_default_str();
  sy_cmd->add_option("--sigma-r", sy.model.sigma_r, "observation noise std")->capture_default_str();
  sy_cmd->add_option("--sigma-p", sy.model.sigma_p, "initial state std")->capture_default_str();
  sy_cmd->add_option("--sma-period", sy.sma_period, "SMA period")->capture_default_str();

  FetchArgs fe;
  auto* fe_cmd = app.add_subcommand("fetch", "download a daily OHLCV CSV");
  fe_cmd->add_option("--ticker", fe.ticker, "ticker symbol, e.g. BTC-USD")->required();
  fe_cmd->add_option("--from", fe.from, "start date")->required();
  fe_cmd->add_option("--to", fe.to, "end date (exclusive)")->required();
  fe_cmd->add_option("--base-url", fe.base_url, "endpoint base URL")->capture_default_str();
  fe_cmd->add_option("--out", fe.out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out);
    if (fc_cmd->parsed()) return cmd_forecast(fc, out);
    if (bt_cmd->parsed()) return cmd_backtest(bt, out);
    if (mt_cmd->parsed()) return cmd_metrics(mt, out);
    if (sy_cmd->parsed()) return cmd_synth(sy, out);
    if (fe_cmd->parsed()) return cmd_fetch(fe, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitConfig;
}

}  // namespace deepssm::cli
