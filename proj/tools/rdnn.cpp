// rdnn: train and backtest a recurrent direct-RL portfolio policy.
//
// Subcommands: ingest, train, backtest, report. Each reads a flat
// `key = value` config file plus `section.key=value` overrides; see the
// repository README for the grammar and artifact layout.

#include <CLI11.hpp>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rdnn/backtest.hpp"
#include "rdnn/checkpoint.hpp"
#include "rdnn/env.hpp"
#include "rdnn/errors.hpp"
#include "rdnn/io.hpp"
#include "rdnn/market_data.hpp"
#include "rdnn/run_config.hpp"
#include "rdnn/selection.hpp"
#include "rdnn/training.hpp"

namespace {

namespace fs = std::filesystem;
using namespace rdnn;

constexpr int kExitData = 2;
constexpr int kExitTrain = 3;
constexpr int kExitBacktest = 4;
constexpr int kExitReport = 5;

int run_guarded(int failure_code, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return failure_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure_code;
  }
}

RunConfig make_config(const std::string& config_path,
                      const std::vector<std::string>& overrides) {
  RunConfig cfg =
      config_path.empty() ? RunConfig{} : load_run_config(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      fail(Errc::ConfigError, "override '" + kv + "' is not key=value");
    }
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::string artifact_path(const RunConfig& cfg, const char* name) {
  return (fs::path(cfg.artifacts_dir) / name).string();
}

std::string output_path(const RunConfig& cfg, const char* name) {
  return (fs::path(cfg.output_dir) / name).string();
}

PriceHistory load_prices_artifact(const RunConfig& cfg) {
  return parse_ohlcv_csv(read_file(artifact_path(cfg, "prices.csv")));
}

FeatureMatrix load_features_artifact(const RunConfig& cfg) {
  return feature_matrix_from_csv(read_file(artifact_path(cfg, "features.csv")));
}

// Restrict data to the configured stock pool (first `pool_size` assets).
void apply_pool(const RunConfig& cfg, PriceHistory& history,
                FeatureMatrix& features) {
  if (cfg.pool_size <= 0 ||
      cfg.pool_size >= static_cast<int>(history.num_assets())) {
    return;
  }
  std::vector<int> keep(cfg.pool_size);
  for (int i = 0; i < cfg.pool_size; ++i) keep[i] = i;
  features = select_assets(features, keep, history.num_assets());
  history = select_assets(history, keep);
}

FeatureMatrix slice_days(const FeatureMatrix& f, std::size_t first,
                         std::size_t last) {
  FeatureMatrix out;
  out.feature_names = f.feature_names;
  out.calendar.assign(f.calendar.begin() + first, f.calendar.begin() + last + 1);
  out.values = f.values.middleRows(first, last - first + 1);
  return out;
}

// [first, last] feature-day indexes covered by an optional date range
std::pair<std::size_t, std::size_t> resolve_range(
    const FeatureMatrix& features, const std::optional<std::string>& start,
    const std::optional<std::string>& end, const char* what) {
  const auto& cal = features.calendar;
  std::size_t i0 = 0;
  std::size_t i1 = cal.size() - 1;
  if (start) {
    auto it = std::lower_bound(cal.begin(), cal.end(), *start);
    if (it == cal.end()) {
      fail(Errc::CalendarMismatch,
           std::string(what) + " range starts after the data ends");
    }
    i0 = it - cal.begin();
  }
  if (end) {
    auto it = std::upper_bound(cal.begin(), cal.end(), *end);
    if (it == cal.begin()) {
      fail(Errc::CalendarMismatch,
           std::string(what) + " range ends before the data starts");
    }
    i1 = (it - cal.begin()) - 1;
  }
  if (i0 >= i1) {
    fail(Errc::CalendarMismatch,
         std::string(what) + " range needs at least two trading days");
  }
  return {i0, i1};
}

std::string series_csv(
    const std::vector<std::string>& calendar,
    const std::vector<std::pair<std::string, const std::vector<double>*>>&
        columns) {
  std::string out = "date";
  if (columns.size() == 1) {
    out += ",value";
  } else {
    for (const auto& [label, series] : columns) out += ",value:" + label;
  }
  out += "\n";
  for (std::size_t d = 0; d < calendar.size(); ++d) {
    out += calendar[d];
    for (const auto& [label, series] : columns) {
      out += "," + format_double((*series)[d]);
    }
    out += "\n";
  }
  return out;
}

void write_report_series(const RunConfig& cfg, const BacktestReport& report) {
  atomic_write_file(output_path(cfg, "equity.csv"),
                    series_csv(report.calendar, {{"equity", &report.equity}}));
  atomic_write_file(
      output_path(cfg, "baseline.csv"),
      series_csv(report.calendar, {{"baseline", &report.baseline_equity}}));
  atomic_write_file(
      output_path(cfg, "leverage.csv"),
      series_csv(report.calendar, {{"leverage", &report.leverage}}));
  atomic_write_file(
      output_path(cfg, "turnover.csv"),
      series_csv(report.calendar, {{"turnover", &report.turnover}}));
}

void cmd_ingest(const RunConfig& cfg) {
  if (cfg.data_csv.empty()) {
    fail(Errc::ConfigError, "data.csv is not set (use --data or the config)");
  }
  const PriceHistory history = load_ohlcv(cfg.data_csv);
  const FeatureMatrix features = build_features(history, cfg.indicators);
  atomic_write_file(artifact_path(cfg, "prices.csv"),
                    price_history_to_csv(history));
  atomic_write_file(artifact_path(cfg, "features.csv"),
                    feature_matrix_to_csv(features));
  std::cout << "ingested " << history.num_assets() << " assets over "
            << history.num_days() << " days; " << features.num_days()
            << " feature days x " << features.dim() << " features\n"
            << "artifacts: " << artifact_path(cfg, "prices.csv") << ", "
            << artifact_path(cfg, "features.csv") << "\n";
}

void train_selection(const RunConfig& cfg, const PriceHistory& history,
                     const FeatureMatrix& features, std::size_t i0,
                     std::size_t i1) {
  const int pool = static_cast<int>(history.num_assets());
  const int k = cfg.selection.basket_size;
  if (k > pool) fail(Errc::PoolTooSmall, "basket larger than pool");
  const Eigen::Index per_stock =
      features.dim() / static_cast<Eigen::Index>(pool);

  MaskParameters mask = init_mask_params(static_cast<int>(per_stock),
                                         cfg.selection.mask_hidden,
                                         cfg.mask_seed());

  // The actor trains on the opening basket; the mask network then adapts
  // the basket around the frozen actor.
  const Basket opening =
      top_k_mask(score_stocks(per_asset_features(features, i0, pool), mask), k);
  PriceHistory basket_history = select_assets(history, opening.selected);
  FeatureMatrix basket_features =
      select_assets(features, opening.selected, pool);
  FeatureMatrix train_slice = slice_days(basket_features, i0, i1);

  EnvConfig basket_env = cfg.env;
  basket_env.num_stocks = k;
  PolicyConfig policy_cfg = cfg.policy;
  policy_cfg.seed = cfg.policy_seed();
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.train_seed();

  TrainResult result = train(train_slice, basket_history, policy_cfg,
                             basket_env, train_cfg);

  EnvConfig pool_env = cfg.env;
  pool_env.num_stocks = pool;
  std::vector<Eigen::MatrixXd> pool_features;
  for (std::size_t t = i0; t < i1; ++t) {
    pool_features.push_back(per_asset_features(features, t, pool));
  }
  const auto gross = gross_return_sequence(
      pool_env, history, calendar_offset(history, features) + i0, i1 - i0);
  MaskTrainConfig mask_cfg;
  mask_cfg.iterations = cfg.mask_iterations;
  mask_cfg.seed = cfg.mask_seed();
  mask_cfg.utility = cfg.train.utility;
  MaskTrainResult mask_result =
      train_mask(mask, pool_features, gross, result.params, policy_cfg,
                 cfg.selection, pool_env, mask_cfg);

  Checkpoint ckpt;
  ckpt.policy = policy_cfg;
  ckpt.feature_dim = static_cast<int>(train_slice.dim());
  ckpt.num_assets = k + 1;
  ckpt.params = result.params;
  save_checkpoint(output_path(cfg, "checkpoint.json"), ckpt);
  atomic_write_file(output_path(cfg, "mask_checkpoint.json"),
                    mask_checkpoint_to_json(mask_result.params, cfg.mask_seed()));
  atomic_write_file(output_path(cfg, "train_report.json"),
                    train_report_to_json(result.report));
  std::cout << "trained selection actor over basket of " << k << " / " << pool
            << " stocks, " << cfg.train.epochs << " epochs; mask accepted "
            << mask_result.utility.size() << " iterations\n"
            << "checkpoint: " << output_path(cfg, "checkpoint.json") << "\n";
}

void cmd_train(const RunConfig& cfg) {
  PriceHistory history = load_prices_artifact(cfg);
  FeatureMatrix features = load_features_artifact(cfg);
  apply_pool(cfg, history, features);
  const auto [i0, i1] =
      resolve_range(features, cfg.train_start, cfg.train_end, "train");

  if (cfg.selection_enabled) {
    train_selection(cfg, history, features, i0, i1);
    return;
  }

  EnvConfig env = cfg.env;
  env.num_stocks = static_cast<int>(history.num_assets());
  PolicyConfig policy_cfg = cfg.policy;
  policy_cfg.seed = cfg.policy_seed();
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.train_seed();

  FeatureMatrix train_slice = slice_days(features, i0, i1);
  TrainResult result =
      train(train_slice, history, policy_cfg, env, train_cfg);

  Checkpoint ckpt;
  ckpt.policy = policy_cfg;
  ckpt.feature_dim = static_cast<int>(features.dim());
  ckpt.num_assets = env.num_stocks + 1;
  ckpt.params = result.params;
  save_checkpoint(output_path(cfg, "checkpoint.json"), ckpt);
  atomic_write_file(output_path(cfg, "train_report.json"),
                    train_report_to_json(result.report));

  std::cout << "trained " << train_cfg.epochs << " epochs over "
            << train_slice.num_days() << " days";
  if (!result.report.utility.empty()) {
    std::cout << "; utility " << format_double(result.report.utility.front())
              << " -> " << format_double(result.report.utility.back());
  }
  std::cout << "\ncheckpoint: " << output_path(cfg, "checkpoint.json") << "\n";
}

void cmd_backtest(const RunConfig& cfg, const std::string& checkpoint_path) {
  PriceHistory history = load_prices_artifact(cfg);
  FeatureMatrix features = load_features_artifact(cfg);
  apply_pool(cfg, history, features);
  const auto [i0, i1] =
      resolve_range(features, cfg.test_start, cfg.test_end, "test");

  const std::string ckpt_path = checkpoint_path.empty()
                                    ? output_path(cfg, "checkpoint.json")
                                    : checkpoint_path;
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const std::string baseline =
      cfg.baseline_ticker.empty() ? history.assets[0] : cfg.baseline_ticker;

  BacktestReport report;
  if (cfg.selection_enabled) {
    EnvConfig env = cfg.env;
    env.num_stocks = static_cast<int>(history.num_assets());
    const MaskParameters mask = mask_checkpoint_from_json(
        read_file(output_path(cfg, "mask_checkpoint.json")));
    SelectionBacktest sel =
        run_selection_backtest(history, features, ckpt, mask, cfg.selection,
                               env, baseline, i0, i1);
    report = sel.report;
    atomic_write_file(
        output_path(cfg, "basket_trace.csv"),
        basket_trace_to_csv(report.calendar, history.assets, sel.days));
  } else {
    EnvConfig env = cfg.env;
    env.num_stocks = ckpt.num_assets - 1;
    report = run_backtest(history, features, ckpt, env, baseline, i0, i1);
  }

  atomic_write_file(output_path(cfg, "backtest_report.json"),
                    backtest_report_to_json(report));
  write_report_series(cfg, report);
  std::cout << "backtest " << report.calendar.front() << " .. "
            << report.calendar.back() << " (" << report.calendar.size()
            << " days)\n"
            << "final wealth " << format_double(report.summary.final_wealth)
            << ", baseline " << format_double(report.summary.baseline_final_wealth)
            << ", outperformance "
            << format_double(report.summary.outperformance) << "\n"
            << "sharpe " << format_double(report.summary.sharpe)
            << ", max drawdown " << format_double(report.summary.max_drawdown)
            << "\nreport: " << output_path(cfg, "backtest_report.json") << "\n";
}

void cmd_report(const RunConfig& cfg, const std::vector<std::string>& paths) {
  if (paths.empty()) fail(Errc::ConfigError, "no report files given");
  std::vector<BacktestReport> reports;
  std::vector<std::string> labels;
  for (const auto& p : paths) {
    reports.push_back(backtest_report_from_json(read_file(p)));
    labels.push_back(fs::path(p).stem().string());
  }
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].calendar != reports[0].calendar) {
      fail(Errc::CalendarMismatch,
           paths[i] + " does not share the calendar of " + paths[0]);
    }
  }

  auto columns = [&](auto member) {
    std::vector<std::pair<std::string, const std::vector<double>*>> cols;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      cols.emplace_back(labels[i], &(reports[i].*member));
    }
    return cols;
  };
  const auto& cal = reports[0].calendar;
  atomic_write_file(output_path(cfg, "equity.csv"),
                    series_csv(cal, columns(&BacktestReport::equity)));
  atomic_write_file(output_path(cfg, "baseline.csv"),
                    series_csv(cal, columns(&BacktestReport::baseline_equity)));
  atomic_write_file(output_path(cfg, "leverage.csv"),
                    series_csv(cal, columns(&BacktestReport::leverage)));
  atomic_write_file(output_path(cfg, "turnover.csv"),
                    series_csv(cal, columns(&BacktestReport::turnover)));
  std::cout << "wrote equity.csv, baseline.csv, leverage.csv, turnover.csv to "
            << cfg.output_dir << " (" << reports.size() << " run"
            << (reports.size() == 1 ? "" : "s") << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recurrent direct-RL portfolio allocation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file");
    sub->add_option("--set", overrides, "override: section.key=value");
    sub->allow_extras();  // bare key=value overrides
  };

  CLI::App* ingest = app.add_subcommand("ingest", "validate data, build features");
  add_common(ingest);
  std::string data_csv;
  ingest->add_option("--data", data_csv, "OHLCV csv (overrides data.csv)");

  CLI::App* train_cmd = app.add_subcommand("train", "train the policy");
  add_common(train_cmd);
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs, tau, batch_size, pool, basket_size;
  std::optional<double> lr, turnover_cap;
  train_cmd->add_option("--seed", seed, "root seed");
  train_cmd->add_option("--epochs", epochs, "training epochs");
  train_cmd->add_option("--tau", tau, "recurrence truncation depth");
  train_cmd->add_option("--lr", lr, "learning rate");
  train_cmd->add_option("--batch-size", batch_size, "episodes per update");
  train_cmd->add_option("--pool", pool, "stock pool size (selection)");
  train_cmd->add_option("--basket-size", basket_size, "selected stocks k");
  train_cmd->add_option("--turnover-cap", turnover_cap,
                        "max basket fraction replaced per day");

  CLI::App* backtest_cmd =
      app.add_subcommand("backtest", "roll a frozen policy over the test range");
  add_common(backtest_cmd);
  std::string checkpoint_path, baseline;
  backtest_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file");
  backtest_cmd->add_option("--baseline", baseline, "buy-and-hold ticker");
  backtest_cmd->add_option("--pool", pool, "stock pool size (selection)");
  backtest_cmd->add_option("--basket-size", basket_size, "selected stocks k");
  backtest_cmd->add_option("--turnover-cap", turnover_cap,
                           "max basket fraction replaced per day");

  CLI::App* report_cmd =
      app.add_subcommand("report", "emit plot-ready csv series from reports");
  add_common(report_cmd);
  std::vector<std::string> report_files;
  report_cmd->add_option("reports", report_files, "backtest report json files");

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.get_subcommands().front();
  for (const auto& extra : active->remaining()) overrides.push_back(extra);

  const int failure_code = active == ingest      ? kExitData
                           : active == train_cmd ? kExitTrain
                           : active == backtest_cmd
                               ? kExitBacktest
                               : kExitReport;

  return run_guarded(failure_code, [&] {
    RunConfig cfg = make_config(config_path, overrides);
    if (!data_csv.empty()) cfg.data_csv = data_csv;
    if (seed) cfg.seed = *seed;
    if (epochs) cfg.train.epochs = *epochs;
    if (tau) cfg.train.truncation_depth = *tau;
    if (lr) cfg.train.learning_rate = *lr;
    if (batch_size) cfg.train.batch_size = *batch_size;
    if (pool) {
      cfg.pool_size = *pool;
      cfg.selection_enabled = true;
    }
    if (basket_size) cfg.selection.basket_size = *basket_size;
    if (turnover_cap) cfg.selection.turnover_cap = *turnover_cap;

    if (active == ingest) {
      cmd_ingest(cfg);
    } else if (active == train_cmd) {
      cmd_train(cfg);
    } else if (active == backtest_cmd) {
      cmd_backtest(cfg, checkpoint_path);
    } else {
      cmd_report(cfg, report_files);
    }
  });
}
