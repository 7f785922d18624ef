#include "rdnn/backtest.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "rdnn/errors.hpp"
#include "rdnn/io.hpp"
#include "rdnn/training.hpp"

namespace rdnn {

double max_drawdown(const std::vector<double>& equity) {
  double peak = 0.0;
  double worst = 0.0;
  for (double v : equity) {
    peak = std::max(peak, v);
    if (peak > 0.0) worst = std::max(worst, (peak - v) / peak);
  }
  return worst;
}

namespace {

void check_range(const FeatureMatrix& features, std::size_t first_day,
                 std::size_t last_day) {
  if (first_day >= last_day || last_day >= features.num_days()) {
    fail(Errc::CalendarMismatch,
         "need at least two feature days inside the test range");
  }
}

BacktestSummary summarize(const std::vector<double>& returns,
                          const std::vector<double>& equity,
                          double initial_wealth, double baseline_final) {
  BacktestSummary s;
  s.final_wealth = equity.back();
  s.total_return = s.final_wealth / initial_wealth - 1.0;
  s.sharpe = returns.empty() ? 0.0 : utility(returns, UtilityKind::SharpeRatio);
  s.max_drawdown = max_drawdown(equity);
  s.baseline_final_wealth = baseline_final;
  s.outperformance = s.final_wealth - baseline_final;
  return s;
}

// share-mode series: compounded wealth with leverage/turnover measured
// against the wealth entering each step
void share_mode_series(const Episode& ep, const std::vector<Action>& actions,
                       const std::vector<double>& returns,
                       BacktestReport& report) {
  const int m = ep.num_stocks();
  const double delta = ep.env.commission_rate;
  double wealth = ep.env.initial_wealth;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(m);
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const Eigen::VectorXd& s = actions[t].values;
    double stock_value = 0.0;
    double traded = 0.0;
    for (int i = 0; i < m; ++i) {
      stock_value += s(i) * ep.prices(t, i);
      traded += std::abs(s(i) - prev(i)) * ep.prices(t, i);
    }
    report.leverage.push_back(stock_value / wealth);
    report.turnover.push_back(traded / wealth);
    report.commission.push_back(delta * traded);
    wealth *= 1.0 + returns[t];
    report.equity.push_back(wealth);
    prev = s;
  }
}

}  // namespace

BacktestReport run_backtest(const PriceHistory& history,
                            const FeatureMatrix& features,
                            const Checkpoint& checkpoint,
                            const EnvConfig& env_cfg,
                            const std::string& baseline_ticker,
                            std::size_t first_day, std::size_t last_day) {
  check_range(features, first_day, last_day);
  if (checkpoint.feature_dim != features.dim()) {
    fail(Errc::ShapeMismatch, "checkpoint feature dim vs feature matrix");
  }
  if (checkpoint.num_assets != env_cfg.num_stocks + 1) {
    fail(Errc::ShapeMismatch, "checkpoint asset count vs environment");
  }
  const std::size_t offset = calendar_offset(history, features);
  const int steps = static_cast<int>(last_day - first_day);

  // frozen policy: evaluation mode, no dropout
  Episode ep = make_episode(features, history, env_cfg, first_day, steps);
  SequenceResult seq = forward_sequence(ep.features, checkpoint.params,
                                        checkpoint.policy, nullptr, false);

  BacktestReport report;
  report.calendar.assign(features.calendar.begin() + first_day,
                         features.calendar.begin() + last_day + 1);
  report.baseline_ticker = baseline_ticker;
  report.equity.push_back(env_cfg.initial_wealth);
  report.leverage.push_back(0.0);
  report.turnover.push_back(0.0);
  report.commission.push_back(0.0);

  std::vector<double> returns;
  if (checkpoint.policy.mode == PolicyMode::WeightHead) {
    std::vector<PortfolioWeights> weights;
    weights.reserve(seq.actions.size());
    for (const auto& a : seq.actions) weights.push_back(a.to_weights());
    EpisodeResult er = run_episode(env_cfg, weights, history, offset + first_day);
    returns = er.returns;
    report.equity.insert(report.equity.end(), er.wealth.begin() + 1,
                         er.wealth.end());
    report.leverage.insert(report.leverage.end(), er.leverage.begin(),
                           er.leverage.end());
    report.turnover.insert(report.turnover.end(), er.turnover.begin(),
                           er.turnover.end());
    report.commission.insert(report.commission.end(), er.commission.begin(),
                             er.commission.end());
  } else {
    ActionEval ev = evaluate_actions(ep, seq.actions, false);
    returns = ev.returns;
    share_mode_series(ep, seq.actions, returns, report);
  }

  const auto baseline = buy_and_hold(env_cfg, history, baseline_ticker,
                                     offset + first_day, offset + last_day);
  report.baseline_equity = baseline;
  report.summary = summarize(returns, report.equity, env_cfg.initial_wealth,
                             baseline.back());
  return report;
}

SelectionBacktest run_selection_backtest(
    const PriceHistory& history, const FeatureMatrix& features,
    const Checkpoint& checkpoint, const MaskParameters& mask_params,
    const SelectionConfig& selection, const EnvConfig& env_cfg,
    const std::string& baseline_ticker, std::size_t first_day,
    std::size_t last_day) {
  check_range(features, first_day, last_day);
  const std::size_t offset = calendar_offset(history, features);
  const std::size_t pool = history.num_assets();
  if (env_cfg.num_stocks != static_cast<int>(pool)) {
    fail(Errc::ShapeMismatch, "selection environment must span the pool");
  }
  const int steps = static_cast<int>(last_day - first_day);

  std::vector<Eigen::MatrixXd> pool_features;
  pool_features.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    pool_features.push_back(per_asset_features(features, first_day + t, pool));
  }
  SelectionBacktest out;
  out.days = joint_forward(pool_features, mask_params, checkpoint.params,
                           checkpoint.policy, selection);

  std::vector<PortfolioWeights> weights;
  weights.reserve(out.days.size());
  for (const auto& d : out.days) weights.push_back(d.weights);
  EpisodeResult er = run_episode(env_cfg, weights, history, offset + first_day);

  BacktestReport& report = out.report;
  report.calendar.assign(features.calendar.begin() + first_day,
                         features.calendar.begin() + last_day + 1);
  report.baseline_ticker = baseline_ticker;
  report.equity.push_back(env_cfg.initial_wealth);
  report.leverage.push_back(0.0);
  report.turnover.push_back(0.0);
  report.commission.push_back(0.0);
  report.equity.insert(report.equity.end(), er.wealth.begin() + 1,
                       er.wealth.end());
  report.leverage.insert(report.leverage.end(), er.leverage.begin(),
                         er.leverage.end());
  report.turnover.insert(report.turnover.end(), er.turnover.begin(),
                         er.turnover.end());
  report.commission.insert(report.commission.end(), er.commission.begin(),
                           er.commission.end());
  const auto baseline = buy_and_hold(env_cfg, history, baseline_ticker,
                                     offset + first_day, offset + last_day);
  report.baseline_equity = baseline;
  report.summary = summarize(er.returns, report.equity, env_cfg.initial_wealth,
                             baseline.back());
  return out;
}

std::string backtest_report_to_json(const BacktestReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["calendar"] = report.calendar;
  j["equity"] = report.equity;
  j["baseline_equity"] = report.baseline_equity;
  j["leverage"] = report.leverage;
  j["turnover"] = report.turnover;
  j["commission"] = report.commission;
  j["baseline_ticker"] = report.baseline_ticker;
  j["summary"] = {{"final_wealth", report.summary.final_wealth},
                  {"total_return", report.summary.total_return},
                  {"sharpe", report.summary.sharpe},
                  {"max_drawdown", report.summary.max_drawdown},
                  {"baseline_final_wealth", report.summary.baseline_final_wealth},
                  {"outperformance", report.summary.outperformance}};
  return j.dump(2) + "\n";
}

BacktestReport backtest_report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::IoError, std::string("report parse: ") + e.what());
  }
  if (j.value("schema_version", 0) != 1) {
    fail(Errc::ConfigError, "unsupported report schema_version");
  }
  BacktestReport r;
  r.calendar = j.at("calendar").get<std::vector<std::string>>();
  r.equity = j.at("equity").get<std::vector<double>>();
  r.baseline_equity = j.at("baseline_equity").get<std::vector<double>>();
  r.leverage = j.at("leverage").get<std::vector<double>>();
  r.turnover = j.at("turnover").get<std::vector<double>>();
  r.commission = j.at("commission").get<std::vector<double>>();
  r.baseline_ticker = j.at("baseline_ticker").get<std::string>();
  const auto& s = j.at("summary");
  r.summary.final_wealth = s.at("final_wealth").get<double>();
  r.summary.total_return = s.at("total_return").get<double>();
  r.summary.sharpe = s.at("sharpe").get<double>();
  r.summary.max_drawdown = s.at("max_drawdown").get<double>();
  r.summary.baseline_final_wealth = s.at("baseline_final_wealth").get<double>();
  r.summary.outperformance = s.at("outperformance").get<double>();
  return r;
}

std::string basket_trace_to_csv(const std::vector<std::string>& calendar,
                                const std::vector<std::string>& tickers,
                                const std::vector<JointDay>& days) {
  if (calendar.size() < days.size()) {
    fail(Errc::CalendarMismatch, "basket trace calendar too short");
  }
  std::string out = "date,ticker,selected,score\n";
  for (std::size_t t = 0; t < days.size(); ++t) {
    const auto mask = days[t].basket.mask(static_cast<int>(tickers.size()));
    for (std::size_t i = 0; i < tickers.size(); ++i) {
      out += calendar[t] + "," + tickers[i] + "," + std::to_string(mask[i]) +
             "," + format_double(days[t].scores(static_cast<Eigen::Index>(i))) +
             "\n";
    }
  }
  return out;
}

}  // namespace rdnn
