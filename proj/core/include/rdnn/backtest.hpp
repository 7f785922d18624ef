#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdnn/checkpoint.hpp"
#include "rdnn/env.hpp"
#include "rdnn/market_data.hpp"
#include "rdnn/selection.hpp"

namespace rdnn {

struct BacktestSummary {
  double final_wealth = 0.0;
  double total_return = 0.0;
  double sharpe = 0.0;
  double max_drawdown = 0.0;
  double baseline_final_wealth = 0.0;
  double outperformance = 0.0;  // agent final wealth - baseline final wealth
};

// All series share the test calendar. Day 0 is the episode start: equity
// W_0, zero leverage/turnover/commission.
struct BacktestReport {
  std::vector<std::string> calendar;
  std::vector<double> equity;
  std::vector<double> baseline_equity;
  std::vector<double> leverage;
  std::vector<double> turnover;
  std::vector<double> commission;
  std::string baseline_ticker;
  BacktestSummary summary;
};

double max_drawdown(const std::vector<double>& equity);

// Rolls a frozen policy over the feature days [first_day, last_day]
// (indices into features.calendar; the last day settles the final step) and
// compares against buying and holding `baseline_ticker`.
BacktestReport run_backtest(const PriceHistory& history,
                            const FeatureMatrix& features,
                            const Checkpoint& checkpoint,
                            const EnvConfig& env_cfg,
                            const std::string& baseline_ticker,
                            std::size_t first_day, std::size_t last_day);

struct SelectionBacktest {
  BacktestReport report;
  std::vector<JointDay> days;  // per-decision-day basket and scores
};

// Same, with the mask network choosing a basket from the stock pool each
// day and the actor allocating within it.
SelectionBacktest run_selection_backtest(
    const PriceHistory& history, const FeatureMatrix& features,
    const Checkpoint& checkpoint, const MaskParameters& mask_params,
    const SelectionConfig& selection, const EnvConfig& env_cfg,
    const std::string& baseline_ticker, std::size_t first_day,
    std::size_t last_day);

std::string backtest_report_to_json(const BacktestReport& report);
BacktestReport backtest_report_from_json(const std::string& text);

// `date,ticker,selected,score` rows for every pool stock and decision day.
std::string basket_trace_to_csv(const std::vector<std::string>& calendar,
                                const std::vector<std::string>& tickers,
                                const std::vector<JointDay>& days);

}  // namespace rdnn
