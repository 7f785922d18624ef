#pragma once

#include <Eigen/Core>
#include <vector>

#include "rdnn/market_data.hpp"

namespace rdnn {

// Long-only allocation over bond + m stocks. Index 0 is the bond; entries
// are non-negative and sum to 1 within kWeightSumTol.
struct PortfolioWeights {
  Eigen::VectorXd values;

  static constexpr double kWeightSumTol = 1e-9;

  PortfolioWeights() = default;
  explicit PortfolioWeights(Eigen::VectorXd v) : values(std::move(v)) {}

  // all wealth in the bond
  static PortfolioWeights all_bond(int num_stocks);

  int num_stocks() const { return static_cast<int>(values.size()) - 1; }
  double bond() const { return values(0); }

  bool is_valid(double tol = kWeightSumTol) const;
  void validate(double tol = kWeightSumTol) const;  // throws InvalidWeights
};

struct EnvConfig {
  double initial_wealth = 100000.0;
  double commission_rate = 0.0001;  // proportional cost per unit turnover
  double risk_free_rate = 0.0;      // per-day bond return
  int num_stocks = 1;

  double bond_gross() const { return 1.0 + risk_free_rate; }
  void validate() const;
};

struct PortfolioState {
  int day_index = 0;
  double wealth = 0.0;
  PortfolioWeights weights;            // post-rebalance, held over next period
  PortfolioWeights effective_weights;  // pre-rebalance drifted weights
  double last_return = 0.0;

  static PortfolioState initial(const EnvConfig& cfg);
};

enum class UtilityKind { CumulativeLogReturn, SharpeRatio };

// Weights the previous allocation drifts to after one period of price moves:
// w_i * g_i / sum_j w_j * g_j. Homogeneous of degree 0 in the gross returns.
PortfolioWeights effective_weights(const PortfolioWeights& prev,
                                   const Eigen::VectorXd& gross_returns);

struct StepResult {
  PortfolioState state;
  double period_return = 0.0;  // W' = W * (1 + period_return)
  double cost_fraction = 0.0;  // commission_rate * stock turnover
  double turnover = 0.0;       // sum_i |target_i - drifted_i| over stocks
};

// One rebalance-and-hold period. `gross_returns` covers this period (bond
// entry included); `target` earns those returns and the commission is
// charged against the drift of the previously held weights.
StepResult step(const EnvConfig& cfg, const PortfolioState& state,
                const PortfolioWeights& target,
                const Eigen::VectorXd& gross_returns);

struct EpisodeResult {
  std::vector<double> returns;     // R_t per step
  std::vector<double> wealth;      // length steps + 1, wealth[0] = W_0
  std::vector<double> cost_fraction;
  std::vector<double> turnover;
  std::vector<double> commission;  // dollars paid per step
  std::vector<double> leverage;    // stock fraction held during the step
  double final_wealth = 0.0;
};

// Runs the wealth recursion from an all-bond start through the given
// targets. history_first_day indexes the day whose close the first target
// is set at; step t uses gross returns close[t]/close[t-1].
EpisodeResult run_episode(const EnvConfig& cfg,
                          const std::vector<PortfolioWeights>& weight_sequence,
                          const PriceHistory& history,
                          std::size_t history_first_day = 0);

// Same recursion over a precomputed per-step gross-return sequence.
EpisodeResult run_episode_returns(
    const EnvConfig& cfg, const std::vector<PortfolioWeights>& weight_sequence,
    const std::vector<Eigen::VectorXd>& gross_sequence);

// Gross return vectors (bond first) for steps over
// [first_day, first_day + steps] of the history.
std::vector<Eigen::VectorXd> gross_return_sequence(const EnvConfig& cfg,
                                                   const PriceHistory& history,
                                                   std::size_t first_day,
                                                   std::size_t steps);

// Shares to trade when moving a position from w_prev to w_now of `wealth`
// at the given price.
double shares_delta(double wealth, double w_now, double w_prev, double price);

// CumulativeLogReturn: sum log(1 + R_t). SharpeRatio: mean / (sample std +
// 1e-12); a single return uses the epsilon denominator.
double utility(const std::vector<double>& returns, UtilityKind kind);

constexpr double kSharpeEpsilon = 1e-12;

// One-time full allocation into `asset` at day 0 (commission on the full
// notional), never rebalanced: equity_t = W_0 * (1 - delta) * P_t / P_0.
std::vector<double> buy_and_hold(const EnvConfig& cfg,
                                 const PriceHistory& history,
                                 const std::string& asset,
                                 std::size_t first_day = 0,
                                 std::size_t last_day = SIZE_MAX);

// Fraction of wealth in stocks, 1 - bond weight.
double gross_leverage(const PortfolioWeights& weights);

}  // namespace rdnn
