#include "rdnn/env.hpp"

#include <cmath>

#include "rdnn/errors.hpp"

namespace rdnn {

PortfolioWeights PortfolioWeights::all_bond(int num_stocks) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_stocks + 1);
  v(0) = 1.0;
  return PortfolioWeights(std::move(v));
}

bool PortfolioWeights::is_valid(double tol) const {
  if (values.size() < 1) return false;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values(i) >= 0.0) || !std::isfinite(values(i))) return false;
  }
  return std::abs(values.sum() - 1.0) <= tol;
}

void PortfolioWeights::validate(double tol) const {
  if (!is_valid(tol)) {
    fail(Errc::InvalidWeights,
         "entries must be >= 0 and sum to 1 within " + std::to_string(tol));
  }
}

void EnvConfig::validate() const {
  if (!(initial_wealth > 0.0)) fail(Errc::InvalidWeights, "initial wealth <= 0");
  if (commission_rate < 0.0 || commission_rate >= 1.0) {
    fail(Errc::InvalidWeights, "commission rate outside [0, 1)");
  }
  if (num_stocks < 1) fail(Errc::InvalidWeights, "need at least one stock");
  if (bond_gross() <= 0.0) fail(Errc::NonPositiveGrossReturn, "risk-free rate");
}

PortfolioState PortfolioState::initial(const EnvConfig& cfg) {
  PortfolioState s;
  s.day_index = 0;
  s.wealth = cfg.initial_wealth;
  s.weights = PortfolioWeights::all_bond(cfg.num_stocks);
  s.effective_weights = s.weights;
  s.last_return = 0.0;
  return s;
}

namespace {

void check_gross(const Eigen::VectorXd& gross) {
  for (Eigen::Index i = 0; i < gross.size(); ++i) {
    if (!(gross(i) > 0.0) || !std::isfinite(gross(i))) {
      fail(Errc::NonPositiveGrossReturn,
           "asset " + std::to_string(i) + " gross " + std::to_string(gross(i)));
    }
  }
}

}  // namespace

PortfolioWeights effective_weights(const PortfolioWeights& prev,
                                   const Eigen::VectorXd& gross_returns) {
  prev.validate();
  if (gross_returns.size() != prev.values.size()) {
    fail(Errc::LengthMismatch, "gross returns vs weights");
  }
  check_gross(gross_returns);
  Eigen::VectorXd drifted = prev.values.cwiseProduct(gross_returns);
  const double total = drifted.sum();
  return PortfolioWeights(drifted / total);
}

StepResult step(const EnvConfig& cfg, const PortfolioState& state,
                const PortfolioWeights& target,
                const Eigen::VectorXd& gross_returns) {
  target.validate();
  if (target.values.size() != state.weights.values.size()) {
    fail(Errc::InvalidWeights, "target dimension mismatch");
  }

  const PortfolioWeights drifted =
      effective_weights(state.weights, gross_returns);
  const double growth = target.values.dot(gross_returns);
  double turnover = 0.0;
  for (Eigen::Index i = 1; i < target.values.size(); ++i) {
    turnover += std::abs(target.values(i) - drifted.values(i));
  }
  const double cost_fraction = cfg.commission_rate * turnover;
  const double period_return = growth * (1.0 - cost_fraction) - 1.0;
  const double new_wealth = state.wealth * (1.0 + period_return);
  if (!(new_wealth > 0.0)) {
    fail(Errc::BankruptWealth, "wealth " + std::to_string(new_wealth));
  }

  StepResult r;
  r.state.day_index = state.day_index + 1;
  r.state.wealth = new_wealth;
  r.state.weights = target;
  r.state.effective_weights = drifted;
  r.state.last_return = period_return;
  r.period_return = period_return;
  r.cost_fraction = cost_fraction;
  r.turnover = turnover;
  return r;
}

EpisodeResult run_episode_returns(
    const EnvConfig& cfg, const std::vector<PortfolioWeights>& weight_sequence,
    const std::vector<Eigen::VectorXd>& gross_sequence) {
  cfg.validate();
  if (weight_sequence.size() != gross_sequence.size()) {
    fail(Errc::LengthMismatch, "weights vs gross returns");
  }
  EpisodeResult out;
  PortfolioState state = PortfolioState::initial(cfg);
  out.wealth.push_back(state.wealth);
  for (std::size_t t = 0; t < weight_sequence.size(); ++t) {
    const double pre_cost_wealth = state.wealth;
    StepResult r = step(cfg, state, weight_sequence[t], gross_sequence[t]);
    out.returns.push_back(r.period_return);
    out.wealth.push_back(r.state.wealth);
    out.cost_fraction.push_back(r.cost_fraction);
    out.turnover.push_back(r.turnover);
    const double growth = weight_sequence[t].values.dot(gross_sequence[t]);
    out.commission.push_back(pre_cost_wealth * growth * r.cost_fraction);
    out.leverage.push_back(gross_leverage(weight_sequence[t]));
    state = r.state;
  }
  out.final_wealth = state.wealth;
  return out;
}

std::vector<Eigen::VectorXd> gross_return_sequence(const EnvConfig& cfg,
                                                   const PriceHistory& history,
                                                   std::size_t first_day,
                                                   std::size_t steps) {
  if (history.num_assets() != static_cast<std::size_t>(cfg.num_stocks)) {
    fail(Errc::LengthMismatch, "history assets vs num_stocks");
  }
  // needs close prices at days first_day .. first_day + steps
  if (history.num_days() == 0 || first_day + steps > history.num_days() - 1) {
    fail(Errc::LengthMismatch, "history too short for episode");
  }
  std::vector<Eigen::VectorXd> gross(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Eigen::VectorXd g(cfg.num_stocks + 1);
    g(0) = cfg.bond_gross();
    const std::size_t d = first_day + t + 1;
    for (int a = 0; a < cfg.num_stocks; ++a) {
      g(a + 1) = history.close[a][d] / history.close[a][d - 1];
    }
    gross[t] = std::move(g);
  }
  return gross;
}

EpisodeResult run_episode(const EnvConfig& cfg,
                          const std::vector<PortfolioWeights>& weight_sequence,
                          const PriceHistory& history,
                          std::size_t history_first_day) {
  if (weight_sequence.empty()) {
    EpisodeResult out;
    cfg.validate();
    out.wealth.push_back(cfg.initial_wealth);
    out.final_wealth = cfg.initial_wealth;
    return out;
  }
  const auto gross = gross_return_sequence(cfg, history, history_first_day,
                                           weight_sequence.size());
  return run_episode_returns(cfg, weight_sequence, gross);
}

double shares_delta(double wealth, double w_now, double w_prev, double price) {
  if (!(price > 0.0)) fail(Errc::NonPositivePrice, std::to_string(price));
  return (wealth * w_now - wealth * w_prev) / price;
}

double utility(const std::vector<double>& returns, UtilityKind kind) {
  if (returns.empty()) fail(Errc::EmptyReturns, "utility");
  switch (kind) {
    case UtilityKind::CumulativeLogReturn: {
      double sum = 0.0;
      for (double r : returns) {
        if (!(1.0 + r > 0.0)) {
          fail(Errc::LogOfNonPositive, "1 + R = " + std::to_string(1.0 + r));
        }
        sum += std::log1p(r);
      }
      return sum;
    }
    case UtilityKind::SharpeRatio: {
      const std::size_t n = returns.size();
      double mean = 0.0;
      for (double r : returns) mean += r;
      mean /= static_cast<double>(n);
      double sd = 0.0;
      if (n >= 2) {
        double ss = 0.0;
        for (double r : returns) ss += (r - mean) * (r - mean);
        sd = std::sqrt(ss / static_cast<double>(n - 1));
      }
      return mean / (sd + kSharpeEpsilon);
    }
  }
  fail(Errc::InvalidWeights, "unknown utility kind");
}

std::vector<double> buy_and_hold(const EnvConfig& cfg,
                                 const PriceHistory& history,
                                 const std::string& asset,
                                 std::size_t first_day, std::size_t last_day) {
  const int a = history.asset_index(asset);
  if (a < 0) fail(Errc::UnknownAsset, asset);
  if (last_day == SIZE_MAX) last_day = history.num_days() - 1;
  if (first_day > last_day || last_day >= history.num_days()) {
    fail(Errc::LengthMismatch, "buy-and-hold day range");
  }
  const double p0 = history.close[a][first_day];
  std::vector<double> equity;
  equity.reserve(last_day - first_day + 1);
  for (std::size_t d = first_day; d <= last_day; ++d) {
    equity.push_back(cfg.initial_wealth * (1.0 - cfg.commission_rate) *
                     history.close[a][d] / p0);
  }
  return equity;
}

double gross_leverage(const PortfolioWeights& weights) {
  weights.validate();
  return 1.0 - weights.bond();
}

}  // namespace rdnn
