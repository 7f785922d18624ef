#include "rdnn/training.hpp"

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "rdnn/errors.hpp"

namespace rdnn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(Errc::ShapeMismatch, "learning rate <= 0");
  if (batch_size < 1) fail(Errc::ShapeMismatch, "batch size < 1");
  if (epochs < 0) fail(Errc::ShapeMismatch, "negative epoch count");
  if (truncation_depth < 1) fail(Errc::ShapeMismatch, "truncation depth < 1");
  if (episode_length < 1) fail(Errc::ShapeMismatch, "episode length < 1");
}

Eigen::VectorXd Episode::gross(int t) const {
  Eigen::VectorXd g(num_stocks() + 1);
  g(0) = env.bond_gross();
  for (int a = 0; a < num_stocks(); ++a) {
    g(a + 1) = prices(t + 1, a) / prices(t, a);
  }
  return g;
}

Episode make_episode(const FeatureMatrix& features, const PriceHistory& history,
                     const EnvConfig& env, std::size_t start, int steps) {
  if (steps < 1) fail(Errc::EmptySlice, "episode needs at least one step");
  const std::size_t offset = calendar_offset(history, features);
  // decision days start .. start+steps-1, close prices through start+steps
  if (start + static_cast<std::size_t>(steps) >= features.num_days()) {
    fail(Errc::InsufficientData, "episode window past feature calendar");
  }
  if (offset + start + static_cast<std::size_t>(steps) >= history.num_days()) {
    fail(Errc::InsufficientData, "episode window past price calendar");
  }
  Episode ep;
  ep.env = env;
  ep.features = features.values.middleRows(start, steps);
  ep.prices.resize(steps + 1, history.num_assets());
  for (int t = 0; t <= steps; ++t) {
    for (std::size_t a = 0; a < history.num_assets(); ++a) {
      ep.prices(t, a) = history.close[a][offset + start + t];
    }
  }
  return ep;
}

namespace {

// sign with the zero-turnover subgradient pinned to 0
inline double sgn0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void eval_weight_actions(const Episode& ep, const std::vector<Action>& actions,
                         bool with_partials, ActionEval& out) {
  const int T = ep.steps();
  const int m = ep.num_stocks();
  const double delta = ep.env.commission_rate;
  Eigen::VectorXd prev = PortfolioWeights::all_bond(m).values;
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd g = ep.gross(t);
    const Eigen::VectorXd& w = actions[t].values;
    const double drift_total = prev.dot(g);
    const Eigen::VectorXd drifted = prev.cwiseProduct(g) / drift_total;
    const double growth = w.dot(g);
    double turnover = 0.0;
    Eigen::VectorXd sgn = Eigen::VectorXd::Zero(m + 1);
    for (int i = 1; i <= m; ++i) {
      const double d = w(i) - drifted(i);
      turnover += std::abs(d);
      sgn(i) = sgn0(d);
    }
    const double cost = delta * turnover;
    out.returns.push_back(growth * (1.0 - cost) - 1.0);

    if (with_partials) {
      // R = growth * (1 - delta * sum_i |w_i - drifted_i|)
      out.d_action.push_back(g * (1.0 - cost) - (growth * delta) * sgn);
      const double q = sgn.dot(drifted);
      Eigen::VectorXd d_prev(m + 1);
      for (int j = 0; j <= m; ++j) {
        d_prev(j) = growth * delta * (g(j) / drift_total) * (sgn(j) - q);
      }
      out.d_prev_action.push_back(std::move(d_prev));
    }
    prev = w;
  }
}

void eval_share_actions(const Episode& ep, const std::vector<Action>& actions,
                        bool with_partials, ActionEval& out) {
  const int T = ep.steps();
  const int m = ep.num_stocks();
  const double delta = ep.env.commission_rate;
  const double w0 = ep.env.initial_wealth;
  const double rf = ep.env.risk_free_rate;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(m);
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd& s = actions[t].values;
    double pnl = rf * w0;
    Eigen::VectorXd d_s(m), d_prev(m);
    for (int i = 0; i < m; ++i) {
      const double p_entry = ep.prices(t, i);
      const double p_exit = ep.prices(t + 1, i);
      const double edge = p_exit - (1.0 + rf) * p_entry;
      const double ds = s(i) - prev(i);
      pnl += s(i) * edge - delta * std::abs(ds) * p_entry;
      if (with_partials) {
        d_s(i) = (edge - delta * sgn0(ds) * p_entry) / w0;
        d_prev(i) = delta * sgn0(ds) * p_entry / w0;
      }
    }
    out.returns.push_back(pnl / w0);
    if (with_partials) {
      out.d_action.push_back(std::move(d_s));
      out.d_prev_action.push_back(std::move(d_prev));
    }
    prev = s;
  }
}

}  // namespace

ActionEval evaluate_actions(const Episode& episode,
                            const std::vector<Action>& actions,
                            bool with_partials) {
  if (actions.size() != static_cast<std::size_t>(episode.steps())) {
    fail(Errc::LengthMismatch, "actions vs episode steps");
  }
  if (actions.empty()) fail(Errc::EmptySlice, "evaluate_actions");
  ActionEval out;
  if (actions[0].mode == PolicyMode::WeightHead) {
    eval_weight_actions(episode, actions, with_partials, out);
  } else {
    eval_share_actions(episode, actions, with_partials, out);
  }
  return out;
}

std::vector<double> utility_gradient(const std::vector<double>& returns,
                                     UtilityKind kind) {
  if (returns.empty()) fail(Errc::EmptyReturns, "utility_gradient");
  const std::size_t n = returns.size();
  std::vector<double> grad(n);
  if (kind == UtilityKind::CumulativeLogReturn) {
    for (std::size_t t = 0; t < n; ++t) {
      if (!(1.0 + returns[t] > 0.0)) fail(Errc::LogOfNonPositive, "gradient");
      grad[t] = 1.0 / (1.0 + returns[t]);
    }
    return grad;
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(n);
  double sd = 0.0;
  if (n >= 2) {
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  const double denom = sd + kSharpeEpsilon;
  for (std::size_t t = 0; t < n; ++t) {
    double d_sd = 0.0;
    if (sd > 0.0 && n >= 2) {
      d_sd = (returns[t] - mean) / (static_cast<double>(n - 1) * sd);
    }
    grad[t] = 1.0 / (static_cast<double>(n) * denom) -
              mean * d_sd / (denom * denom);
  }
  return grad;
}

namespace {

// Backpropagates an action-space gradient through one cached step,
// accumulating parameter gradients; returns the gradient w.r.t. the
// previous action.
Eigen::VectorXd backward_step(const StepCache& cache,
                              const PolicyParameters& params,
                              const PolicyConfig& cfg,
                              const Eigen::VectorXd& g_action, Gradient& grad) {
  const Eigen::Index out = cache.z3.size();
  Eigen::VectorXd gz3(out);
  if (cfg.mode == PolicyMode::WeightHead) {
    if (cfg.output_activation == OutputActivation::SigmoidNormalized) {
      // w = y / sum(y), y = sigmoid(z3)
      const double dot = g_action.dot(cache.action);
      for (Eigen::Index j = 0; j < out; ++j) {
        const double dy = cache.head(j) * (1.0 - cache.head(j));
        gz3(j) = dy / cache.head_sum * (g_action(j) - dot);
      }
    } else {
      const double dot = g_action.dot(cache.action);
      for (Eigen::Index j = 0; j < out; ++j) {
        gz3(j) = cache.action(j) * (g_action(j) - dot);
      }
    }
  } else {
    // s = max(0, max_shares * tanh(z3)); the clamp zeroes the inactive side
    for (Eigen::Index j = 0; j < out; ++j) {
      const double raw = cfg.max_shares * cache.head(j);
      gz3(j) = raw > 0.0 ? g_action(j) * cfg.max_shares *
                               (1.0 - cache.head(j) * cache.head(j))
                         : 0.0;
    }
  }

  grad.layer3.a += cache.h2 * gz3.transpose();
  grad.layer3.b += gz3;
  Eigen::VectorXd gh2 = params.layer3.a * gz3;

  Eigen::VectorXd gz2(cache.z2.size());
  for (Eigen::Index j = 0; j < cache.z2.size(); ++j) {
    gz2(j) = cache.z2(j) > 0.0 ? gh2(j) * cache.mask2(j) : 0.0;
  }
  grad.layer2.a += cache.h1 * gz2.transpose();
  grad.layer2.b += gz2;
  Eigen::VectorXd gh1 = params.layer2.a * gz2;

  Eigen::VectorXd gz1(cache.z1.size());
  for (Eigen::Index j = 0; j < cache.z1.size(); ++j) {
    gz1(j) = cache.z1(j) > 0.0 ? gh1(j) * cache.mask1(j) : 0.0;
  }
  grad.layer1.a += cache.input * gz1.transpose();
  grad.layer1.b += gz1;
  grad.layer1.u += cache.feedback * gz1.transpose();

  Eigen::VectorXd g_feedback = params.layer1.u * gz1;
  if (cfg.mode == PolicyMode::ShareHead) g_feedback /= cfg.max_shares;
  return g_feedback;
}

}  // namespace

BpttResult bptt_gradient(const Episode& episode, const PolicyParameters& params,
                         const PolicyConfig& policy_cfg,
                         const TrainConfig& train_cfg,
                         DropoutSampler* dropout) {
  params.validate();
  train_cfg.validate();
  const int T = episode.steps();
  if (T < 1) fail(Errc::EmptySlice, "bptt over empty episode");

  SequenceResult seq =
      forward_sequence(episode.features, params, policy_cfg, dropout, true);
  ActionEval eval = evaluate_actions(episode, seq.actions, true);
  const std::vector<double> du = utility_gradient(eval.returns, train_cfg.utility);

  BpttResult result;
  result.gradient = zeros_like(params);
  result.returns = eval.returns;
  result.utility_value = utility(eval.returns, train_cfg.utility);

  const int tau = train_cfg.truncation_depth;
  for (int t = 0; t < T; ++t) {
    // utility signal arriving at action t: its own period plus the drift
    // coupling into the next period
    Eigen::VectorXd source = du[t] * eval.d_action[t];
    if (t + 1 < T) source += du[t + 1] * eval.d_prev_action[t + 1];

    Eigen::VectorXd carried = std::move(source);
    for (int k = 0; k < tau && t - k >= 0; ++k) {
      carried = backward_step(seq.caches[t - k], params, policy_cfg, carried,
                              result.gradient);
    }
  }

  bool finite = true;
  for_each_param(result.gradient,
                 [&](double v) { finite = finite && std::isfinite(v); });
  if (!finite) fail(Errc::NonFiniteGradient, "bptt");
  return result;
}

Gradient finite_diff_gradient(const Episode& episode,
                              const PolicyParameters& params,
                              const PolicyConfig& policy_cfg,
                              UtilityKind utility_kind, double eps) {
  auto eval_utility = [&](const PolicyParameters& p) {
    SequenceResult seq =
        forward_sequence(episode.features, p, policy_cfg, nullptr, false);
    ActionEval ev = evaluate_actions(episode, seq.actions, false);
    return utility(ev.returns, utility_kind);
  };

  Gradient grad = zeros_like(params);
  PolicyParameters work = params;
  const std::size_t n = param_count(params);
  for (std::size_t i = 0; i < n; ++i) {
    double* slot = param_at(work, i);
    const double original = *slot;
    *slot = original + eps;
    const double up = eval_utility(work);
    *slot = original - eps;
    const double down = eval_utility(work);
    *slot = original;
    *param_at(grad, i) = (up - down) / (2.0 * eps);
  }
  return grad;
}

PolicyParameters sgd_step(const PolicyParameters& params, const Gradient& grad,
                          double learning_rate, std::optional<double> clip) {
  if (param_count(params) != param_count(grad)) {
    fail(Errc::ShapeMismatch, "sgd_step");
  }
  PolicyParameters next = params;
  double scale = learning_rate;
  if (clip) {
    const double norm = param_norm(grad);
    if (norm > *clip && norm > 0.0) scale *= *clip / norm;
  }
  axpy(scale, grad, next);
  return next;
}

std::string train_report_to_json(const TrainReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["epoch"] = report.epoch;
  j["utility"] = report.utility;
  j["grad_norm"] = report.grad_norm;
  return j.dump(2) + "\n";
}

TrainResult train_from(PolicyParameters params, const FeatureMatrix& features,
                       const PriceHistory& history,
                       const PolicyConfig& policy_cfg, const EnvConfig& env_cfg,
                       const TrainConfig& train_cfg) {
  train_cfg.validate();
  env_cfg.validate();
  params.validate();
  const int T = train_cfg.episode_length;
  const std::size_t days = features.num_days();
  if (days < static_cast<std::size_t>(T) + 1) {
    fail(Errc::InsufficientData,
         "need " + std::to_string(T + 1) + " feature days, have " +
             std::to_string(days));
  }
  const std::size_t num_starts = days - static_cast<std::size_t>(T);

  std::mt19937_64 rng(train_cfg.seed);
  std::uniform_int_distribution<std::size_t> start_dist(0, num_starts - 1);

  TrainResult out;
  out.report.epoch.reserve(train_cfg.epochs);
  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Gradient sum = zeros_like(params);
    double utility_sum = 0.0;
    for (int b = 0; b < train_cfg.batch_size; ++b) {
      const std::size_t start = start_dist(rng);
      Episode ep = make_episode(features, history, env_cfg, start, T);
      DropoutSampler sampler(policy_cfg.dropout_rate, rng());
      DropoutSampler* dropout =
          policy_cfg.dropout_rate > 0.0 ? &sampler : nullptr;
      BpttResult r = bptt_gradient(ep, params, policy_cfg, train_cfg, dropout);
      axpy(1.0, r.gradient, sum);
      utility_sum += r.utility_value;
    }
    Gradient avg = zeros_like(params);
    axpy(1.0 / train_cfg.batch_size, sum, avg);
    params = sgd_step(params, avg, train_cfg.learning_rate,
                      train_cfg.gradient_clip);
    const auto t1 = std::chrono::steady_clock::now();
    out.report.epoch.push_back(epoch);
    out.report.utility.push_back(utility_sum / train_cfg.batch_size);
    out.report.grad_norm.push_back(param_norm(avg));
    out.report.wall_time_sec.push_back(
        std::chrono::duration<double>(t1 - t0).count());
  }
  out.params = std::move(params);
  return out;
}

TrainResult train(const FeatureMatrix& features, const PriceHistory& history,
                  const PolicyConfig& policy_cfg, const EnvConfig& env_cfg,
                  const TrainConfig& train_cfg) {
  PolicyParameters params =
      init_params(policy_cfg, static_cast<int>(features.dim()),
                  env_cfg.num_stocks + 1);
  return train_from(std::move(params), features, history, policy_cfg, env_cfg,
                    train_cfg);
}

}  // namespace rdnn
