#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rdnn/env.hpp"
#include "rdnn/policy.hpp"

namespace rdnn {

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 64;
  int epochs = 0;
  int truncation_depth = 5;  // steps of recurrence kept when unrolling
  UtilityKind utility = UtilityKind::CumulativeLogReturn;
  int episode_length = 60;  // trading steps per sampled episode
  std::uint64_t seed = 0;
  std::optional<double> gradient_clip;  // max gradient norm

  void validate() const;
};

// Parameter-shaped gradient tree.
using Gradient = PolicyParameters;

// One training episode: feature rows for the T decision days plus the close
// prices spanning the T held periods.
struct Episode {
  Eigen::MatrixXd features;  // T x feature_dim
  Eigen::MatrixXd prices;    // (T+1) x m stock closes
  EnvConfig env;

  int steps() const { return static_cast<int>(features.rows()); }
  int num_stocks() const { return static_cast<int>(prices.cols()); }
  // gross return vector (bond first) for step t
  Eigen::VectorXd gross(int t) const;
};

// Slices an episode of `steps` trading steps starting at feature day
// `start`; requires price data one day past the last decision day.
Episode make_episode(const FeatureMatrix& features, const PriceHistory& history,
                     const EnvConfig& env, std::size_t start, int steps);

struct ActionEval {
  std::vector<double> returns;
  // partials of R_t w.r.t. the acting and previous action, kept only when
  // requested
  std::vector<Eigen::VectorXd> d_action;
  std::vector<Eigen::VectorXd> d_prev_action;
};

// Per-step portfolio returns realized by an action sequence. Weight actions
// follow the drift-and-rebalance wealth recursion; share actions earn price
// P&L minus commission on share changes against the reference capital.
ActionEval evaluate_actions(const Episode& episode,
                            const std::vector<Action>& actions,
                            bool with_partials = false);

// dU/dR_t for the chosen utility.
std::vector<double> utility_gradient(const std::vector<double>& returns,
                                     UtilityKind kind);

struct BpttResult {
  Gradient gradient;
  double utility_value = 0.0;
  std::vector<double> returns;
};

// Gradient of the episode utility through the action-feedback recurrence.
// Each step's utility signal is pushed back through at most
// `truncation_depth` network stacks; with truncation_depth >= T this is the
// exact total derivative. Pass the sampler used for the forward pass to
// keep dropout masks fixed between forward and backward.
BpttResult bptt_gradient(const Episode& episode, const PolicyParameters& params,
                         const PolicyConfig& policy_cfg,
                         const TrainConfig& train_cfg,
                         DropoutSampler* dropout = nullptr);

// Central-difference oracle over the full (untruncated) recurrence, dropout
// disabled.
Gradient finite_diff_gradient(const Episode& episode,
                              const PolicyParameters& params,
                              const PolicyConfig& policy_cfg,
                              UtilityKind utility, double eps = 1e-5);

// theta <- theta + lr * grad (utility ascent), clipping the gradient to
// `clip` max-norm first when given.
PolicyParameters sgd_step(const PolicyParameters& params, const Gradient& grad,
                          double learning_rate,
                          std::optional<double> clip = std::nullopt);

struct TrainReport {
  std::vector<int> epoch;
  std::vector<double> utility;
  std::vector<double> grad_norm;
  std::vector<double> wall_time_sec;  // not serialized; timing is not stable
};

// JSON export with arrays `epoch`, `utility`, `grad_norm`.
std::string train_report_to_json(const TrainReport& report);

struct TrainResult {
  PolicyParameters params;
  TrainReport report;
};

// Batched utility ascent: per epoch, sample batch_size episode windows at
// seeded random start days, average their BPTT gradients and apply one
// update. Deterministic in cfg.seed.
TrainResult train(const FeatureMatrix& features, const PriceHistory& history,
                  const PolicyConfig& policy_cfg, const EnvConfig& env_cfg,
                  const TrainConfig& train_cfg);

// Same loop starting from explicit initial parameters (used by the CLI when
// resuming and by tests).
TrainResult train_from(PolicyParameters params, const FeatureMatrix& features,
                       const PriceHistory& history,
                       const PolicyConfig& policy_cfg, const EnvConfig& env_cfg,
                       const TrainConfig& train_cfg);

}  // namespace rdnn
