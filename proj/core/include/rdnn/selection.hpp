#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "rdnn/env.hpp"
#include "rdnn/policy.hpp"

namespace rdnn {

// Scoring network over the stock pool: shared per-stock two-layer net,
// feature vector -> hidden (relu) -> scalar score.
struct MaskParameters {
  Eigen::MatrixXd w1;  // per-stock feature dim x hidden
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;

  Eigen::Index feature_dim() const { return w1.rows(); }
  Eigen::Index hidden() const { return w1.cols(); }
  void validate() const;
};

MaskParameters init_mask_params(int feature_dim, int hidden,
                                std::uint64_t seed);

// One score per pool stock; rows of `pool_features` are per-stock feature
// vectors. Weight sharing makes the scores permutation-equivariant.
Eigen::VectorXd score_stocks(const Eigen::MatrixXd& pool_features,
                             const MaskParameters& params);

struct Basket {
  std::vector<int> selected;  // exactly k pool indices, ascending
  std::vector<int> retained;  // half kept for the next day (turnover mode)

  int size() const { return static_cast<int>(selected.size()); }
  std::vector<int> mask(int pool_size) const;  // 0/1 vector over the pool
  bool contains(int index) const;
};

// Indices of the k largest scores; ties break toward the lower index.
Basket top_k_mask(const Eigen::VectorXd& scores, int k);

// Zeroes the weights of unselected stocks and renormalizes the remaining
// entries (bond kept) to sum 1.
PortfolioWeights apply_mask(const PortfolioWeights& raw_action,
                            const Basket& basket, int pool_size);

// Keeps the top `retain` of the previous basket under today's scores and
// fills the rest with the best outsiders, so at most k - retain tickers
// change per day. retain < 0 selects the default k/2 (k must then be even).
Basket turnover_constrained_basket(const Eigen::VectorXd& scores,
                                   const Basket& prev, int k, int retain = -1);

enum class SelectionMode { Free, Turnover };

struct SelectionConfig {
  int basket_size = 20;       // k
  SelectionMode mode = SelectionMode::Free;
  int mask_hidden = 64;
  double turnover_cap = 0.5;  // max fraction of the basket replaced per day

  // tickers kept per day in turnover mode
  int retained_count() const;
};

struct JointDay {
  Basket basket;
  Eigen::VectorXd scores;
  PortfolioWeights weights;  // over bond + pool
};

// Per day: score the pool, form the basket, run the actor on the selected
// stocks' features and scatter its allocation back over the pool.
// `pool_features[t]` holds one row per pool stock.
std::vector<JointDay> joint_forward(
    const std::vector<Eigen::MatrixXd>& pool_features,
    const MaskParameters& mask_params, const PolicyParameters& actor_params,
    const PolicyConfig& actor_cfg, const SelectionConfig& cfg);

// Derivative-free mask-network update: seeded Gaussian perturbations of the
// parameters are kept when they improve the utility of the resulting
// weight sequence.
struct MaskTrainConfig {
  int iterations = 50;
  double step_sigma = 0.05;
  std::uint64_t seed = 0;
  UtilityKind utility = UtilityKind::CumulativeLogReturn;
};

struct MaskTrainResult {
  MaskParameters params;
  std::vector<double> utility;  // accepted utility per iteration
};

MaskTrainResult train_mask(
    const MaskParameters& initial,
    const std::vector<Eigen::MatrixXd>& pool_features,
    const std::vector<Eigen::VectorXd>& gross_sequence,
    const PolicyParameters& actor_params, const PolicyConfig& actor_cfg,
    const SelectionConfig& cfg, const EnvConfig& env,
    const MaskTrainConfig& train_cfg);

}  // namespace rdnn
