#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rdnn/env.hpp"

namespace rdnn {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// branch form keeps exp() argument non-positive
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

enum class PolicyMode { WeightHead, ShareHead };
enum class OutputActivation { SigmoidNormalized, Softmax };

struct PolicyConfig {
  PolicyMode mode = PolicyMode::WeightHead;
  double dropout_rate = 0.2;
  // recurrent width, dense width, nominal output width; the actual output
  // dimension follows the head and asset count
  std::array<int, 3> hidden_sizes = {128, 128, 64};
  OutputActivation output_activation = OutputActivation::SigmoidNormalized;
  double max_shares = 100.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd a;  // in x out
  Eigen::VectorXd b;  // out
};

struct RecurrentLayer {
  Eigen::MatrixXd a;  // feature_dim x h1
  Eigen::VectorXd b;  // h1
  Eigen::MatrixXd u;  // action_dim x h1, previous-action feedback
};

struct PolicyParameters {
  RecurrentLayer layer1;
  DenseLayer layer2;
  DenseLayer layer3;

  Eigen::Index feature_dim() const { return layer1.a.rows(); }
  Eigen::Index hidden1() const { return layer1.a.cols(); }
  Eigen::Index hidden2() const { return layer2.a.cols(); }
  Eigen::Index action_dim() const { return layer1.u.rows(); }
  Eigen::Index output_dim() const { return layer3.a.cols(); }

  bool shapes_consistent() const;
  void validate() const;  // throws ShapeMismatch / NonFiniteGradient
};

// Dimensions of the action/feedback vector for a head over m+1 assets
// (bond + m stocks): the weight head emits m+1 weights, the share head m
// per-stock share counts.
int action_dim_for(PolicyMode mode, int num_assets);

// Xavier-uniform weights with zero biases; deterministic in cfg.seed.
PolicyParameters init_params(const PolicyConfig& cfg, int feature_dim,
                             int num_assets);

struct Action {
  PolicyMode mode = PolicyMode::WeightHead;
  Eigen::VectorXd values;

  PortfolioWeights to_weights() const;  // WeightHead only
};

// all-bond weights / zero shares, fed back at the first step
Action initial_action(const PolicyConfig& cfg, int num_assets);

// Everything the backward pass needs from one forward step.
struct StepCache {
  Eigen::VectorXd input;     // f_t
  Eigen::VectorXd feedback;  // scaled previous action fed into layer 1
  Eigen::VectorXd z1;
  Eigen::VectorXd h1;  // post-relu, post-dropout
  Eigen::VectorXd z2;
  Eigen::VectorXd h2;
  Eigen::VectorXd z3;
  Eigen::VectorXd head;  // sigmoid/softmax/tanh of z3 before normalization
  double head_sum = 0.0;
  Eigen::VectorXd mask1;  // dropout multipliers, ones when disabled
  Eigen::VectorXd mask2;
  Eigen::VectorXd action;
};

// Seeded source of inverted-dropout masks; absent means evaluation mode.
struct DropoutSampler {
  double rate = 0.0;
  std::mt19937_64 rng;

  DropoutSampler(double rate_, std::uint64_t seed) : rate(rate_), rng(seed) {}
  Eigen::VectorXd mask(Eigen::Index n);
};

Action forward(const Eigen::VectorXd& features, const Action& prev,
               const PolicyParameters& params, const PolicyConfig& cfg,
               DropoutSampler* dropout = nullptr, StepCache* cache = nullptr);

struct SequenceResult {
  std::vector<Action> actions;
  std::vector<StepCache> caches;
};

// Iterates forward over the rows of `features` with the previous action fed
// back; caches are retained for BPTT when `keep_caches` is set.
SequenceResult forward_sequence(const Eigen::MatrixXd& features,
                                const PolicyParameters& params,
                                const PolicyConfig& cfg,
                                DropoutSampler* dropout = nullptr,
                                bool keep_caches = true);

// --- parameter tree utilities ---

PolicyParameters zeros_like(const PolicyParameters& params);
std::size_t param_count(const PolicyParameters& params);
void for_each_param(PolicyParameters& params,
                    const std::function<void(double&)>& fn);
void for_each_param(const PolicyParameters& params,
                    const std::function<void(double)>& fn);
double* param_at(PolicyParameters& params, std::size_t flat_index);
// dst += scale * src
void axpy(double scale, const PolicyParameters& src, PolicyParameters& dst);
double param_norm(const PolicyParameters& params);

}  // namespace rdnn
