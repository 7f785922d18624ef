#include "rdnn/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rdnn/errors.hpp"

namespace rdnn {

void MaskParameters::validate() const {
  if (w1.cols() != b1.size() || w2.size() != b1.size()) {
    fail(Errc::ShapeMismatch, "mask parameter tree");
  }
  auto finite = [](const auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) {
      if (!std::isfinite(block.data()[i])) return false;
    }
    return true;
  };
  if (!finite(w1) || !finite(b1) || !finite(w2) || !std::isfinite(b2)) {
    fail(Errc::NonFiniteGradient, "non-finite mask parameter");
  }
}

MaskParameters init_mask_params(int feature_dim, int hidden,
                                std::uint64_t seed) {
  if (feature_dim < 1 || hidden < 1) fail(Errc::ShapeMismatch, "mask dims");
  std::mt19937_64 rng(seed);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-s, s);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    }
    return m;
  };
  MaskParameters p;
  p.w1 = draw(feature_dim, hidden);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = draw(hidden, 1).col(0);
  p.b2 = 0.0;
  return p;
}

Eigen::VectorXd score_stocks(const Eigen::MatrixXd& pool_features,
                             const MaskParameters& params) {
  params.validate();
  if (pool_features.rows() == 0) fail(Errc::PoolTooSmall, "empty pool");
  if (pool_features.cols() != params.feature_dim()) {
    fail(Errc::ShapeMismatch, "pool features vs mask network");
  }
  Eigen::VectorXd scores(pool_features.rows());
  for (Eigen::Index i = 0; i < pool_features.rows(); ++i) {
    Eigen::VectorXd h =
        (params.w1.transpose() * pool_features.row(i).transpose() + params.b1)
            .cwiseMax(0.0);
    scores(i) = params.w2.dot(h) + params.b2;
  }
  return scores;
}

std::vector<int> Basket::mask(int pool_size) const {
  std::vector<int> m(pool_size, 0);
  for (int i : selected) m[i] = 1;
  return m;
}

bool Basket::contains(int index) const {
  return std::binary_search(selected.begin(), selected.end(), index);
}

namespace {

// indices of the k best scores among `candidates`, ties toward lower index
std::vector<int> best_k(const Eigen::VectorXd& scores,
                        std::vector<int> candidates, int k) {
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  candidates.resize(k);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

}  // namespace

Basket top_k_mask(const Eigen::VectorXd& scores, int k) {
  const int pool = static_cast<int>(scores.size());
  if (k < 1 || k > pool) {
    fail(Errc::KTooLarge, "k=" + std::to_string(k) + " pool=" +
                              std::to_string(pool));
  }
  std::vector<int> all(pool);
  std::iota(all.begin(), all.end(), 0);
  Basket b;
  b.selected = best_k(scores, std::move(all), k);
  return b;
}

PortfolioWeights apply_mask(const PortfolioWeights& raw_action,
                            const Basket& basket, int pool_size) {
  raw_action.validate();
  if (raw_action.values.size() != pool_size + 1) {
    fail(Errc::ShapeMismatch, "raw action vs pool");
  }
  Eigen::VectorXd masked = Eigen::VectorXd::Zero(pool_size + 1);
  masked(0) = raw_action.values(0);
  for (int i : basket.selected) masked(i + 1) = raw_action.values(i + 1);
  const double total = masked.sum();
  if (!(total > 0.0)) {
    fail(Errc::DegenerateMask, "all selected weights and bond are zero");
  }
  return PortfolioWeights(masked / total);
}

int SelectionConfig::retained_count() const {
  const int replaced = std::max(
      0, std::min(basket_size,
                  static_cast<int>(std::lround(basket_size * turnover_cap))));
  return basket_size - replaced;
}

Basket turnover_constrained_basket(const Eigen::VectorXd& scores,
                                   const Basket& prev, int k, int retain) {
  const int pool = static_cast<int>(scores.size());
  if (retain < 0) {
    if (k % 2 != 0) fail(Errc::KTooLarge, "k must be even");
    retain = k / 2;
  }
  if (retain > k) fail(Errc::KTooLarge, "retain count exceeds basket");
  if (k > pool) fail(Errc::PoolTooSmall, "pool smaller than basket");
  if (prev.size() != k) fail(Errc::ShapeMismatch, "previous basket size");

  Basket next;
  next.retained = best_k(scores, prev.selected, retain);

  // remaining seats go to the best of everyone else, dropped insiders
  // included, so an unchanged ranking reproduces the free top-k basket
  std::vector<int> candidates;
  candidates.reserve(pool - retain);
  for (int i = 0; i < pool; ++i) {
    if (!std::binary_search(next.retained.begin(), next.retained.end(), i)) {
      candidates.push_back(i);
    }
  }
  std::vector<int> entrants = best_k(scores, std::move(candidates), k - retain);
  next.selected = next.retained;
  next.selected.insert(next.selected.end(), entrants.begin(), entrants.end());
  std::sort(next.selected.begin(), next.selected.end());
  return next;
}

std::vector<JointDay> joint_forward(
    const std::vector<Eigen::MatrixXd>& pool_features,
    const MaskParameters& mask_params, const PolicyParameters& actor_params,
    const PolicyConfig& actor_cfg, const SelectionConfig& cfg) {
  if (actor_cfg.mode != PolicyMode::WeightHead) {
    fail(Errc::ShapeMismatch, "selection requires the weight head");
  }
  if (pool_features.empty()) fail(Errc::EmptySlice, "joint_forward");
  const int pool = static_cast<int>(pool_features[0].rows());
  const int k = cfg.basket_size;
  if (k > pool) fail(Errc::PoolTooSmall, "basket larger than pool");
  const Eigen::Index per_stock = pool_features[0].cols();
  if (actor_params.feature_dim() != k * per_stock ||
      actor_params.output_dim() != k + 1) {
    fail(Errc::ShapeMismatch, "actor network vs basket size");
  }

  std::vector<JointDay> out;
  out.reserve(pool_features.size());
  Eigen::VectorXd prev_pool_weights = Eigen::VectorXd::Zero(pool + 1);
  prev_pool_weights(0) = 1.0;
  Basket prev_basket;

  for (std::size_t t = 0; t < pool_features.size(); ++t) {
    const Eigen::MatrixXd& day = pool_features[t];
    if (day.rows() != pool || day.cols() != per_stock) {
      fail(Errc::ShapeMismatch, "pool features change shape");
    }
    JointDay jd;
    jd.scores = score_stocks(day, mask_params);
    if (cfg.mode == SelectionMode::Turnover && t > 0) {
      jd.basket = turnover_constrained_basket(jd.scores, prev_basket, k,
                                              cfg.retained_count());
    } else {
      jd.basket = top_k_mask(jd.scores, k);
    }

    // actor slots are ordered by score rank, which keeps the computation
    // equivariant under pool permutations and gives slots a stable meaning
    std::vector<int> slot_order = jd.basket.selected;
    std::sort(slot_order.begin(), slot_order.end(), [&](int a, int b) {
      if (jd.scores(a) != jd.scores(b)) return jd.scores(a) > jd.scores(b);
      return a < b;
    });

    Eigen::VectorXd actor_input(k * per_stock);
    Action prev_action;
    prev_action.mode = PolicyMode::WeightHead;
    prev_action.values = Eigen::VectorXd::Zero(k + 1);
    prev_action.values(0) = prev_pool_weights(0);
    for (int j = 0; j < k; ++j) {
      const int stock = slot_order[j];
      actor_input.segment(j * per_stock, per_stock) = day.row(stock);
      prev_action.values(j + 1) = prev_pool_weights(stock + 1);
    }

    Action slots =
        forward(actor_input, prev_action, actor_params, actor_cfg, nullptr);
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(pool + 1);
    raw(0) = slots.values(0);
    for (int j = 0; j < k; ++j) {
      raw(slot_order[j] + 1) = slots.values(j + 1);
    }
    // slot weights already sum to 1 but scattered entries can lose mass to
    // rounding; apply_mask renormalizes and enforces the zero pattern
    jd.weights = apply_mask(PortfolioWeights(raw / raw.sum()), jd.basket, pool);

    prev_pool_weights = jd.weights.values;
    prev_basket = jd.basket;
    out.push_back(std::move(jd));
  }
  return out;
}

MaskTrainResult train_mask(
    const MaskParameters& initial,
    const std::vector<Eigen::MatrixXd>& pool_features,
    const std::vector<Eigen::VectorXd>& gross_sequence,
    const PolicyParameters& actor_params, const PolicyConfig& actor_cfg,
    const SelectionConfig& cfg, const EnvConfig& env,
    const MaskTrainConfig& train_cfg) {
  if (gross_sequence.size() != pool_features.size()) {
    fail(Errc::LengthMismatch, "pool features vs gross returns");
  }
  auto evaluate = [&](const MaskParameters& p) {
    const auto days = joint_forward(pool_features, p, actor_params, actor_cfg, cfg);
    std::vector<PortfolioWeights> weights;
    weights.reserve(days.size());
    for (const auto& d : days) weights.push_back(d.weights);
    const EpisodeResult ep = run_episode_returns(env, weights, gross_sequence);
    return utility(ep.returns, train_cfg.utility);
  };

  MaskTrainResult out;
  out.params = initial;
  double current = evaluate(out.params);
  std::mt19937_64 rng(train_cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  for (int it = 0; it < train_cfg.iterations; ++it) {
    MaskParameters candidate = out.params;
    auto perturb = [&](auto& block) {
      for (Eigen::Index i = 0; i < block.size(); ++i) {
        block.data()[i] += train_cfg.step_sigma * noise(rng);
      }
    };
    perturb(candidate.w1);
    perturb(candidate.b1);
    perturb(candidate.w2);
    candidate.b2 += train_cfg.step_sigma * noise(rng);

    const double trial = evaluate(candidate);
    if (trial > current) {
      out.params = std::move(candidate);
      current = trial;
    }
    out.utility.push_back(current);
  }
  return out;
}

}  // namespace rdnn
