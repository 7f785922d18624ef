#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "rdnn/errors.hpp"
#include "rdnn/selection.hpp"

using namespace rdnn;

namespace {

Eigen::VectorXd scores_of(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

// full-sort oracle with the same tie rule (higher score first, then lower
// index), evaluated without partial selection
std::vector<int> sort_oracle(const Eigen::VectorXd& scores, int k) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return scores(a) > scores(b);
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TEST_CASE("identical features produce identical scores") {
  const MaskParameters p = init_mask_params(4, 8, 3);
  Eigen::MatrixXd pool(3, 4);
  pool.row(0) << 0.1, -0.2, 0.3, 1.0;
  pool.row(1) << 0.1, -0.2, 0.3, 1.0;
  pool.row(2) << 2.0, 0.0, -1.0, 0.5;
  const auto s = score_stocks(pool, p);
  CHECK(s(0) == s(1));
  CHECK(s(0) != s(2));
}

TEST_CASE("zero parameters score every stock equally") {
  MaskParameters p = init_mask_params(4, 8, 3);
  p.w1.setZero();
  p.b1.setZero();
  p.w2.setZero();
  p.b2 = 0.0;
  Eigen::MatrixXd pool = Eigen::MatrixXd::Random(5, 4);
  const auto s = score_stocks(pool, p);
  for (Eigen::Index i = 1; i < s.size(); ++i) CHECK(s(i) == s(0));
}

TEST_CASE("scores equal a direct dense evaluation") {
  const MaskParameters p = init_mask_params(5, 7, 9);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd pool(6, 5);
  for (Eigen::Index i = 0; i < pool.size(); ++i) pool.data()[i] = n01(rng);
  const auto s = score_stocks(pool, p);
  for (Eigen::Index i = 0; i < pool.rows(); ++i) {
    double expect = p.b2;
    for (Eigen::Index hidden = 0; hidden < p.hidden(); ++hidden) {
      double z = p.b1(hidden);
      for (Eigen::Index f = 0; f < 5; ++f) z += pool(i, f) * p.w1(f, hidden);
      expect += p.w2(hidden) * std::max(0.0, z);
    }
    CHECK(s(i) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("top_k_mask picks the largest scores with index tie-breaks") {
  const auto b = top_k_mask(scores_of({0.9, 0.1, 0.5, 0.7}), 2);
  CHECK(b.selected == std::vector<int>{0, 3});
  CHECK(b.mask(4) == std::vector<int>{1, 0, 0, 1});

  const auto all = top_k_mask(scores_of({1.0, 2.0, 3.0}), 3);
  CHECK(all.selected == std::vector<int>{0, 1, 2});

  const auto tied = top_k_mask(scores_of({5.0, 5.0, 5.0, 5.0}), 2);
  CHECK(tied.selected == std::vector<int>{0, 1});

  CHECK_THROWS_AS(top_k_mask(scores_of({1.0}), 2), Error);
}

TEST_CASE("top_k_mask agrees with a full-sort oracle, ties included") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> pool_dist(2, 40);
  std::uniform_int_distribution<int> level_dist(1, 6);
  for (int rep = 0; rep < 1500; ++rep) {
    const int pool = pool_dist(rng);
    std::uniform_int_distribution<int> k_dist(1, pool);
    const int k = k_dist(rng);
    Eigen::VectorXd scores(pool);
    // few discrete levels force ties
    const int levels = level_dist(rng);
    for (int i = 0; i < pool; ++i) {
      scores(i) = static_cast<double>(
          std::uniform_int_distribution<int>(0, levels)(rng));
    }
    CHECK(top_k_mask(scores, k).selected == sort_oracle(scores, k));
  }
}

TEST_CASE("apply_mask keeps the bond and renormalizes") {
  Basket b;
  b.selected = {0, 1};
  Eigen::VectorXd raw(5);
  raw << 0.2, 0.2, 0.2, 0.2, 0.2;
  const auto w = apply_mask(PortfolioWeights(raw), b, 4);
  CHECK(w.values(0) == doctest::Approx(1.0 / 3));
  CHECK(w.values(1) == doctest::Approx(1.0 / 3));
  CHECK(w.values(2) == doctest::Approx(1.0 / 3));
  CHECK(w.values(3) == 0.0);
  CHECK(w.values(4) == 0.0);

  Basket all;
  all.selected = {0, 1, 2, 3};
  const auto same = apply_mask(PortfolioWeights(raw), all, 4);
  CHECK((same.values - raw).cwiseAbs().maxCoeff() < 1e-15);

  // weight pinned on a masked-out stock flows to bond + survivors
  Eigen::VectorXd lopsided(5);
  lopsided << 0.3, 0.0, 0.0, 0.7, 0.0;
  Basket without3;
  without3.selected = {0, 1};
  const auto redistributed =
      apply_mask(PortfolioWeights(lopsided), without3, 4);
  CHECK(redistributed.values(0) == doctest::Approx(1.0));
  CHECK(redistributed.values.sum() == doctest::Approx(1.0));
}

TEST_CASE("apply_mask rejects a fully degenerate allocation") {
  Eigen::VectorXd raw(3);
  raw << 0.0, 0.0, 1.0;
  Basket b;
  b.selected = {0};  // selects the zero-weight stock, bond is zero
  CHECK_THROWS_AS(apply_mask(PortfolioWeights(raw), b, 2), Error);
}

TEST_CASE("turnover-constrained baskets keep half under identical rankings") {
  Eigen::VectorXd scores(8);
  scores << 8, 7, 6, 5, 4, 3, 2, 1;
  const auto fresh = top_k_mask(scores, 4);
  const auto next = turnover_constrained_basket(scores, fresh, 4);
  CHECK(next.selected == fresh.selected);
  CHECK(next.retained == std::vector<int>{0, 1});
}

TEST_CASE("at most half the basket changes even under a full rank flip") {
  const int pool = 20;
  Eigen::VectorXd day0(pool), day1(pool);
  for (int i = 0; i < pool; ++i) {
    day0(i) = pool - i;  // favors 0..9
    day1(i) = i;         // favors 19..10
  }
  const auto b0 = top_k_mask(day0, 10);
  CHECK(b0.selected == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto b1 = turnover_constrained_basket(day1, b0, 10);
  std::vector<int> kept;
  std::set_intersection(b0.selected.begin(), b0.selected.end(),
                        b1.selected.begin(), b1.selected.end(),
                        std::back_inserter(kept));
  CHECK(kept.size() == 5);  // exactly half survives
  // the survivors are the best insiders under the new scores
  CHECK(kept == std::vector<int>{5, 6, 7, 8, 9});
}

TEST_CASE("pool equal to basket size freezes the selection") {
  Eigen::VectorXd scores(6);
  scores << 1, 2, 3, 4, 5, 6;
  const auto b0 = top_k_mask(scores, 6);
  Eigen::VectorXd flipped(6);
  flipped << 6, 5, 4, 3, 2, 1;
  const auto b1 = turnover_constrained_basket(flipped, b0, 6);
  CHECK(b1.selected == b0.selected);
}

TEST_CASE("turnover invariant holds over long random simulations") {
  const int pool = 60;
  const int k = 20;
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd scores(pool);
  for (int i = 0; i < pool; ++i) scores(i) = n01(rng);
  Basket basket = top_k_mask(scores, k);
  for (int day = 1; day < 200; ++day) {
    for (int i = 0; i < pool; ++i) scores(i) = n01(rng);
    const Basket next = turnover_constrained_basket(scores, basket, k);
    std::vector<int> kept;
    std::set_intersection(basket.selected.begin(), basket.selected.end(),
                          next.selected.begin(), next.selected.end(),
                          std::back_inserter(kept));
    CHECK(static_cast<int>(kept.size()) >= k / 2);
    CHECK(next.size() == k);
    basket = next;
  }
}

TEST_CASE("joint_forward reduces to the plain policy on a pool of size k") {
  const int k = 3;
  const int per_stock = 4;
  PolicyConfig actor_cfg;
  actor_cfg.hidden_sizes = {4, 4, 4};
  actor_cfg.dropout_rate = 0.0;
  actor_cfg.seed = 21;
  const auto actor = init_params(actor_cfg, k * per_stock, k + 1);
  // equal scores: rank order falls back to pool order
  MaskParameters mask = init_mask_params(per_stock, 8, 22);
  mask.w1.setZero();
  mask.b1.setZero();
  mask.w2.setZero();
  mask.b2 = 0.0;

  std::mt19937_64 rng(23);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Eigen::MatrixXd> days;
  Eigen::MatrixXd features(4, k * per_stock);
  for (int t = 0; t < 4; ++t) {
    Eigen::MatrixXd pool(k, per_stock);
    for (Eigen::Index i = 0; i < pool.size(); ++i) pool.data()[i] = n01(rng);
    days.push_back(pool);
    for (int s = 0; s < k; ++s) {
      features.row(t).segment(s * per_stock, per_stock) = pool.row(s);
    }
  }

  SelectionConfig cfg;
  cfg.basket_size = k;
  const auto joint = joint_forward(days, mask, actor, actor_cfg, cfg);
  const auto plain = forward_sequence(features, actor, actor_cfg);
  REQUIRE(joint.size() == 4);
  for (int t = 0; t < 4; ++t) {
    CHECK(joint[t].basket.selected == std::vector<int>{0, 1, 2});
    CHECK((joint[t].weights.values - plain.actions[t].values)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("joint_forward permutation consistency") {
  const int pool = 6;
  const int k = 2;
  const int per_stock = 3;
  PolicyConfig actor_cfg;
  actor_cfg.hidden_sizes = {4, 4, 4};
  actor_cfg.dropout_rate = 0.0;
  actor_cfg.seed = 31;
  const auto actor = init_params(actor_cfg, k * per_stock, k + 1);
  const auto mask = init_mask_params(per_stock, 8, 32);

  std::mt19937_64 rng(33);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Eigen::MatrixXd> days;
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXd day(pool, per_stock);
    for (Eigen::Index i = 0; i < day.size(); ++i) day.data()[i] = n01(rng);
    days.push_back(day);
  }

  std::vector<int> perm = {3, 1, 5, 0, 2, 4};
  std::vector<Eigen::MatrixXd> permuted_days;
  for (const auto& day : days) {
    Eigen::MatrixXd p(pool, per_stock);
    for (int i = 0; i < pool; ++i) p.row(i) = day.row(perm[i]);
    permuted_days.push_back(p);
  }

  SelectionConfig cfg;
  cfg.basket_size = k;
  for (SelectionMode mode : {SelectionMode::Free, SelectionMode::Turnover}) {
    cfg.mode = mode;
    const auto base = joint_forward(days, mask, actor, actor_cfg, cfg);
    const auto permuted =
        joint_forward(permuted_days, mask, actor, actor_cfg, cfg);
    for (std::size_t t = 0; t < base.size(); ++t) {
      // permuting back restores baskets and weights
      std::vector<int> unpermuted;
      for (int idx : permuted[t].basket.selected) unpermuted.push_back(perm[idx]);
      std::sort(unpermuted.begin(), unpermuted.end());
      CHECK(unpermuted == base[t].basket.selected);
      CHECK(permuted[t].weights.values(0) ==
            doctest::Approx(base[t].weights.values(0)).epsilon(1e-12));
      for (int i = 0; i < pool; ++i) {
        CHECK(permuted[t].weights.values(i + 1) ==
              doctest::Approx(base[t].weights.values(perm[i] + 1))
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("free selection can rotate the whole basket") {
  // two stocks alternate as the top scorer; with k = 1 the basket flips
  MaskParameters p = init_mask_params(1, 2, 41);
  p.w1.setZero();
  p.b1.setZero();
  p.w2.setOnes();
  p.b2 = 0.0;
  p.w1(0, 0) = 1.0;
  std::vector<Eigen::MatrixXd> days;
  for (int t = 0; t < 4; ++t) {
    Eigen::MatrixXd day(2, 1);
    day(0, 0) = t % 2 == 0 ? 2.0 : 1.0;
    day(1, 0) = t % 2 == 0 ? 1.0 : 2.0;
    days.push_back(day);
  }
  PolicyConfig actor_cfg;
  actor_cfg.hidden_sizes = {2, 2, 2};
  actor_cfg.seed = 42;
  actor_cfg.dropout_rate = 0.0;
  const auto actor = init_params(actor_cfg, 1, 2);
  SelectionConfig cfg;
  cfg.basket_size = 1;
  const auto out = joint_forward(days, p, actor, actor_cfg, cfg);
  CHECK(out[0].basket.selected == std::vector<int>{0});
  CHECK(out[1].basket.selected == std::vector<int>{1});
  CHECK(out[2].basket.selected == std::vector<int>{0});
}

TEST_CASE("perturbation training never accepts a worse mask") {
  const int pool = 8;
  const int k = 2;
  const int per_stock = 2;
  PolicyConfig actor_cfg;
  actor_cfg.hidden_sizes = {4, 4, 4};
  actor_cfg.dropout_rate = 0.0;
  actor_cfg.seed = 51;
  const auto actor = init_params(actor_cfg, k * per_stock, k + 1);
  MaskParameters mask = init_mask_params(per_stock, 4, 52);

  std::mt19937_64 rng(53);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Eigen::MatrixXd> days;
  std::vector<Eigen::VectorXd> gross;
  for (int t = 0; t < 10; ++t) {
    Eigen::MatrixXd day(pool, per_stock);
    for (Eigen::Index i = 0; i < day.size(); ++i) day.data()[i] = n01(rng);
    days.push_back(day);
    Eigen::VectorXd g(pool + 1);
    g(0) = 1.0;
    for (int i = 0; i < pool; ++i) g(i + 1) = std::exp(0.01 * n01(rng));
    gross.push_back(g);
  }
  EnvConfig env;
  env.num_stocks = pool;
  env.commission_rate = 1e-4;
  SelectionConfig cfg;
  cfg.basket_size = k;
  MaskTrainConfig tcfg;
  tcfg.iterations = 30;
  tcfg.seed = 54;
  const auto result = train_mask(mask, days, gross, actor, actor_cfg, cfg, env, tcfg);
  REQUIRE(result.utility.size() == 30);
  for (std::size_t i = 1; i < result.utility.size(); ++i) {
    CHECK(result.utility[i] >= result.utility[i - 1]);
  }
}
