#include <doctest.h>

#include <cmath>
#include <random>

#include "rdnn/errors.hpp"
#include "rdnn/training.hpp"
#include "support/instances.hpp"
#include "support/synthetic.hpp"

using namespace rdnn;
using instances::compare_gradients;
using instances::random_instance;

namespace {

TrainConfig grad_check_cfg(UtilityKind utility, int tau) {
  TrainConfig cfg;
  cfg.utility = utility;
  cfg.truncation_depth = tau;
  return cfg;
}

}  // namespace

TEST_CASE("utility gradient matches finite differences") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01(0.0, 0.01);
  for (UtilityKind kind :
       {UtilityKind::CumulativeLogReturn, UtilityKind::SharpeRatio}) {
    std::vector<double> returns(9);
    for (auto& r : returns) r = n01(rng);
    const auto grad = utility_gradient(returns, kind);
    const double eps = 1e-7;
    for (std::size_t t = 0; t < returns.size(); ++t) {
      auto bumped = returns;
      bumped[t] += eps;
      const double up = utility(bumped, kind);
      bumped[t] -= 2 * eps;
      const double down = utility(bumped, kind);
      const double numeric = (up - down) / (2 * eps);
      CHECK(grad[t] == doctest::Approx(numeric).epsilon(1e-5));
    }
  }
}

TEST_CASE("return partials match finite differences of evaluate_actions") {
  for (PolicyMode mode : {PolicyMode::WeightHead, PolicyMode::ShareHead}) {
    auto gi = random_instance(11, mode, 2, 5, 4, 0.01, 0.001);
    SequenceResult seq =
        forward_sequence(gi.episode.features, gi.params, gi.cfg, nullptr, true);
    ActionEval ev = evaluate_actions(gi.episode, seq.actions, true);
    const double eps = 1e-7;
    const int T = gi.episode.steps();
    for (int t = 0; t < T; ++t) {
      for (Eigen::Index i = 0; i < seq.actions[t].values.size(); ++i) {
        auto bumped = seq.actions;
        bumped[t].values(i) += eps;
        const auto up = evaluate_actions(gi.episode, bumped, false);
        bumped[t].values(i) -= 2 * eps;
        const auto down = evaluate_actions(gi.episode, bumped, false);
        // action t touches R_t and, through the drift, R_{t+1}
        const double num_own = (up.returns[t] - down.returns[t]) / (2 * eps);
        CHECK(ev.d_action[t](i) == doctest::Approx(num_own).epsilon(1e-4));
        if (t + 1 < T) {
          const double num_next =
              (up.returns[t + 1] - down.returns[t + 1]) / (2 * eps);
          CHECK(ev.d_prev_action[t + 1](i) ==
                doctest::Approx(num_next).epsilon(1e-4));
        }
      }
    }
  }
}

TEST_CASE("bptt matches central finite differences on small instances") {
  int checked = 0;
  std::uint64_t seed = 100;
  for (PolicyMode mode : {PolicyMode::WeightHead, PolicyMode::ShareHead}) {
    for (UtilityKind kind :
         {UtilityKind::CumulativeLogReturn, UtilityKind::SharpeRatio}) {
      for (int rep = 0; rep < 2; ++rep) {
        auto gi = random_instance(seed++, mode);
        const TrainConfig cfg = grad_check_cfg(kind, gi.episode.steps());
        const BpttResult analytic =
            bptt_gradient(gi.episode, gi.params, gi.cfg, cfg);
        const Gradient numeric =
            finite_diff_gradient(gi.episode, gi.params, gi.cfg, kind);
        const auto cmp = compare_gradients(analytic.gradient, numeric);
        CHECK(cmp.compared > 0);
        CHECK(cmp.max_rel_err < 1e-4);
        ++checked;
      }
    }
  }
  CHECK(checked == 8);
}

TEST_CASE("single-step episode reduces to a feedforward gradient") {
  auto gi = random_instance(200, PolicyMode::WeightHead, 2, 1, 4);
  const TrainConfig cfg_deep = grad_check_cfg(UtilityKind::CumulativeLogReturn, 5);
  const TrainConfig cfg_shallow =
      grad_check_cfg(UtilityKind::CumulativeLogReturn, 1);
  const auto deep = bptt_gradient(gi.episode, gi.params, gi.cfg, cfg_deep);
  const auto shallow = bptt_gradient(gi.episode, gi.params, gi.cfg, cfg_shallow);
  const auto cmp = compare_gradients(deep.gradient, shallow.gradient, 0.0);
  CHECK(cmp.max_rel_err == 0.0);
  const Gradient numeric = finite_diff_gradient(gi.episode, gi.params, gi.cfg,
                                                UtilityKind::CumulativeLogReturn);
  CHECK(compare_gradients(deep.gradient, numeric).max_rel_err < 1e-4);
}

TEST_CASE("severed feedback makes truncation depth irrelevant") {
  auto gi = random_instance(300, PolicyMode::WeightHead);
  gi.params.layer1.u.setZero();
  const TrainConfig full = grad_check_cfg(UtilityKind::CumulativeLogReturn,
                                          gi.episode.steps());
  const TrainConfig local = grad_check_cfg(UtilityKind::CumulativeLogReturn, 1);
  const auto g_full = bptt_gradient(gi.episode, gi.params, gi.cfg, full);
  const auto g_local = bptt_gradient(gi.episode, gi.params, gi.cfg, local);
  const auto cmp = compare_gradients(g_full.gradient, g_local.gradient, 1e-12);
  CHECK(cmp.max_rel_err < 1e-12);
  const Gradient numeric = finite_diff_gradient(
      gi.episode, gi.params, gi.cfg, UtilityKind::CumulativeLogReturn);
  CHECK(compare_gradients(g_full.gradient, numeric).max_rel_err < 1e-4);
}

TEST_CASE("flat market with log utility has near-zero gradient") {
  auto gi = random_instance(400, PolicyMode::WeightHead, 2, 6, 4, 0.0);
  gi.episode.env.commission_rate = 0.0;
  gi.episode.env.risk_free_rate = 0.0;
  for (int t = 0; t <= gi.episode.steps(); ++t) {
    for (int a = 0; a < gi.episode.num_stocks(); ++a) {
      gi.episode.prices(t, a) = 100.0;
    }
  }
  const Gradient numeric = finite_diff_gradient(
      gi.episode, gi.params, gi.cfg, UtilityKind::CumulativeLogReturn);
  double max_abs = 0.0;
  for_each_param(numeric,
                 [&](double v) { max_abs = std::max(max_abs, std::abs(v)); });
  CHECK(max_abs < 1e-7);

  const TrainConfig cfg = grad_check_cfg(UtilityKind::CumulativeLogReturn, 6);
  const auto analytic = bptt_gradient(gi.episode, gi.params, gi.cfg, cfg);
  double max_abs_analytic = 0.0;
  for_each_param(analytic.gradient, [&](double v) {
    max_abs_analytic = std::max(max_abs_analytic, std::abs(v));
  });
  CHECK(max_abs_analytic < 1e-12);
}

TEST_CASE("halving eps shrinks the central-difference error quadratically") {
  auto gi = random_instance(500, PolicyMode::WeightHead);
  const TrainConfig cfg = grad_check_cfg(UtilityKind::CumulativeLogReturn,
                                         gi.episode.steps());
  const auto analytic = bptt_gradient(gi.episode, gi.params, gi.cfg, cfg);

  auto err_for = [&](double eps) {
    const Gradient fd = finite_diff_gradient(
        gi.episode, gi.params, gi.cfg, UtilityKind::CumulativeLogReturn, eps);
    Gradient diff = fd;
    axpy(-1.0, analytic.gradient, diff);
    return param_norm(diff);
  };
  const double coarse = err_for(4e-3);
  const double fine = err_for(2e-3);
  CHECK(fine < coarse);
  // quadratic order leaves a factor ~4; allow slack for rounding noise
  CHECK(fine < coarse / 2.5);
}

TEST_CASE("truncated gradients approach the full gradient as tau grows") {
  auto gi = random_instance(600, PolicyMode::WeightHead, 2, 8, 4);
  gi.params.layer1.u *= 0.05;  // contraction in the feedback loop
  const int T = gi.episode.steps();
  const auto full = bptt_gradient(gi.episode, gi.params, gi.cfg,
                                  grad_check_cfg(UtilityKind::CumulativeLogReturn, T));
  double prev_diff = std::numeric_limits<double>::infinity();
  for (int tau = 1; tau <= T; ++tau) {
    const auto truncated = bptt_gradient(
        gi.episode, gi.params, gi.cfg,
        grad_check_cfg(UtilityKind::CumulativeLogReturn, tau));
    Gradient diff = truncated.gradient;
    axpy(-1.0, full.gradient, diff);
    const double d = param_norm(diff);
    CHECK(d <= prev_diff + 1e-12);
    prev_diff = d;
  }
  CHECK(prev_diff == 0.0);  // tau = T severs nothing
}

TEST_CASE("dropout masks stay fixed between forward and backward") {
  auto gi = random_instance(700, PolicyMode::WeightHead);
  gi.cfg.dropout_rate = 0.2;
  const TrainConfig cfg = grad_check_cfg(UtilityKind::CumulativeLogReturn, 3);
  DropoutSampler a(gi.cfg.dropout_rate, 42);
  DropoutSampler b(gi.cfg.dropout_rate, 42);
  const auto r1 = bptt_gradient(gi.episode, gi.params, gi.cfg, cfg, &a);
  const auto r2 = bptt_gradient(gi.episode, gi.params, gi.cfg, cfg, &b);
  CHECK(r1.utility_value == r2.utility_value);
  CHECK(compare_gradients(r1.gradient, r2.gradient, 0.0).max_rel_err == 0.0);

  DropoutSampler c(gi.cfg.dropout_rate, 43);
  const auto r3 = bptt_gradient(gi.episode, gi.params, gi.cfg, cfg, &c);
  CHECK(r3.utility_value != r1.utility_value);
}

TEST_CASE("sgd_step arithmetic") {
  auto gi = random_instance(800, PolicyMode::WeightHead);
  const Gradient zero = zeros_like(gi.params);
  const auto same = sgd_step(gi.params, zero, 0.1);
  CHECK(compare_gradients(same, gi.params, 0.0).max_rel_err == 0.0);

  Gradient g = zeros_like(gi.params);
  *param_at(g, 0) = 2.0;
  PolicyParameters p = gi.params;
  *param_at(p, 0) = 1.0;
  const auto stepped = sgd_step(p, g, 0.1);
  PolicyParameters stepped_mut = stepped;
  CHECK(*param_at(stepped_mut, 0) == doctest::Approx(1.2));

  const auto frozen = sgd_step(p, g, 0.0);
  CHECK(compare_gradients(frozen, p, 0.0).max_rel_err == 0.0);

  // clip rescales to the requested max norm
  const auto clipped = sgd_step(p, g, 1.0, 0.5);
  PolicyParameters clipped_mut = clipped;
  CHECK(*param_at(clipped_mut, 0) == doctest::Approx(1.0 + 0.5));
}

TEST_CASE("one small ascent step does not decrease utility") {
  for (UtilityKind kind :
       {UtilityKind::CumulativeLogReturn, UtilityKind::SharpeRatio}) {
    auto gi = random_instance(900 + static_cast<int>(kind), PolicyMode::WeightHead);
    const TrainConfig cfg = grad_check_cfg(kind, gi.episode.steps());
    const auto r = bptt_gradient(gi.episode, gi.params, gi.cfg, cfg);
    const auto next = sgd_step(gi.params, r.gradient, 1e-5);
    SequenceResult seq =
        forward_sequence(gi.episode.features, next, gi.cfg, nullptr, false);
    const auto ev = evaluate_actions(gi.episode, seq.actions, false);
    const double after = utility(ev.returns, kind);
    CHECK(after - r.utility_value >= -1e-9);
  }
}

TEST_CASE("training is deterministic and learns the drifting asset") {
  using synthetic::AssetSpec;
  const auto history = synthetic::make_history(
      {AssetSpec{"UP", 100.0, 0.002, 0.0}, AssetSpec{"DOWN", 100.0, -0.002, 0.0}},
      160);
  IndicatorConfig icfg;
  const FeatureMatrix features = build_features(history, icfg);
  REQUIRE(features.num_days() > 70);

  EnvConfig env;
  env.num_stocks = 2;
  env.commission_rate = 0.0;

  PolicyConfig policy_cfg;
  policy_cfg.hidden_sizes = {16, 16, 8};
  policy_cfg.dropout_rate = 0.0;
  policy_cfg.seed = 3;

  TrainConfig tcfg;
  tcfg.epochs = 60;
  tcfg.batch_size = 8;
  tcfg.episode_length = 40;
  tcfg.learning_rate = 2.0;
  tcfg.truncation_depth = 5;
  tcfg.seed = 5;

  const TrainResult a = train(features, history, policy_cfg, env, tcfg);
  const TrainResult b = train(features, history, policy_cfg, env, tcfg);
  CHECK(train_report_to_json(a.report) == train_report_to_json(b.report));
  CHECK(compare_gradients(a.params, b.params, 0.0).max_rel_err == 0.0);

  CHECK(a.report.utility.back() > a.report.utility.front());

  // evaluation: the trained policy should favor the drifting asset
  SequenceResult seq =
      forward_sequence(features.values.bottomRows(20), a.params, policy_cfg,
                       nullptr, false);
  double up_weight = 0.0;
  for (const auto& action : seq.actions) up_weight += action.values(1);
  up_weight /= static_cast<double>(seq.actions.size());
  CHECK(up_weight > 0.6);
}

TEST_CASE("train with zero epochs returns the initialization") {
  using synthetic::AssetSpec;
  const auto history = synthetic::make_history(
      {AssetSpec{"A", 100.0, 0.001, 0.0}, AssetSpec{"B", 90.0, 0.0, 0.0}}, 80);
  const FeatureMatrix features = build_features(history, {});
  EnvConfig env;
  env.num_stocks = 2;
  PolicyConfig pcfg;
  pcfg.hidden_sizes = {8, 8, 4};
  pcfg.seed = 9;
  TrainConfig tcfg;
  tcfg.epochs = 0;
  tcfg.episode_length = 10;
  const TrainResult r = train(features, history, pcfg, env, tcfg);
  const PolicyParameters init =
      init_params(pcfg, static_cast<int>(features.dim()), 3);
  CHECK(compare_gradients(r.params, init, 0.0).max_rel_err == 0.0);
  CHECK(r.report.epoch.empty());
}

TEST_CASE("insufficient data is rejected") {
  using synthetic::AssetSpec;
  const auto history =
      synthetic::make_history({AssetSpec{"A", 100.0, 0.0, 0.0}}, 40);
  const FeatureMatrix features = build_features(history, {});
  EnvConfig env;
  env.num_stocks = 1;
  PolicyConfig pcfg;
  pcfg.hidden_sizes = {4, 4, 4};
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.episode_length = 400;
  CHECK_THROWS_AS(train(features, history, pcfg, env, tcfg), Error);
}
