#include <benchmark/benchmark.h>

#include <random>

#include "rdnn/training.hpp"

using namespace rdnn;

namespace {

Episode synthetic_episode(int m, int steps, int feature_dim,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Episode ep;
  ep.env.num_stocks = m;
  ep.features.resize(steps, feature_dim);
  for (Eigen::Index i = 0; i < ep.features.size(); ++i) {
    ep.features.data()[i] = n01(rng);
  }
  ep.prices.resize(steps + 1, m);
  for (int a = 0; a < m; ++a) {
    double p = 100.0;
    for (int t = 0; t <= steps; ++t) {
      ep.prices(t, a) = p;
      p *= std::exp(0.01 * n01(rng));
    }
  }
  return ep;
}

}  // namespace

static void BM_ForwardDefaultWidth(benchmark::State& state) {
  const int m = 20;
  const int feature_dim = m * 11;
  PolicyConfig cfg;  // 128-128 hidden widths
  cfg.dropout_rate = 0.0;
  cfg.seed = 3;
  const PolicyParameters params = init_params(cfg, feature_dim, m + 1);
  Eigen::VectorXd f = Eigen::VectorXd::Random(feature_dim);
  const Action prev = initial_action(cfg, m + 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(f, prev, params, cfg));
  }
}
BENCHMARK(BM_ForwardDefaultWidth);

static void BM_BpttGradient(benchmark::State& state) {
  const int m = 5;
  const int steps = 60;
  const int feature_dim = m * 11;
  PolicyConfig cfg;
  cfg.hidden_sizes = {32, 32, 16};
  cfg.dropout_rate = 0.0;
  cfg.seed = 4;
  const PolicyParameters params = init_params(cfg, feature_dim, m + 1);
  const Episode ep = synthetic_episode(m, steps, feature_dim, 5);
  TrainConfig tcfg;
  tcfg.truncation_depth = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bptt_gradient(ep, params, cfg, tcfg));
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_BpttGradient)->Arg(1)->Arg(5)->Arg(60);

static void BM_FiniteDiffGradient(benchmark::State& state) {
  const int m = 2;
  const int steps = 6;
  const int feature_dim = 5;
  PolicyConfig cfg;
  cfg.hidden_sizes = {4, 4, 4};
  cfg.dropout_rate = 0.0;
  cfg.seed = 6;
  const PolicyParameters params = init_params(cfg, feature_dim, m + 1);
  const Episode ep = synthetic_episode(m, steps, feature_dim, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(finite_diff_gradient(
        ep, params, cfg, UtilityKind::CumulativeLogReturn));
  }
}
BENCHMARK(BM_FiniteDiffGradient);
