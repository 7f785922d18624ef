#include <benchmark/benchmark.h>

#include <random>

#include "rdnn/env.hpp"

using namespace rdnn;

namespace {

PortfolioWeights random_weights(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = std::exp(n01(rng));
  return PortfolioWeights((v / v.sum()).eval());
}

}  // namespace

static void BM_EffectiveWeights(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const PortfolioWeights prev = random_weights(rng, m + 1);
  Eigen::VectorXd g(m + 1);
  std::uniform_real_distribution<double> u(0.9, 1.1);
  for (int i = 0; i <= m; ++i) g(i) = u(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(effective_weights(prev, g));
  }
}
BENCHMARK(BM_EffectiveWeights)->Arg(5)->Arg(20)->Arg(100);

static void BM_RunEpisode(benchmark::State& state) {
  const int m = 5;
  const int steps = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  EnvConfig cfg;
  cfg.num_stocks = m;
  std::uniform_real_distribution<double> u(0.97, 1.03);
  std::vector<PortfolioWeights> targets;
  std::vector<Eigen::VectorXd> gross;
  for (int t = 0; t < steps; ++t) {
    targets.push_back(random_weights(rng, m + 1));
    Eigen::VectorXd g(m + 1);
    g(0) = 1.0;
    for (int i = 1; i <= m; ++i) g(i) = u(rng);
    gross.push_back(g);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode_returns(cfg, targets, gross));
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_RunEpisode)->Arg(252)->Arg(2520);
