#include <benchmark/benchmark.h>

#include <random>

#include "rdnn/selection.hpp"

using namespace rdnn;

static void BM_TopK(benchmark::State& state) {
  const int pool = static_cast<int>(state.range(0));
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd scores(pool);
  for (int i = 0; i < pool; ++i) scores(i) = n01(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(top_k_mask(scores, 20));
  }
}
BENCHMARK(BM_TopK)->Arg(100)->Arg(500);

static void BM_TurnoverChain(benchmark::State& state) {
  const int pool = static_cast<int>(state.range(0));
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd scores(pool);
  for (int i = 0; i < pool; ++i) scores(i) = n01(rng);
  Basket basket = top_k_mask(scores, 20);
  for (auto _ : state) {
    for (int i = 0; i < pool; ++i) scores(i) += 0.1 * n01(rng);
    basket = turnover_constrained_basket(scores, basket, 20);
    benchmark::DoNotOptimize(basket);
  }
}
BENCHMARK(BM_TurnoverChain)->Arg(100)->Arg(500);

static void BM_ScorePool(benchmark::State& state) {
  const int pool = static_cast<int>(state.range(0));
  const int per_stock = 11;
  const MaskParameters params = init_mask_params(per_stock, 64, 15);
  Eigen::MatrixXd features = Eigen::MatrixXd::Random(pool, per_stock);
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_stocks(features, params));
  }
  state.SetItemsProcessed(state.iterations() * pool);
}
BENCHMARK(BM_ScorePool)->Arg(100)->Arg(500);
