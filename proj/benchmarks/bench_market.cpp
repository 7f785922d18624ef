#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "rdnn/indicators.hpp"
#include "rdnn/market_data.hpp"

using namespace rdnn;

namespace {

PriceHistory random_history(int assets, int days) {
  PriceHistory h;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int d = 0; d < days; ++d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "d%06d", d);
    h.calendar.emplace_back(buf);
  }
  for (int a = 0; a < assets; ++a) {
    h.assets.push_back("S" + std::to_string(a));
    std::vector<double> close(days);
    double p = 100.0;
    for (int d = 0; d < days; ++d) {
      close[d] = p;
      p *= std::exp(0.01 * n01(rng));
    }
    h.open.push_back(close);
    h.high.push_back(close);
    h.low.push_back(close);
    h.close.push_back(close);
    h.volume.push_back(std::vector<double>(days, 1e6));
  }
  return h;
}

}  // namespace

static void BM_Ema(benchmark::State& state) {
  std::vector<double> series(static_cast<std::size_t>(state.range(0)), 1.0);
  for (std::size_t i = 0; i < series.size(); ++i) series[i] = 100.0 + i % 17;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ema(series, 20));
  }
}
BENCHMARK(BM_Ema)->Arg(2520);

static void BM_Rsi(benchmark::State& state) {
  std::vector<double> series(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < series.size(); ++i) {
    series[i] = 100.0 + (i % 13) - (i % 7);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(rsi(series, 14));
  }
}
BENCHMARK(BM_Rsi)->Arg(2520);

static void BM_BuildFeatures(benchmark::State& state) {
  const PriceHistory h = random_history(static_cast<int>(state.range(0)), 756);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_features(h, {}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 756);
}
BENCHMARK(BM_BuildFeatures)->Arg(2)->Arg(20);
