#pragma once

// Deterministic synthetic markets for tests: geometric price paths with
// per-asset drift, optional log-normal noise and a generated ISO calendar.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "rdnn/market_data.hpp"

namespace synthetic {

inline std::vector<std::string> make_calendar(int days,
                                              int start_year = 2010,
                                              unsigned start_month = 1,
                                              unsigned start_day = 4) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(days);
  sys_days d = year_month_day(year(start_year), month(start_month),
                              day(start_day));
  for (int i = 0; i < days; ++i) {
    const year_month_day ymd(d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u",
                  static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    out.emplace_back(buf);
    d += std::chrono::days(1);
  }
  return out;
}

struct AssetSpec {
  std::string ticker;
  double base_price = 100.0;
  double daily_drift = 0.0;   // +0.002 = +0.2% per day
  double noise_sigma = 0.0;   // log-normal daily noise
};

// Per-segment drift override: segment k covers days [boundaries[k-1],
// boundaries[k]). Used for regime-switching markets.
struct Regime {
  std::vector<int> boundaries;           // ascending day indexes
  std::vector<std::vector<double>> drift;  // [segment][asset]
};

inline rdnn::PriceHistory make_history(const std::vector<AssetSpec>& assets,
                                       int days, std::uint64_t seed = 0,
                                       const Regime* regime = nullptr) {
  rdnn::PriceHistory h;
  h.calendar = make_calendar(days);
  for (std::size_t a = 0; a < assets.size(); ++a) {
    // per-asset stream: truncating `days` keeps price prefixes identical
    std::mt19937_64 rng(seed + 7919 * a);
    std::normal_distribution<double> noise(0.0, 1.0);
    const AssetSpec& spec = assets[a];
    h.assets.push_back(spec.ticker);
    std::vector<double> close(days);
    double price = spec.base_price;
    for (int t = 0; t < days; ++t) {
      if (t > 0) {
        double drift = spec.daily_drift;
        if (regime) {
          std::size_t seg = 0;
          while (seg < regime->boundaries.size() &&
                 t >= regime->boundaries[seg]) {
            ++seg;
          }
          drift = regime->drift[seg][a];
        }
        double step = 1.0 + drift;
        if (spec.noise_sigma > 0.0) {
          step *= std::exp(spec.noise_sigma * noise(rng));
        }
        price *= step;
      }
      close[t] = price;
    }
    std::vector<double> open(days), high(days), low(days), volume(days);
    for (int t = 0; t < days; ++t) {
      open[t] = t == 0 ? close[t] : close[t - 1];
      high[t] = std::max(open[t], close[t]) * 1.001;
      low[t] = std::min(open[t], close[t]) * 0.999;
      volume[t] = 1.0e6 * (1.0 + 0.1 * (t % 7));
    }
    h.open.push_back(std::move(open));
    h.high.push_back(std::move(high));
    h.low.push_back(std::move(low));
    h.close.push_back(std::move(close));
    h.volume.push_back(std::move(volume));
  }
  h.validate();
  return h;
}

inline std::string to_csv(const rdnn::PriceHistory& h) {
  return rdnn::price_history_to_csv(h);
}

}  // namespace synthetic
