#pragma once

#include <vector>

namespace rdnn {

// Exponential moving average with smoothing alpha = 2 / (period + 1),
// seeded with the first value. Output has the same length as the input.
std::vector<double> ema(const std::vector<double>& series, int period);

struct MacdResult {
  std::vector<double> macd_line;
  std::vector<double> signal_line;
  std::vector<double> histogram;
};

// macd_line = ema(fast) - ema(slow); signal_line = ema(macd_line, signal).
// Requires fast < slow.
MacdResult macd(const std::vector<double>& series, int fast, int slow,
                int signal);

// Wilder RSI in [0, 100]. The first `period` outputs are warm-up and hold
// quiet_nan; callers drop those days. Requires series length >= period + 1.
std::vector<double> rsi(const std::vector<double>& series, int period);

// Number of leading warm-up entries rsi() emits for a given period.
inline int rsi_warmup(int period) { return period; }

}  // namespace rdnn
