#include "rdnn/indicators.hpp"

#include <cmath>
#include <limits>

#include "rdnn/errors.hpp"

namespace rdnn {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> ema(const std::vector<double>& series, int period) {
  if (series.empty()) fail(Errc::EmptySeries, "ema");
  if (period < 1) fail(Errc::InvalidPeriods, "ema period must be >= 1");
  const double alpha = 2.0 / (period + 1.0);
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t t = 1; t < series.size(); ++t) {
    out[t] = alpha * series[t] + (1.0 - alpha) * out[t - 1];
  }
  return out;
}

MacdResult macd(const std::vector<double>& series, int fast, int slow,
                int signal) {
  if (fast >= slow) fail(Errc::InvalidPeriods, "macd requires fast < slow");
  if (signal < 1) fail(Errc::InvalidPeriods, "macd signal period must be >= 1");
  MacdResult r;
  const auto fast_ema = ema(series, fast);
  const auto slow_ema = ema(series, slow);
  r.macd_line.resize(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    r.macd_line[t] = fast_ema[t] - slow_ema[t];
  }
  r.signal_line = ema(r.macd_line, signal);
  r.histogram.resize(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    r.histogram[t] = r.macd_line[t] - r.signal_line[t];
  }
  return r;
}

std::vector<double> rsi(const std::vector<double>& series, int period) {
  if (period < 1) fail(Errc::InvalidPeriods, "rsi period must be >= 1");
  if (series.size() < static_cast<std::size_t>(period) + 1) {
    fail(Errc::SeriesTooShort, "rsi needs at least period + 1 values");
  }
  const std::size_t n = series.size();
  std::vector<double> out(n, kNan);

  // Seed Wilder smoothing with the plain average of the first `period`
  // gains/losses, then recurse.
  double avg_gain = 0.0;
  double avg_loss = 0.0;
  for (int t = 1; t <= period; ++t) {
    const double d = series[t] - series[t - 1];
    avg_gain += d > 0.0 ? d : 0.0;
    avg_loss += d < 0.0 ? -d : 0.0;
  }
  avg_gain /= period;
  avg_loss /= period;

  auto to_rsi = [](double gain, double loss) {
    if (loss <= 0.0 && gain <= 0.0) return 50.0;  // flat series
    if (loss <= 0.0) return 100.0;
    const double rs = gain / loss;
    return 100.0 - 100.0 / (1.0 + rs);
  };

  out[period] = to_rsi(avg_gain, avg_loss);
  for (std::size_t t = period + 1; t < n; ++t) {
    const double d = series[t] - series[t - 1];
    const double gain = d > 0.0 ? d : 0.0;
    const double loss = d < 0.0 ? -d : 0.0;
    avg_gain = (avg_gain * (period - 1) + gain) / period;
    avg_loss = (avg_loss * (period - 1) + loss) / period;
    out[t] = to_rsi(avg_gain, avg_loss);
  }
  return out;
}

}  // namespace rdnn
