#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rdnn {

// Aligned per-asset daily OHLCV series over a shared trading calendar.
// Invariants: every series has calendar length, prices are strictly
// positive, volumes non-negative, calendar strictly increasing.
struct PriceHistory {
  std::vector<std::string> calendar;  // ISO-8601 dates, strictly increasing
  std::vector<std::string> assets;    // ticker identifiers

  // series[asset][day]
  std::vector<std::vector<double>> open;
  std::vector<std::vector<double>> high;
  std::vector<std::vector<double>> low;
  std::vector<std::vector<double>> close;
  std::vector<std::vector<double>> volume;

  // extra pre-computed feature columns carried through from the input,
  // keyed by column name: extra.at(name)[asset][day]
  std::map<std::string, std::vector<std::vector<double>>> extra;

  std::size_t num_days() const { return calendar.size(); }
  std::size_t num_assets() const { return assets.size(); }
  int asset_index(const std::string& ticker) const;  // -1 if unknown

  void validate() const;  // throws on invariant violation
};

// Column-name mapping for CSV ingestion. Defaults match the canonical
// header `date,ticker,open,high,low,close,volume`.
struct CsvSchema {
  std::string date = "date";
  std::string ticker = "ticker";
  std::string open = "open";
  std::string high = "high";
  std::string low = "low";
  std::string close = "close";
  std::string volume = "volume";
};

// Loads daily OHLCV rows, groups by ticker and aligns everything on the
// common span [max(first day), min(last day)]. Assets missing more than
// `max_missing_fraction` of the calendar days inside that span are dropped;
// remaining gaps are forward-filled from the previous close with volume 0.
// Unmapped numeric columns are kept as extra feature channels.
PriceHistory load_ohlcv(const std::string& path, const CsvSchema& schema = {},
                        double max_missing_fraction = 0.05);

// Same parser over an in-memory CSV document (used by tests and ingest).
PriceHistory parse_ohlcv_csv(const std::string& text,
                             const CsvSchema& schema = {},
                             double max_missing_fraction = 0.05);

struct IndicatorConfig {
  std::vector<int> ema_periods = {10, 20};
  std::optional<int> rsi_period = 14;
  std::optional<int> macd_fast = 12;
  std::optional<int> macd_slow = 26;
  std::optional<int> macd_signal = 9;
  int normalization_window = 20;  // trailing z-score window, inclusive of t

  // per-asset feature channel count for a history with `extra` columns
  int features_per_asset(std::size_t num_extra) const;
  std::vector<std::string> channel_names() const;
  void validate() const;
};

// Per-day normalized feature vectors. `calendar` is a contiguous suffix of
// the source PriceHistory calendar (warm-up days dropped). `values` is
// days x dim, every entry finite.
struct FeatureMatrix {
  std::vector<std::string> calendar;
  std::vector<std::string> feature_names;  // "ticker:channel", asset-major
  Eigen::MatrixXd values;                  // days x dim

  std::size_t num_days() const { return calendar.size(); }
  Eigen::Index dim() const { return values.cols(); }
};

// Index of features.calendar[0] within history.calendar. Verifies the
// feature calendar is a contiguous suffix of the history calendar.
std::size_t calendar_offset(const PriceHistory& history,
                            const FeatureMatrix& features);

// Computes per-asset channels [open,high,low,close,volume,EMAs,RSI,MACD
// triple,extras], z-scores each channel over the trailing
// normalization_window days (inclusive of day t) and drops warm-up days.
// Channels with zero window deviation normalize to 0.
FeatureMatrix build_features(const PriceHistory& history,
                             const IndicatorConfig& cfg = {});

// Per-stock feature slice of one day: row = asset, columns = channels.
Eigen::MatrixXd per_asset_features(const FeatureMatrix& features,
                                   std::size_t day, std::size_t num_assets);

// Restriction to a subset of assets (indices into history.assets, ascending).
PriceHistory select_assets(const PriceHistory& history,
                           const std::vector<int>& indices);
FeatureMatrix select_assets(const FeatureMatrix& features,
                            const std::vector<int>& indices,
                            std::size_t num_assets);

// CSV export/import of a FeatureMatrix (`date` column, then ticker:channel
// columns). Values are shortest-round-trip formatted so re-parsing is exact.
std::string feature_matrix_to_csv(const FeatureMatrix& features);
FeatureMatrix feature_matrix_from_csv(const std::string& text);

// Canonical OHLCV CSV serialization of an aligned PriceHistory.
std::string price_history_to_csv(const PriceHistory& history);

}  // namespace rdnn
