#include "rdnn/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "rdnn/errors.hpp"
#include "rdnn/indicators.hpp"
#include "rdnn/io.hpp"

namespace rdnn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

struct Row {
  double open, high, low, close, volume;
  std::vector<double> extra;
};

}  // namespace

int PriceHistory::asset_index(const std::string& ticker) const {
  for (std::size_t i = 0; i < assets.size(); ++i) {
    if (assets[i] == ticker) return static_cast<int>(i);
  }
  return -1;
}

void PriceHistory::validate() const {
  const std::size_t n = calendar.size();
  for (std::size_t d = 1; d < n; ++d) {
    if (!(calendar[d - 1] < calendar[d])) {
      fail(Errc::BadRow, "calendar not strictly increasing at " + calendar[d]);
    }
  }
  auto check = [&](const std::vector<std::vector<double>>& s,
                   const char* what) {
    if (s.size() != assets.size()) fail(Errc::LengthMismatch, what);
    for (const auto& v : s) {
      if (v.size() != n) fail(Errc::LengthMismatch, what);
    }
  };
  check(open, "open");
  check(high, "high");
  check(low, "low");
  check(close, "close");
  check(volume, "volume");
  for (std::size_t a = 0; a < assets.size(); ++a) {
    for (std::size_t d = 0; d < n; ++d) {
      if (!(open[a][d] > 0.0) || !(high[a][d] > 0.0) || !(low[a][d] > 0.0) ||
          !(close[a][d] > 0.0)) {
        fail(Errc::NonPositivePrice, assets[a] + " at " + calendar[d]);
      }
      if (volume[a][d] < 0.0) {
        fail(Errc::NegativeVolume, assets[a] + " at " + calendar[d]);
      }
    }
  }
}

PriceHistory parse_ohlcv_csv(const std::string& text, const CsvSchema& schema,
                             double max_missing_fraction) {
  std::vector<std::string> lines;
  {
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(strip_cr(line));
  }
  if (lines.empty()) fail(Errc::MissingColumn, "empty file, no header");

  const auto header = split_csv_line(lines[0]);
  auto find_col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  struct Cols {
    int date, ticker, open, high, low, close, volume;
  } col{};
  const std::pair<int*, const std::string*> required[] = {
      {&col.date, &schema.date},     {&col.ticker, &schema.ticker},
      {&col.open, &schema.open},     {&col.high, &schema.high},
      {&col.low, &schema.low},       {&col.close, &schema.close},
      {&col.volume, &schema.volume},
  };
  for (auto [slot, name] : required) {
    *slot = find_col(*name);
    if (*slot < 0) fail(Errc::MissingColumn, *name);
  }

  // Every unmapped column becomes an extra pre-computed feature channel.
  std::vector<int> extra_cols;
  std::vector<std::string> extra_names;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const int idx = static_cast<int>(i);
    if (idx == col.date || idx == col.ticker || idx == col.open ||
        idx == col.high || idx == col.low || idx == col.close ||
        idx == col.volume) {
      continue;
    }
    extra_cols.push_back(idx);
    extra_names.push_back(header[i]);
  }

  std::vector<std::string> ticker_order;
  std::map<std::string, std::map<std::string, Row>> by_ticker;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    const std::string where = "line " + std::to_string(li + 1);
    if (fields.size() < header.size()) {
      fail(Errc::BadRow, where + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
    }
    const std::string date = fields[col.date];
    const std::string ticker = fields[col.ticker];
    Row row;
    try {
      row.open = parse_double(fields[col.open]);
      row.high = parse_double(fields[col.high]);
      row.low = parse_double(fields[col.low]);
      row.close = parse_double(fields[col.close]);
      row.volume = parse_double(fields[col.volume]);
      for (int ec : extra_cols) row.extra.push_back(parse_double(fields[ec]));
    } catch (const Error&) {
      fail(Errc::BadRow, where + ": malformed numeric field");
    }
    if (!(row.open > 0.0) || !(row.high > 0.0) || !(row.low > 0.0) ||
        !(row.close > 0.0)) {
      fail(Errc::NonPositivePrice, where + ": " + ticker + " " + date);
    }
    if (row.volume < 0.0) {
      fail(Errc::NegativeVolume, where + ": " + ticker + " " + date);
    }
    auto& days = by_ticker[ticker];
    if (days.count(date)) {
      fail(Errc::BadRow, where + ": duplicate row for " + ticker + " " + date);
    }
    if (days.empty()) ticker_order.push_back(ticker);
    days.emplace(date, std::move(row));
  }
  if (by_ticker.empty()) fail(Errc::EmptyIntersectionCalendar, "no data rows");

  // Align on the common span, then reject assets with too many gaps. A
  // rejection can widen the span for the survivors, so iterate to a fixpoint.
  std::vector<std::string> kept = ticker_order;
  std::vector<std::string> calendar;
  for (;;) {
    if (kept.empty()) {
      fail(Errc::EmptyIntersectionCalendar, "no assets survive alignment");
    }
    std::string lo = by_ticker[kept[0]].begin()->first;
    std::string hi = by_ticker[kept[0]].rbegin()->first;
    for (const auto& t : kept) {
      lo = std::max(lo, by_ticker[t].begin()->first);
      hi = std::min(hi, by_ticker[t].rbegin()->first);
    }
    if (lo > hi) fail(Errc::EmptyIntersectionCalendar, lo + " > " + hi);

    std::set<std::string> days;
    for (const auto& t : kept) {
      for (const auto& [date, row] : by_ticker[t]) {
        if (date >= lo && date <= hi) days.insert(date);
      }
    }
    calendar.assign(days.begin(), days.end());

    std::vector<std::string> next;
    for (const auto& t : kept) {
      std::size_t missing = 0;
      for (const auto& d : calendar) missing += by_ticker[t].count(d) ? 0 : 1;
      const double frac = static_cast<double>(missing) / calendar.size();
      if (frac <= max_missing_fraction) next.push_back(t);
    }
    if (next.size() == kept.size()) break;
    kept.swap(next);
  }

  PriceHistory h;
  h.calendar = calendar;
  h.assets = kept;
  const std::size_t n = calendar.size();
  const std::size_t m = kept.size();
  h.open.assign(m, std::vector<double>(n));
  h.high.assign(m, std::vector<double>(n));
  h.low.assign(m, std::vector<double>(n));
  h.close.assign(m, std::vector<double>(n));
  h.volume.assign(m, std::vector<double>(n));
  for (const auto& name : extra_names) {
    h.extra[name].assign(m, std::vector<double>(n));
  }

  for (std::size_t a = 0; a < m; ++a) {
    const auto& days = by_ticker[kept[a]];
    for (std::size_t d = 0; d < n; ++d) {
      auto it = days.find(calendar[d]);
      if (it != days.end()) {
        const Row& r = it->second;
        h.open[a][d] = r.open;
        h.high[a][d] = r.high;
        h.low[a][d] = r.low;
        h.close[a][d] = r.close;
        h.volume[a][d] = r.volume;
        for (std::size_t e = 0; e < extra_names.size(); ++e) {
          h.extra[extra_names[e]][a][d] = r.extra[e];
        }
      } else {
        // gap: carry the last close at or before this day, zero volume
        auto prev = days.upper_bound(calendar[d]);
        if (prev == days.begin()) {
          fail(Errc::BadRow, kept[a] + " has no data before " + calendar[d]);
        }
        --prev;
        const Row& r = prev->second;
        h.open[a][d] = h.high[a][d] = h.low[a][d] = h.close[a][d] = r.close;
        h.volume[a][d] = 0.0;
        for (std::size_t e = 0; e < extra_names.size(); ++e) {
          h.extra[extra_names[e]][a][d] = r.extra[e];
        }
      }
    }
  }
  h.validate();
  return h;
}

PriceHistory load_ohlcv(const std::string& path, const CsvSchema& schema,
                        double max_missing_fraction) {
  return parse_ohlcv_csv(read_file(path), schema, max_missing_fraction);
}

void IndicatorConfig::validate() const {
  for (int p : ema_periods) {
    if (p < 1) fail(Errc::InvalidPeriods, "ema period must be >= 1");
  }
  if (rsi_period && *rsi_period < 1) {
    fail(Errc::InvalidPeriods, "rsi period must be >= 1");
  }
  const bool any_macd = macd_fast || macd_slow || macd_signal;
  if (any_macd) {
    if (!macd_fast || !macd_slow || !macd_signal) {
      fail(Errc::InvalidPeriods, "macd needs fast, slow and signal periods");
    }
    if (*macd_fast >= *macd_slow) {
      fail(Errc::InvalidPeriods, "macd requires fast < slow");
    }
    if (*macd_fast < 1 || *macd_signal < 1) {
      fail(Errc::InvalidPeriods, "macd periods must be >= 1");
    }
  }
  if (normalization_window < 1) {
    fail(Errc::InvalidPeriods, "normalization window must be >= 1");
  }
}

std::vector<std::string> IndicatorConfig::channel_names() const {
  std::vector<std::string> names = {"open", "high", "low", "close", "volume"};
  for (int p : ema_periods) names.push_back("ema_" + std::to_string(p));
  if (rsi_period) names.push_back("rsi_" + std::to_string(*rsi_period));
  if (macd_fast) {
    names.push_back("macd");
    names.push_back("macd_signal");
    names.push_back("macd_hist");
  }
  return names;
}

int IndicatorConfig::features_per_asset(std::size_t num_extra) const {
  return static_cast<int>(channel_names().size() + num_extra);
}

FeatureMatrix build_features(const PriceHistory& history,
                             const IndicatorConfig& cfg) {
  cfg.validate();
  history.validate();

  const std::size_t n = history.num_days();
  const std::size_t m = history.num_assets();
  const int warmup = cfg.rsi_period ? rsi_warmup(*cfg.rsi_period) : 0;
  const int win = cfg.normalization_window;
  const int first_day = warmup + win - 1;
  if (n < static_cast<std::size_t>(first_day + 1)) {
    fail(Errc::HistoryTooShort,
         "need at least " + std::to_string(first_day + 1) + " days, have " +
             std::to_string(n));
  }

  std::vector<std::string> extra_names;
  for (const auto& [name, series] : history.extra) extra_names.push_back(name);

  const auto channels = cfg.channel_names();
  const std::size_t per_asset = channels.size() + extra_names.size();

  // raw[asset][channel] = full-length series (warm-up entries NaN)
  std::vector<std::vector<std::vector<double>>> raw(m);
  for (std::size_t a = 0; a < m; ++a) {
    auto& ch = raw[a];
    ch.push_back(history.open[a]);
    ch.push_back(history.high[a]);
    ch.push_back(history.low[a]);
    ch.push_back(history.close[a]);
    ch.push_back(history.volume[a]);
    for (int p : cfg.ema_periods) ch.push_back(ema(history.close[a], p));
    if (cfg.rsi_period) ch.push_back(rsi(history.close[a], *cfg.rsi_period));
    if (cfg.macd_fast) {
      auto r = macd(history.close[a], *cfg.macd_fast, *cfg.macd_slow,
                    *cfg.macd_signal);
      ch.push_back(std::move(r.macd_line));
      ch.push_back(std::move(r.signal_line));
      ch.push_back(std::move(r.histogram));
    }
    for (const auto& name : extra_names) ch.push_back(history.extra.at(name)[a]);
  }

  FeatureMatrix f;
  const std::size_t out_days = n - first_day;
  f.values.resize(out_days, m * per_asset);
  f.calendar.assign(history.calendar.begin() + first_day,
                    history.calendar.end());
  for (std::size_t a = 0; a < m; ++a) {
    for (const auto& name : channels) {
      f.feature_names.push_back(history.assets[a] + ":" + name);
    }
    for (const auto& name : extra_names) {
      f.feature_names.push_back(history.assets[a] + ":" + name);
    }
  }

  // trailing z-score over days [t-win+1, t]; no future data enters
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t c = 0; c < per_asset; ++c) {
      const auto& series = raw[a][c];
      for (std::size_t t = first_day; t < n; ++t) {
        double mean = 0.0;
        for (int k = 0; k < win; ++k) mean += series[t - k];
        mean /= win;
        double var = 0.0;
        for (int k = 0; k < win; ++k) {
          const double d = series[t - k] - mean;
          var += d * d;
        }
        var /= win;
        const double sd = std::sqrt(var);
        // near-machine-precision deviation counts as a flat window
        const double floor = 1e-10 * std::max(1.0, std::abs(mean));
        const double z = sd > floor ? (series[t] - mean) / sd : 0.0;
        if (!std::isfinite(z)) {
          fail(Errc::BadRow, "non-finite feature for " + f.feature_names[a * per_asset + c]);
        }
        f.values(t - first_day, a * per_asset + c) = z;
      }
    }
  }
  return f;
}

std::size_t calendar_offset(const PriceHistory& history,
                            const FeatureMatrix& features) {
  if (features.calendar.empty()) fail(Errc::CalendarMismatch, "empty features");
  const auto& hc = history.calendar;
  auto it = std::find(hc.begin(), hc.end(), features.calendar.front());
  if (it == hc.end()) {
    fail(Errc::CalendarMismatch,
         "feature day " + features.calendar.front() + " not in price history");
  }
  const std::size_t off = it - hc.begin();
  if (features.calendar.size() > hc.size() - off) {
    fail(Errc::CalendarMismatch, "feature calendar overruns price history");
  }
  for (std::size_t i = 0; i < features.calendar.size(); ++i) {
    if (hc[off + i] != features.calendar[i]) {
      fail(Errc::CalendarMismatch, "calendar diverges at " + features.calendar[i]);
    }
  }
  return off;
}

PriceHistory select_assets(const PriceHistory& history,
                           const std::vector<int>& indices) {
  PriceHistory out;
  out.calendar = history.calendar;
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= history.num_assets()) {
      fail(Errc::UnknownAsset, "asset index " + std::to_string(i));
    }
    out.assets.push_back(history.assets[i]);
    out.open.push_back(history.open[i]);
    out.high.push_back(history.high[i]);
    out.low.push_back(history.low[i]);
    out.close.push_back(history.close[i]);
    out.volume.push_back(history.volume[i]);
  }
  for (const auto& [name, series] : history.extra) {
    auto& dst = out.extra[name];
    for (int i : indices) dst.push_back(series[i]);
  }
  return out;
}

FeatureMatrix select_assets(const FeatureMatrix& features,
                            const std::vector<int>& indices,
                            std::size_t num_assets) {
  const Eigen::Index dim = features.dim();
  if (num_assets == 0 || dim % static_cast<Eigen::Index>(num_assets) != 0) {
    fail(Errc::ShapeMismatch, "feature dim not divisible by asset count");
  }
  const Eigen::Index per = dim / static_cast<Eigen::Index>(num_assets);
  FeatureMatrix out;
  out.calendar = features.calendar;
  out.values.resize(features.values.rows(),
                    per * static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const int i = indices[j];
    if (i < 0 || static_cast<std::size_t>(i) >= num_assets) {
      fail(Errc::UnknownAsset, "asset index " + std::to_string(i));
    }
    out.values.middleCols(static_cast<Eigen::Index>(j) * per, per) =
        features.values.middleCols(static_cast<Eigen::Index>(i) * per, per);
    for (Eigen::Index c = 0; c < per; ++c) {
      out.feature_names.push_back(
          features.feature_names[static_cast<std::size_t>(i) * per + c]);
    }
  }
  return out;
}

Eigen::MatrixXd per_asset_features(const FeatureMatrix& features,
                                   std::size_t day, std::size_t num_assets) {
  if (day >= features.num_days()) fail(Errc::LengthMismatch, "day out of range");
  const Eigen::Index dim = features.dim();
  if (num_assets == 0 || dim % static_cast<Eigen::Index>(num_assets) != 0) {
    fail(Errc::ShapeMismatch, "feature dim not divisible by asset count");
  }
  const Eigen::Index per = dim / static_cast<Eigen::Index>(num_assets);
  Eigen::MatrixXd out(num_assets, per);
  for (std::size_t a = 0; a < num_assets; ++a) {
    out.row(a) = features.values.row(day).segment(a * per, per);
  }
  return out;
}

std::string feature_matrix_to_csv(const FeatureMatrix& features) {
  std::string out = "date";
  for (const auto& name : features.feature_names) out += "," + name;
  out += "\n";
  for (std::size_t d = 0; d < features.num_days(); ++d) {
    out += features.calendar[d];
    for (Eigen::Index c = 0; c < features.dim(); ++c) {
      out += "," + format_double(features.values(d, c));
    }
    out += "\n";
  }
  return out;
}

FeatureMatrix feature_matrix_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) fail(Errc::BadRow, "empty feature csv");
  const auto header = split_csv_line(strip_cr(line));
  if (header.empty() || header[0] != "date") {
    fail(Errc::MissingColumn, "date");
  }
  FeatureMatrix f;
  f.feature_names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(ss, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(Errc::BadRow, "feature row width mismatch at " +
                             (fields.empty() ? line : fields[0]));
    }
    f.calendar.push_back(fields[0]);
    std::vector<double> row(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      row[i - 1] = parse_double(fields[i]);
    }
    rows.push_back(std::move(row));
  }
  f.values.resize(rows.size(), f.feature_names.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) f.values(r, c) = rows[r][c];
  }
  return f;
}

std::string price_history_to_csv(const PriceHistory& history) {
  std::string out = "date,ticker,open,high,low,close,volume";
  for (const auto& [name, series] : history.extra) out += "," + name;
  out += "\n";
  for (std::size_t a = 0; a < history.num_assets(); ++a) {
    for (std::size_t d = 0; d < history.num_days(); ++d) {
      out += history.calendar[d] + "," + history.assets[a];
      out += "," + format_double(history.open[a][d]);
      out += "," + format_double(history.high[a][d]);
      out += "," + format_double(history.low[a][d]);
      out += "," + format_double(history.close[a][d]);
      out += "," + format_double(history.volume[a][d]);
      for (const auto& [name, series] : history.extra) {
        out += "," + format_double(series[a][d]);
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace rdnn
