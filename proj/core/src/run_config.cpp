#include "rdnn/run_config.hpp"

#include <algorithm>
#include <sstream>

#include "rdnn/errors.hpp"
#include "rdnn/io.hpp"

namespace rdnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(Errc::ConfigError, key + ": expected integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    fail(Errc::ConfigError, key + ": expected number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(Errc::ConfigError, key + ": expected unsigned integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(Errc::ConfigError, key + ": expected boolean, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_int(key, item));
  }
  return out;
}

}  // namespace

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  const std::string v = trim(value);
  if (key == "data.csv") {
    cfg.data_csv = v;
  } else if (key == "data.artifacts_dir") {
    cfg.artifacts_dir = v;
  } else if (key == "output.dir") {
    cfg.output_dir = v;
  } else if (key == "indicators.ema_periods") {
    cfg.indicators.ema_periods = to_int_list(key, v);
  } else if (key == "indicators.rsi_period") {
    if (v == "off") {
      cfg.indicators.rsi_period.reset();
    } else {
      cfg.indicators.rsi_period = to_int(key, v);
    }
  } else if (key == "indicators.macd") {
    if (v == "off") {
      cfg.indicators.macd_fast.reset();
      cfg.indicators.macd_slow.reset();
      cfg.indicators.macd_signal.reset();
    } else {
      const auto parts = to_int_list(key, v);
      if (parts.size() != 3) {
        fail(Errc::ConfigError, key + ": expected fast,slow,signal");
      }
      cfg.indicators.macd_fast = parts[0];
      cfg.indicators.macd_slow = parts[1];
      cfg.indicators.macd_signal = parts[2];
    }
  } else if (key == "indicators.normalization_window") {
    cfg.indicators.normalization_window = to_int(key, v);
  } else if (key == "env.initial_wealth") {
    cfg.env.initial_wealth = to_double(key, v);
  } else if (key == "env.commission_rate") {
    cfg.env.commission_rate = to_double(key, v);
  } else if (key == "env.risk_free_rate") {
    cfg.env.risk_free_rate = to_double(key, v);
  } else if (key == "policy.mode") {
    if (v == "weights") {
      cfg.policy.mode = PolicyMode::WeightHead;
    } else if (v == "shares") {
      cfg.policy.mode = PolicyMode::ShareHead;
    } else {
      fail(Errc::ConfigError, key + ": expected weights|shares");
    }
  } else if (key == "policy.dropout_rate") {
    cfg.policy.dropout_rate = to_double(key, v);
  } else if (key == "policy.hidden_sizes") {
    const auto sizes = to_int_list(key, v);
    if (sizes.empty() || sizes.size() > 3) {
      fail(Errc::ConfigError, key + ": expected 1..3 sizes");
    }
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      cfg.policy.hidden_sizes[i] = sizes[i];
    }
  } else if (key == "policy.output_activation") {
    if (v == "sigmoid") {
      cfg.policy.output_activation = OutputActivation::SigmoidNormalized;
    } else if (v == "softmax") {
      cfg.policy.output_activation = OutputActivation::Softmax;
    } else {
      fail(Errc::ConfigError, key + ": expected sigmoid|softmax");
    }
  } else if (key == "policy.max_shares") {
    cfg.policy.max_shares = to_double(key, v);
  } else if (key == "train.learning_rate") {
    cfg.train.learning_rate = to_double(key, v);
  } else if (key == "train.batch_size") {
    cfg.train.batch_size = to_int(key, v);
  } else if (key == "train.epochs") {
    cfg.train.epochs = to_int(key, v);
  } else if (key == "train.tau") {
    cfg.train.truncation_depth = to_int(key, v);
  } else if (key == "train.utility") {
    if (v == "log") {
      cfg.train.utility = UtilityKind::CumulativeLogReturn;
    } else if (v == "sharpe") {
      cfg.train.utility = UtilityKind::SharpeRatio;
    } else {
      fail(Errc::ConfigError, key + ": expected log|sharpe");
    }
  } else if (key == "train.episode_length") {
    cfg.train.episode_length = to_int(key, v);
  } else if (key == "train.gradient_clip") {
    if (v == "off") {
      cfg.train.gradient_clip.reset();
    } else {
      cfg.train.gradient_clip = to_double(key, v);
    }
  } else if (key == "train.start") {
    cfg.train_start = v;
  } else if (key == "train.end") {
    cfg.train_end = v;
  } else if (key == "test.start") {
    cfg.test_start = v;
  } else if (key == "test.end") {
    cfg.test_end = v;
  } else if (key == "backtest.baseline") {
    cfg.baseline_ticker = v;
  } else if (key == "selection.enabled") {
    cfg.selection_enabled = to_bool(key, v);
  } else if (key == "selection.basket_size") {
    cfg.selection.basket_size = to_int(key, v);
  } else if (key == "selection.mode") {
    if (v == "free") {
      cfg.selection.mode = SelectionMode::Free;
    } else if (v == "turnover") {
      cfg.selection.mode = SelectionMode::Turnover;
    } else {
      fail(Errc::ConfigError, key + ": expected free|turnover");
    }
  } else if (key == "selection.pool") {
    cfg.pool_size = v == "all" ? 0 : to_int(key, v);
  } else if (key == "selection.turnover_cap") {
    cfg.selection.turnover_cap = to_double(key, v);
  } else if (key == "selection.mask_hidden") {
    cfg.selection.mask_hidden = to_int(key, v);
  } else if (key == "selection.mask_iterations") {
    cfg.mask_iterations = to_int(key, v);
  } else if (key == "seed") {
    cfg.seed = to_u64(key, v);
  } else {
    fail(Errc::ConfigError, "unknown key '" + key + "'");
  }
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(Errc::ConfigError,
           "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_override(cfg, key, value);
    } catch (const Error& e) {
      fail(Errc::ConfigError,
           "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path));
}

void RunConfig::validate() const {
  indicators.validate();
  policy.validate();
  if (train_start && train_end && *train_start > *train_end) {
    fail(Errc::ConfigError, "train range start after end");
  }
  if (test_start && test_end && *test_start > *test_end) {
    fail(Errc::ConfigError, "test range start after end");
  }
  // training must precede and not overlap the held-out range
  if (train_end && test_start && !(*train_end < *test_start)) {
    fail(Errc::ConfigError, "train range must end before the test range");
  }
  if (selection.turnover_cap <= 0.0 || selection.turnover_cap > 1.0) {
    fail(Errc::ConfigError, "turnover cap outside (0, 1]");
  }
  if (selection.basket_size < 1) {
    fail(Errc::ConfigError, "basket size must be >= 1");
  }
}

}  // namespace rdnn
