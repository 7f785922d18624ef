#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rdnn/env.hpp"
#include "rdnn/market_data.hpp"
#include "rdnn/policy.hpp"
#include "rdnn/selection.hpp"
#include "rdnn/training.hpp"

namespace rdnn {

// Flat `key = value` configuration with dotted sections (see README for the
// grammar). All randomness derives from `seed`.
struct RunConfig {
  std::string data_csv;
  std::string artifacts_dir = "out";
  std::string output_dir = "out";

  IndicatorConfig indicators;
  EnvConfig env;
  PolicyConfig policy;
  TrainConfig train;

  bool selection_enabled = false;
  SelectionConfig selection;
  int pool_size = 0;  // 0 = every asset in the data
  int mask_iterations = 50;

  std::optional<std::string> train_start, train_end;
  std::optional<std::string> test_start, test_end;
  std::string baseline_ticker;

  std::uint64_t seed = 42;

  // sub-seeds derived from the root seed
  std::uint64_t policy_seed() const { return seed; }
  std::uint64_t train_seed() const { return seed + 1; }
  std::uint64_t mask_seed() const { return seed + 2; }

  void validate() const;  // throws ConfigError
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Applies one `section.key=value` override on top of a parsed config.
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);

}  // namespace rdnn
