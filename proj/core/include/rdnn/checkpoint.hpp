#pragma once

#include <string>

#include "rdnn/policy.hpp"
#include "rdnn/selection.hpp"

namespace rdnn {

// Versioned policy snapshot. JSON round-trips are bit-exact: doubles are
// emitted as shortest representations that parse back to the same value.
struct Checkpoint {
  PolicyConfig policy;
  int feature_dim = 0;
  int num_assets = 0;
  PolicyParameters params;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string mask_checkpoint_to_json(const MaskParameters& params,
                                    std::uint64_t seed);
MaskParameters mask_checkpoint_from_json(const std::string& text);

}  // namespace rdnn
