#ifndef RLTRACK_CHECKPOINT_HPP
#define RLTRACK_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rltrack/network.hpp"

namespace rltrack {

// Versioned binary container for parameters, optionally extended with the
// optimizer state needed to resume training. Round-trips bit-exactly.
struct Checkpoint {
  std::uint64_t seed = 0;
  ParamStore params;

  bool has_trainer_state = false;
  ParamStore adam_m, adam_v;
  std::int64_t adam_step = 0;
  std::int32_t next_epoch = 0;
  double best_reward = 0.0;
  std::int32_t epochs_since_best = 0;
  std::vector<double> history;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rltrack

#endif
