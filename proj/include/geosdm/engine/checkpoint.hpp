// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>

#include "geosdm/core/tensor.hpp"
#include "geosdm/engine/optimizer.hpp"
#include "geosdm/modelkit/mme.hpp"

namespace geosdm::engine {

struct TrainState {
  std::int64_t epoch = 0;  // epochs completed
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::int64_t global_step = 0;
  std::int64_t rng_seed = 0;
  double lr_current = 0.0;
  friend bool operator==(const TrainState&, const TrainState&) = default;
};

/// Single-file container: weights by parameter path, optimizer moments,
/// training state and digests.
///
/// Layout: "GEOSDMCK", u32 version, u64 header length, JSON header, then
/// little-endian float64 payload addressed by element offsets.
struct Checkpoint {
  std::map<std::string, Tensor> weights;
  std::map<std::string, Moments> moments;
  std::int64_t optimizer_steps = 0;
  TrainState state;
  std::string config_digest;
  std::string architecture_digest;
};

Checkpoint capture_checkpoint(modelkit::MultiModalModel& model, const AdamW* optimizer, const TrainState& state,
                              const std::string& config_digest);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws Error(format) for a damaged file, Error(io) when unreadable.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies weights into `model`. Throws Error(checkpoint_mismatch) naming
/// missing, unexpected and differently shaped tensors, or the digests when
/// only the structure differs.
void restore_weights(modelkit::MultiModalModel& model, const Checkpoint& ckpt);

/// Strict-improvement tracker for best.ckpt.
class CheckpointTracker {
 public:
  /// True when `val_loss` beats every value seen so far.
  bool update(double val_loss, std::int64_t epoch);
  double best() const noexcept { return best_; }
  std::int64_t best_epoch() const noexcept { return best_epoch_; }

 private:
  double best_ = std::numeric_limits<double>::infinity();
  std::int64_t best_epoch_ = -1;
};

}  // namespace geosdm::engine
