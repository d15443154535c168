// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geosdm/core/tensor.hpp"
#include "geosdm/modelkit/layers.hpp"

namespace geosdm::engine {

struct AdamWConfig {
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct Moments {
  Tensor m;
  Tensor v;
};

/// Decoupled weight decay Adam. Moments are keyed by parameter name so a
/// checkpoint can carry them across processes.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update with learning rate `lr`. Returns false, leaving
  /// weights and moments untouched, when any gradient is non-finite.
  bool step(const std::vector<modelkit::ParamRef>& params, double lr);

  const AdamWConfig& config() const noexcept { return cfg_; }
  std::int64_t steps() const noexcept { return steps_; }
  std::int64_t skipped() const noexcept { return skipped_; }
  const std::map<std::string, Moments>& moments() const noexcept { return moments_; }

  void restore(std::map<std::string, Moments> moments, std::int64_t steps);

 private:
  AdamWConfig cfg_;
  std::map<std::string, Moments> moments_;
  std::int64_t steps_ = 0;
  std::int64_t skipped_ = 0;
};

}  // namespace geosdm::engine
