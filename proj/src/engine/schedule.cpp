// SPDX-License-Identifier: Apache-2.0
#include "geosdm/engine/schedule.hpp"

#include <cmath>
#include <numbers>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::engine {

ScheduleSpec schedule_spec_for(const config::ExperimentConfig& cfg) {
  return {cfg.optimizer.lr, cfg.optimizer.scheduler.eta_min, cfg.optimizer.scheduler.t_max};
}

double cosine_lr(std::int64_t t, const ScheduleSpec& spec) {
  if (spec.t_max < 1) throw Error(ErrorKind::validation, "scheduler t_max must be >= 1");
  if (!(spec.eta_min <= spec.eta_max)) throw Error(ErrorKind::validation, "scheduler eta_min exceeds eta_max");
  if (t < 0 || t > spec.t_max) {
    const std::int64_t clamped = t < 0 ? 0 : spec.t_max;
    log().warn("schedule step {} outside [0, {}], clamped to {}", t, spec.t_max, clamped);
    t = clamped;
  }
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(spec.t_max);
  return spec.eta_min + (spec.eta_max - spec.eta_min) * (1.0 + std::cos(phase)) / 2.0;
}

}  // namespace geosdm::engine
