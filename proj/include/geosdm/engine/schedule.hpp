// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "geosdm/config/config.hpp"

namespace geosdm::engine {

struct ScheduleSpec {
  double eta_max = 2.5e-4;
  double eta_min = 0.0;
  std::int64_t t_max = 25;
};

ScheduleSpec schedule_spec_for(const config::ExperimentConfig& cfg);

/// Cosine annealing on an epoch clock. Throws Error(validation) for an
/// invalid spec; t outside [0, t_max] is clamped with a warning.
double cosine_lr(std::int64_t t, const ScheduleSpec& spec);

}  // namespace geosdm::engine
