// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

#include "geosdm/modelkit/encoders.hpp"

namespace geosdm::modelkit {

/// Resizes the first convolution to `new_channels` inputs. Pretrained
/// models get every new channel filter set to the mean of the old channel
/// filters scaled by C_old / C_new, so a channel-constant input keeps its
/// first-layer pre-activation; other models get a fresh fan-in init.
/// Unchanged channel count leaves the model untouched.
FeatureExtractor modify_first_layer(FeatureExtractor model, std::size_t new_channels, std::uint64_t seed = 0);

/// Replaces the final affine map with a freshly initialized one of width
/// `new_dim`. Throws Error(no_head) for a headless model.
FeatureExtractor modify_last_layer(FeatureExtractor model, std::size_t new_dim, std::uint64_t seed = 0);

/// Truncates before the final affine map. Already headless: no-op, warns.
FeatureExtractor strip_head(FeatureExtractor model);

/// Appends a fresh affine head of width `out_dim` (inverse of strip_head up to weights).
FeatureExtractor add_head(FeatureExtractor model, std::size_t out_dim, std::uint64_t seed = 0);

}  // namespace geosdm::modelkit
