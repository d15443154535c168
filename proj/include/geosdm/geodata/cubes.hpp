// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "geosdm/geodata/observations.hpp"
#include "geosdm/geodata/raster.hpp"

namespace geosdm::geodata {

/// Axis order is (bands, steps-per-year, years).
struct CubeShape {
  std::size_t bands = 0;
  std::size_t steps = 0;
  std::size_t years = 0;

  std::size_t numel() const noexcept { return bands * steps * years; }
  friend bool operator==(const CubeShape&, const CubeShape&) = default;
};

struct TimeSeriesCube {
  std::string survey_id;
  CubeShape shape;
  std::vector<float> values;  // row-major over (band, step, year)

  float at(std::size_t b, std::size_t q, std::size_t y) const {
    return values[(b * shape.steps + q) * shape.years + y];
  }
};

/// One cube modality: every survey shares the shape and band names.
struct CubeSet {
  CubeShape shape;
  std::vector<std::string> band_names;
  std::vector<std::string> surveys;  // payload order
  std::unordered_map<std::string, TimeSeriesCube> cubes;

  const TimeSeriesCube* find(const std::string& survey_id) const;
};

/// Manifest JSON {"surveys", "shape": [B, Q, Y], "band_names", "payload"}
/// next to a float32 little-endian payload, one B*Q*Y block per survey in
/// manifest order. NaN entries are imputed to 0 and counted in the log.
CubeSet load_cubes(const std::filesystem::path& manifest_path);
void save_cubes(const CubeSet& cubes, const std::filesystem::path& manifest_path);

/// Single-pixel extraction of every (band, step, year) layer at each
/// survey location. Throws Error(coverage) listing missing combinations.
CubeSet build_time_series_cubes(const std::vector<TaggedLayer>& layers, const ObservationTable& table,
                                CubeShape shape, std::vector<std::string> band_names = {});

}  // namespace geosdm::geodata
