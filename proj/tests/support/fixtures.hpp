// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "geosdm/core/rng.hpp"
#include "geosdm/geodata/observations.hpp"
#include "geosdm/geodata/raster.hpp"

namespace geosdm::testing {

/// 4 x 4 layer holding 0..15 row-major, origin (0, 4), unit pixels, EPSG:4326.
inline geodata::RasterLayer counting_layer(const std::string& name = "count") {
  geodata::RasterLayer l;
  l.name = name;
  l.width = 4;
  l.height = 4;
  l.origin_x = 0.0;
  l.origin_y = 4.0;
  l.pixel_size_x = 1.0;
  l.pixel_size_y = -1.0;
  for (int i = 0; i < 16; ++i) l.values.push_back(static_cast<float>(i));
  return l;
}

inline geodata::RasterLayer random_layer(Rng& rng, const std::string& name) {
  geodata::RasterLayer l;
  l.name = name;
  l.width = 5 + rng.below(40);
  l.height = 5 + rng.below(40);
  l.origin_x = rng.uniform(-20.0, 20.0);
  l.origin_y = rng.uniform(20.0, 60.0);
  l.pixel_size_x = rng.uniform(0.01, 0.5);
  l.pixel_size_y = -rng.uniform(0.01, 0.5);
  l.values.resize(l.width * l.height);
  for (auto& v : l.values) v = static_cast<float>(rng.normal() * 10.0);
  return l;
}

/// Uniform random table over a lon/lat box with 1-3 species per survey.
inline geodata::ObservationTable random_table(Rng& rng, std::size_t n, int classes, double lon0, double lon1,
                                              double lat0, double lat1) {
  std::vector<geodata::Observation> rows;
  for (std::size_t i = 0; i < n; ++i) {
    geodata::Observation o;
    o.survey_id = "p" + std::to_string(i);
    o.lon = rng.uniform(lon0, lon1);
    o.lat = rng.uniform(lat0, lat1);
    const std::size_t k = 1 + rng.below(3);
    for (std::size_t j = 0; j < k; ++j) o.species_ids.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(classes))));
    std::sort(o.species_ids.begin(), o.species_ids.end());
    o.species_ids.erase(std::unique(o.species_ids.begin(), o.species_ids.end()), o.species_ids.end());
    rows.push_back(std::move(o));
  }
  return geodata::ObservationTable(std::move(rows));
}

}  // namespace geosdm::testing
