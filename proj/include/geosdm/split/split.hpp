// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "geosdm/geodata/observations.hpp"

namespace geosdm::split {

inline constexpr double kDefaultCellSize = 1.0 / 6.0;  // 10 arcminutes
inline constexpr double kDefaultValFraction = 0.15;

enum class Partition { train, val };

struct Cell {
  long long cx = 0;
  long long cy = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Grid cell on a fixed global origin (-180, -90).
Cell cell_index(double lon, double lat, double cell_size);

struct SpatialSplit {
  std::map<std::string, Partition> assignment;
  std::map<std::string, Cell> cell_of;
  double cell_size = kDefaultCellSize;
  std::uint64_t seed = 0;
  double target_val_fraction = kDefaultValFraction;

  std::size_t size() const noexcept { return assignment.size(); }
  std::size_t count(Partition p) const;
  double val_fraction() const;
};

/// Occupied cells (in (cx, cy) order) are shuffled with a seeded generator,
/// then accumulated into the validation set until its point share first
/// reaches target_val_fraction. Throws Error(degenerate_split) when the
/// table occupies fewer than two cells or no train cell would remain.
SpatialSplit block_holdout(const geodata::ObservationTable& table, double cell_size = kDefaultCellSize,
                           double target_val_fraction = kDefaultValFraction, std::uint64_t seed = 0);

/// CSV surveyId,partition,cx,cy. "test" loads as an alias of val.
void save_split(const SpatialSplit& split, const std::filesystem::path& path);
SpatialSplit load_split(const std::filesystem::path& path);
SpatialSplit parse_split(std::string_view text, std::string_view source = "split");

/// (train, val) subsets of `table`; every survey must be assigned.
std::pair<geodata::ObservationTable, geodata::ObservationTable> apply_split(const geodata::ObservationTable& table,
                                                                          const SpatialSplit& split);

}  // namespace geosdm::split
