// SPDX-License-Identifier: Apache-2.0
#include "geosdm/split/split.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "geosdm/core/error.hpp"
#include "geosdm/core/rng.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::split {

Cell cell_index(double lon, double lat, double cell_size) {
  return {static_cast<long long>(std::floor((lon + 180.0) / cell_size)),
          static_cast<long long>(std::floor((lat + 90.0) / cell_size))};
}

std::size_t SpatialSplit::count(Partition p) const {
  std::size_t n = 0;
  for (const auto& [_, part] : assignment) n += part == p ? 1 : 0;
  return n;
}

double SpatialSplit::val_fraction() const {
  return assignment.empty() ? 0.0 : static_cast<double>(count(Partition::val)) / static_cast<double>(assignment.size());
}

SpatialSplit block_holdout(const geodata::ObservationTable& table, double cell_size, double target_val_fraction,
                           std::uint64_t seed) {
  if (table.empty()) throw Error(ErrorKind::degenerate_split, "empty observation table");
  if (!(cell_size > 0.0)) throw Error(ErrorKind::validation, "cell_size must be > 0");
  if (!(target_val_fraction > 0.0 && target_val_fraction < 1.0)) {
    throw Error(ErrorKind::validation, "target_val_fraction must lie in (0, 1)");
  }

  SpatialSplit out;
  out.cell_size = cell_size;
  out.seed = seed;
  out.target_val_fraction = target_val_fraction;

  std::map<Cell, std::vector<std::string>> members;
  for (const auto& obs : table.records()) {
    const Cell c = cell_index(obs.lon, obs.lat, cell_size);
    out.cell_of[obs.survey_id] = c;
    members[c].push_back(obs.survey_id);
  }
  if (members.size() < 2) {
    throw Error(ErrorKind::degenerate_split, "all surveys fall in a single cell; cannot form both partitions");
  }

  std::vector<Cell> cells;
  cells.reserve(members.size());
  for (const auto& [c, _] : members) cells.push_back(c);
  Rng rng(derive_seed(seed, streams::split));
  rng.shuffle(std::span<Cell>(cells));

  const double total = static_cast<double>(table.size());
  std::size_t selected = 0;
  std::size_t val_points = 0;
  while (selected < cells.size() && static_cast<double>(val_points) / total < target_val_fraction) {
    val_points += members[cells[selected]].size();
    ++selected;
  }
  if (selected == cells.size()) {
    throw Error(ErrorKind::degenerate_split, "validation zones would absorb every cell");
  }

  for (const auto& obs : table.records()) out.assignment[obs.survey_id] = Partition::train;
  for (std::size_t i = 0; i < selected; ++i) {
    for (const auto& id : members[cells[i]]) out.assignment[id] = Partition::val;
  }
  return out;
}

void save_split(const SpatialSplit& split, const std::filesystem::path& path) {
  std::string out = "surveyId,partition,cx,cy\n";
  for (const auto& [id, part] : split.assignment) {
    const auto it = split.cell_of.find(id);
    const Cell c = it == split.cell_of.end() ? Cell{} : it->second;
    out += id + "," + (part == Partition::train ? "train" : "val") + "," + std::to_string(c.cx) + "," +
           std::to_string(c.cy) + "\n";
  }
  write_text(path, out);
}

SpatialSplit parse_split(std::string_view text, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || split_fields(line, ',') != std::vector<std::string>{"surveyId", "partition", "cx", "cy"}) {
    throw Error(ErrorKind::format, std::string(source) + ": header must be surveyId,partition,cx,cy");
  }
  SpatialSplit split;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line, ',');
    const std::string where = std::string(source) + " row " + std::to_string(row);
    if (f.size() != 4) throw Error(ErrorKind::format, where + ": expected 4 fields");
    Partition p;
    if (f[1] == "train") {
      p = Partition::train;
    } else if (f[1] == "val" || f[1] == "test") {
      p = Partition::val;
    } else {
      throw Error(ErrorKind::format, where + ": unknown partition '" + f[1] + "'");
    }
    if (!split.assignment.emplace(f[0], p).second) throw Error(ErrorKind::format, where + ": duplicate survey '" + f[0] + "'");
    split.cell_of[f[0]] = Cell{parse_int(f[2], where + " cx"), parse_int(f[3], where + " cy")};
  }
  return split;
}

SpatialSplit load_split(const std::filesystem::path& path) { return parse_split(read_text(path), path.string()); }

std::pair<geodata::ObservationTable, geodata::ObservationTable> apply_split(const geodata::ObservationTable& table,
                                                                          const SpatialSplit& split) {
  auto part_of = [&](const geodata::Observation& o) {
    const auto it = split.assignment.find(o.survey_id);
    if (it == split.assignment.end()) throw Error(ErrorKind::data, "survey '" + o.survey_id + "' absent from split");
    return it->second;
  };
  return {table.filter([&](const auto& o) { return part_of(o) == Partition::train; }),
          table.filter([&](const auto& o) { return part_of(o) == Partition::val; })};
}

}  // namespace geosdm::split
