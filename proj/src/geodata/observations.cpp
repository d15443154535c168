// SPDX-License-Identifier: Apache-2.0
#include "geosdm/geodata/observations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::geodata {

ObservationTable::ObservationTable(std::vector<Observation> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].survey_id, i).second) {
      throw Error(ErrorKind::data, "duplicate survey_id '" + records_[i].survey_id + "'");
    }
  }
}

std::optional<std::size_t> ObservationTable::find(std::string_view survey_id) const {
  const auto it = index_.find(std::string(survey_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ObservationTable parse_observations(std::string_view text, int num_classes, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::format, std::string(source) + ": empty file");

  const auto header = split_fields(line, ',');
  static constexpr std::array<const char*, 4> required{"surveyId", "lon", "lat", "speciesId"};
  std::array<std::size_t, 4> col{};
  for (std::size_t k = 0; k < required.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), required[k]);
    if (it == header.end()) {
      throw Error(ErrorKind::format, std::string(source) + ": missing column '" + required[k] + "'");
    }
    col[k] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<Observation> records;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, ',');
    const std::string where = std::string(source) + " row " + std::to_string(row);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::format, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    const std::string& id = fields[col[0]];
    if (id.empty()) throw Error(ErrorKind::data, where + ": empty surveyId");
    const double lon = parse_double(fields[col[1]], where + " lon");
    const double lat = parse_double(fields[col[2]], where + " lat");
    if (!(lon >= -180.0 && lon <= 180.0)) throw Error(ErrorKind::data, where + ": lon " + fields[col[1]] + " outside [-180, 180]");
    if (!(lat >= -90.0 && lat <= 90.0)) throw Error(ErrorKind::data, where + ": lat " + fields[col[2]] + " outside [-90, 90]");

    auto [it, inserted] = index.emplace(id, records.size());
    if (inserted) {
      records.push_back(Observation{id, lon, lat, {}});
    } else if (records[it->second].lon != lon || records[it->second].lat != lat) {
      throw Error(ErrorKind::data, where + ": survey '" + id + "' repeated with different coordinates");
    }

    const std::string& sp = fields[col[3]];
    if (sp.empty()) continue;
    const long long species = parse_int(sp, where + " speciesId");
    if (species < 0 || species >= num_classes) {
      throw Error(ErrorKind::data, where + ": speciesId " + sp + " outside [0, " + std::to_string(num_classes) + ")");
    }
    records[it->second].species_ids.push_back(static_cast<int>(species));
  }

  for (auto& r : records) {
    std::sort(r.species_ids.begin(), r.species_ids.end());
    r.species_ids.erase(std::unique(r.species_ids.begin(), r.species_ids.end()), r.species_ids.end());
  }
  return ObservationTable(std::move(records));
}

ObservationTable load_observations(const std::filesystem::path& path, int num_classes) {
  return parse_observations(read_text(path), num_classes, path.string());
}

void save_observations(const ObservationTable& table, const std::filesystem::path& path) {
  std::string out = "surveyId,lon,lat,speciesId\n";
  for (const auto& r : table.records()) {
    const std::string prefix = r.survey_id + "," + format_double(r.lon) + "," + format_double(r.lat) + ",";
    if (r.species_ids.empty()) out += prefix + "\n";
    for (int s : r.species_ids) out += prefix + std::to_string(s) + "\n";
  }
  write_text(path, out);
}

}  // namespace geosdm::geodata
