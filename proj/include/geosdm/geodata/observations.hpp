// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geosdm::geodata {

struct Observation {
  std::string survey_id;
  double lon = 0.0;
  double lat = 0.0;
  std::vector<int> species_ids;  // sorted, unique
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Surveys in first-appearance order with unique ids.
class ObservationTable {
 public:
  ObservationTable() = default;
  explicit ObservationTable(std::vector<Observation> records);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const Observation& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<Observation>& records() const noexcept { return records_; }

  std::optional<std::size_t> find(std::string_view survey_id) const;

  template <typename Pred>
  ObservationTable filter(Pred keep) const {
    std::vector<Observation> kept;
    for (const auto& r : records_) {
      if (keep(r)) kept.push_back(r);
    }
    return ObservationTable(std::move(kept));
  }

 private:
  std::vector<Observation> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// CSV with header surveyId,lon,lat,speciesId (any column order), one row
/// per (survey, species) pair. An empty speciesId cell declares a survey
/// with no recorded species (prediction inputs).
ObservationTable parse_observations(std::string_view text, int num_classes, std::string_view source = "observations");
ObservationTable load_observations(const std::filesystem::path& path, int num_classes);
void save_observations(const ObservationTable& table, const std::filesystem::path& path);

}  // namespace geosdm::geodata
