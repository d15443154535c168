// SPDX-License-Identifier: Apache-2.0
#include "geosdm/geodata/dataset.hpp"

#include "geosdm/core/error.hpp"

namespace geosdm::geodata {

MultiModalDataset::MultiModalDataset(ObservationTable table, std::optional<PatchSource> patches, CubeSources cubes,
                                     LabelsMode mode, int num_classes)
    : table_(std::move(table)), cubes_(std::move(cubes)), mode_(mode), num_classes_(num_classes) {
  if (patches) {
    if (!patches->layers) throw Error(ErrorKind::missing_modality, "patch source has no layers");
    layers_ = patches->layers;
    extractor_.emplace(*layers_, patches->spec, patches->policy);
  }
  for (const auto& [name, set] : cubes_) {
    if (!set) throw Error(ErrorKind::missing_modality, "cube modality '" + name + "' not loaded");
    for (const auto& obs : table_.records()) {
      if (set->find(obs.survey_id) == nullptr) {
        throw Error(ErrorKind::missing_modality, "survey '" + obs.survey_id + "' missing from cube modality '" + name + "'");
      }
    }
  }
  if (mode_ == LabelsMode::train) {
    for (const auto& obs : table_.records()) {
      if (obs.species_ids.empty()) {
        throw Error(ErrorKind::data, "training survey '" + obs.survey_id + "' has no species");
      }
    }
  }
}

MultiModalSample MultiModalDataset::get(std::size_t index) const {
  if (index >= table_.size()) throw Error(ErrorKind::domain, "sample index " + std::to_string(index) + " out of range");
  const Observation& obs = table_[index];
  MultiModalSample s;
  s.survey_id = obs.survey_id;
  s.lon = obs.lon;
  s.lat = obs.lat;
  if (extractor_) s.patch = extractor_->extract(obs.lon, obs.lat);
  for (const auto& [name, set] : cubes_) s.cubes.emplace(name, *set->find(obs.survey_id));
  if (mode_ == LabelsMode::train) {
    s.label.assign(static_cast<std::size_t>(num_classes_), 0.0);
    for (int sp : obs.species_ids) s.label[static_cast<std::size_t>(sp)] = 1.0;
  }
  return s;
}

std::shared_ptr<MultiModalDataset> make_dataset(ObservationTable table, std::optional<PatchSource> patches,
                                                CubeSources cubes, LabelsMode mode, int num_classes) {
  return std::make_shared<MultiModalDataset>(std::move(table), std::move(patches), std::move(cubes), mode, num_classes);
}

}  // namespace geosdm::geodata
