// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geosdm/config/config.hpp"
#include "geosdm/geodata/dataset.hpp"
#include "geosdm/modelkit/mme.hpp"
#include "geosdm/split/split.hpp"

namespace geosdm::cli {

/// Everything the configured data section points at, loaded once.
struct LoadedData {
  geodata::ObservationTable table;
  std::optional<geodata::PatchSource> patches;
  geodata::CubeSources cubes;
};

LoadedData load_data(const config::ExperimentConfig& cfg);

/// Input width of each available modality: patch channels, cube bands, 2
/// for "location".
std::vector<std::pair<std::string, std::size_t>> available_modalities(const LoadedData& data);

/// Encoder entries after defaults: one micro_conv2d for the patch and one
/// micro_conv3d per cube modality when the config lists none.
std::vector<config::EncoderEntry> resolved_encoders(const config::ExperimentConfig& cfg, const LoadedData& data);

/// Logit count of the model head: 1 for a binary task, else num_classes.
std::size_t output_width(const config::ExperimentConfig& cfg);

/// Registry lookup, surgery requests, then fusion (mme) or a lone classifier
/// (single). Seeds derive from run.seed on the init stream.
modelkit::MultiModalModel build_model(const config::ExperimentConfig& cfg, const LoadedData& data);

/// The configured split file, or a fresh block holdout of the table.
split::SpatialSplit resolve_split(const config::ExperimentConfig& cfg, const geodata::ObservationTable& table);

/// Dataset over `table` exposing only the modalities `model` consumes.
std::shared_ptr<geodata::MultiModalDataset> dataset_for(const config::ExperimentConfig& cfg, const LoadedData& data,
                                                        const modelkit::MultiModalModel& model,
                                                        geodata::ObservationTable table, geodata::LabelsMode mode);

}  // namespace geosdm::cli
