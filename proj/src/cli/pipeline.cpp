// SPDX-License-Identifier: Apache-2.0
#include "geosdm/cli/pipeline.hpp"

#include <algorithm>

#include "geosdm/core/error.hpp"
#include "geosdm/core/rng.hpp"
#include "geosdm/core/util.hpp"
#include "geosdm/geodata/cubes.hpp"
#include "geosdm/geodata/raster.hpp"
#include "geosdm/modelkit/encoders.hpp"
#include "geosdm/modelkit/surgery.hpp"

namespace geosdm::cli {

using config::EncoderEntry;
using config::ExperimentConfig;

LoadedData load_data(const ExperimentConfig& cfg) {
  LoadedData data;
  data.table = geodata::load_observations(cfg.data.observations, cfg.task.num_classes);
  if (cfg.data.rasters) {
    const auto manifest = geodata::load_raster_manifest(*cfg.data.rasters);
    auto layers = std::make_shared<std::vector<geodata::RasterLayer>>(geodata::load_patch_layers(manifest));
    if (!layers->empty()) {
      geodata::PatchSpec spec;
      spec.side = static_cast<std::size_t>(cfg.data.patch_size);
      for (const auto& layer : *layers) {
        spec.layer_names.push_back(layer.name);
        if (cfg.data.normalize) spec.normalize.push_back(geodata::layer_statistics(layer));
      }
      data.patches = geodata::PatchSource{std::move(layers), std::move(spec), geodata::ExtentPolicy::error};
    }
  }
  for (const auto& [name, path] : cfg.data.cubes) {
    data.cubes.emplace(name, std::make_shared<const geodata::CubeSet>(geodata::load_cubes(path)));
  }
  return data;
}

std::vector<std::pair<std::string, std::size_t>> available_modalities(const LoadedData& data) {
  std::vector<std::pair<std::string, std::size_t>> out;
  if (data.patches) out.emplace_back("patch", data.patches->spec.layer_names.size());
  for (const auto& [name, set] : data.cubes) out.emplace_back(name, set->shape.bands);
  out.emplace_back("location", 2);
  return out;
}

std::vector<EncoderEntry> resolved_encoders(const ExperimentConfig& cfg, const LoadedData& data) {
  if (!cfg.model.encoders.empty()) return cfg.model.encoders;
  std::vector<EncoderEntry> out;
  if (data.patches) {
    EncoderEntry e;
    e.modality = "patch";
    e.name = "micro_conv2d";
    out.push_back(e);
  }
  for (const auto& [name, set] : data.cubes) {
    EncoderEntry e;
    e.modality = name;
    e.name = "micro_conv3d";
    out.push_back(e);
  }
  if (out.empty()) throw Error(ErrorKind::validation, "model: no encoders configured and no patch or cube data to infer from");
  return out;
}

std::size_t output_width(const ExperimentConfig& cfg) {
  return cfg.task.type == config::TaskType::binary ? 1 : static_cast<std::size_t>(cfg.task.num_classes);
}

modelkit::MultiModalModel build_model(const ExperimentConfig& cfg, const LoadedData& data) {
  const auto available = available_modalities(data);
  const auto entries = resolved_encoders(cfg, data);
  const auto seed = static_cast<std::uint64_t>(cfg.run.seed);
  const std::size_t outputs = output_width(cfg);

  std::vector<modelkit::Branch> branches;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto it = std::find_if(available.begin(), available.end(), [&](const auto& a) { return a.first == e.modality; });
    if (it == available.end()) {
      std::string names;
      for (const auto& a : available) names += (names.empty() ? "" : ", ") + a.first;
      throw Error(ErrorKind::missing_modality,
                  "model.encoders[" + std::to_string(i) + "]: modality '" + e.modality + "' not in data (have " + names + ")");
    }
    for (const auto& b : branches) {
      if (b.modality == e.modality) throw Error(ErrorKind::validation, "model.encoders: modality '" + e.modality + "' listed twice");
    }
    const std::size_t data_channels = it->second;
    const std::uint64_t enc_seed = derive_seed(seed, streams::init, i);

    modelkit::EncoderSpec spec;
    spec.provider = e.provider.empty() ? cfg.model.provider : e.provider;
    spec.name = e.name;
    spec.input_channels = e.input_channels ? static_cast<std::size_t>(*e.input_channels) : data_channels;
    spec.embedding_dim = static_cast<std::size_t>(e.embedding_dim);
    spec.pretrained = e.pretrained;
    spec.options = e.options;
    modelkit::FeatureExtractor enc = modelkit::build_encoder(spec, enc_seed);

    const std::size_t want_channels =
        e.modifiers.input_channels ? static_cast<std::size_t>(*e.modifiers.input_channels) : data_channels;
    if (want_channels != enc.input_channels()) enc = modelkit::modify_first_layer(std::move(enc), want_channels, enc_seed + 1);
    if (enc.input_channels() != data_channels) {
      throw Error(ErrorKind::validation, "model.encoders[" + std::to_string(i) + "]: encoder takes " +
                                             std::to_string(enc.input_channels()) + " channels but '" + e.modality +
                                             "' has " + std::to_string(data_channels));
    }
    if (e.modifiers.output_dim) {
      enc = modelkit::modify_last_layer(std::move(enc), static_cast<std::size_t>(*e.modifiers.output_dim), enc_seed + 2);
    }
    if (e.modifiers.strip_head) enc = modelkit::strip_head(std::move(enc));
    branches.push_back({e.modality, std::move(enc)});
  }

  if (cfg.model.architecture == "single") {
    if (branches.size() != 1) {
      throw Error(ErrorKind::validation, "model.architecture single needs exactly one encoder, got " +
                                             std::to_string(branches.size()));
    }
    auto& enc = branches.front().encoder;
    const std::uint64_t head_seed = derive_seed(seed, streams::init, 1000);
    if (!enc.has_head()) {
      enc = modelkit::add_head(std::move(enc), outputs, head_seed);
    } else if (enc.output_dim() != outputs) {
      enc = modelkit::modify_last_layer(std::move(enc), outputs, head_seed);
    }
    return modelkit::build_single(std::move(branches.front()));
  }

  modelkit::FusionSpec fusion;
  for (const auto& b : branches) fusion.modality_dims.push_back(b.encoder.output_dim());
  fusion.dropout_p = cfg.model.dropout;
  fusion.hidden_dim = static_cast<std::size_t>(cfg.model.hidden_dim);
  fusion.num_classes = outputs;
  return modelkit::build_mme(std::move(branches), fusion, derive_seed(seed, streams::init, 1000));
}

split::SpatialSplit resolve_split(const ExperimentConfig& cfg, const geodata::ObservationTable& table) {
  if (cfg.data.split) return split::load_split(*cfg.data.split);
  return split::block_holdout(table, cfg.data.split_cell_size, cfg.data.val_fraction,
                              static_cast<std::uint64_t>(cfg.run.seed));
}

std::shared_ptr<geodata::MultiModalDataset> dataset_for(const ExperimentConfig& cfg, const LoadedData& data,
                                                        const modelkit::MultiModalModel& model,
                                                        geodata::ObservationTable table, geodata::LabelsMode mode) {
  const auto used = model.modalities();
  auto uses = [&](const std::string& m) { return std::find(used.begin(), used.end(), m) != used.end(); };
  std::optional<geodata::PatchSource> patches;
  if (uses("patch")) patches = data.patches;
  geodata::CubeSources cubes;
  for (const auto& [name, set] : data.cubes) {
    if (uses(name)) cubes.emplace(name, set);
  }
  return geodata::make_dataset(std::move(table), std::move(patches), std::move(cubes), mode, cfg.task.num_classes);
}

}  // namespace geosdm::cli
