// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geosdm/geodata/cubes.hpp"

namespace geosdm::cli {

/// A small learnable presence-absence problem: clustered surveys over an
/// 8 x 8 degree window, smooth environmental rasters, time-tagged cube
/// rasters, and species labels that threshold linear functions of each
/// survey's patch channel means.
struct SyntheticSpec {
  std::size_t surveys = 500;
  std::size_t species = 20;
  std::uint64_t seed = 7;
  std::size_t patch_channels = 4;
  std::size_t raster_size = 256;  // pixels per side of each patch layer
  std::size_t patch_size = 32;
  std::size_t clusters = 25;
  geodata::CubeShape cube_shape{2, 4, 3};
  std::vector<std::string> cube_groups{"climate", "landsat"};
  std::size_t cube_raster_size = 64;
  int epochs = 10;
  int top_k = 5;
};

struct SyntheticArtifacts {
  std::filesystem::path root;
  std::filesystem::path observations;
  std::filesystem::path raster_manifest;
  std::map<std::string, std::filesystem::path> cubes;
  std::filesystem::path config;

  std::vector<std::filesystem::path> all() const;
};

/// Writes the dataset and a ready-to-train config.yaml under `out_dir`.
/// Output bytes depend only on `spec`.
SyntheticArtifacts make_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace geosdm::cli
