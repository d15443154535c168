// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geosdm/core/tensor.hpp"

namespace geosdm::geodata {

/// North-up georeferenced grid. Origin is the top-left corner in CRS units.
struct RasterLayer {
  std::string name;
  std::size_t width = 0;
  std::size_t height = 0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size_x = 1.0;
  double pixel_size_y = -1.0;
  std::string crs = "EPSG:4326";
  std::optional<double> nodata;
  std::vector<float> values;  // row-major, width * height

  float at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
  bool is_nodata(float v) const;

  /// Throws Error(format) on a violated layer invariant.
  void validate() const;
};

/// Sidecar JSON header next to a `.f32` payload of little-endian floats.
RasterLayer load_raster(const std::filesystem::path& header_path);
void save_raster(const RasterLayer& layer, const std::filesystem::path& header_path);

/// (band, step-within-year, year) position of a time-stamped layer inside a
/// named cube group.
struct LayerTag {
  std::string group;
  std::size_t band = 0;
  std::size_t step = 0;
  std::size_t year = 0;
  friend bool operator==(const LayerTag&, const LayerTag&) = default;
};

struct ManifestEntry {
  std::string name;
  std::filesystem::path header;
  std::optional<LayerTag> tag;
};

/// JSON manifest {"layers": [{"name", "path", optional "group"/"band"/"step"/"year"}]}.
/// Untagged entries are patch predictors; tagged entries feed cube builds.
struct RasterManifest {
  std::vector<ManifestEntry> entries;
};

RasterManifest load_raster_manifest(const std::filesystem::path& path);
void save_raster_manifest(const RasterManifest& manifest, const std::filesystem::path& path);

std::vector<RasterLayer> load_patch_layers(const RasterManifest& manifest);

struct TaggedLayer {
  RasterLayer layer;
  LayerTag tag;
};
std::vector<TaggedLayer> load_tagged_layers(const RasterManifest& manifest, const std::string& group);

struct Normalization {
  double mean = 0.0;
  double std = 1.0;
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct PatchSpec {
  std::size_t side = 1;
  std::vector<std::string> layer_names;
  double fill_value = 0.0;
  std::vector<Normalization> normalize;  // empty, or one per layer name

  void validate() const;
};

enum class ExtentPolicy { error, warn_fill };

struct PixelIndex {
  long long row = 0;
  long long col = 0;
  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Owning cell of (lon, lat) after transforming into the layer's CRS.
PixelIndex pixel_of(const RasterLayer& layer, double lon, double lat);

/// Mean and population std of the layer's valid (non-nodata, finite) pixels;
/// std is floored at 1e-12 so it can be used as a divisor.
Normalization layer_statistics(const RasterLayer& layer);

/// Resolves PatchSpec layer names once; extraction is read-only and
/// safe to call concurrently.
class PatchExtractor {
 public:
  PatchExtractor(const std::vector<RasterLayer>& layers, PatchSpec spec, ExtentPolicy policy = ExtentPolicy::error);

  /// (C, side, side) block. Out-of-bounds and nodata pixels take fill_value;
  /// normalization (v - mean) / std applies to valid pixels.
  Tensor extract(double lon, double lat) const;

  const PatchSpec& spec() const noexcept { return spec_; }
  std::size_t channels() const noexcept { return layers_.size(); }

 private:
  std::vector<const RasterLayer*> layers_;
  PatchSpec spec_;
  ExtentPolicy policy_;
};

Tensor extract_patch(const std::vector<RasterLayer>& layers, const PatchSpec& spec, double lon, double lat,
                     ExtentPolicy policy = ExtentPolicy::error);

}  // namespace geosdm::geodata
