// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geosdm/core/tensor.hpp"
#include "geosdm/geodata/cubes.hpp"
#include "geosdm/geodata/observations.hpp"
#include "geosdm/geodata/raster.hpp"

namespace geosdm::geodata {

enum class LabelsMode { train, predict };

struct MultiModalSample {
  std::string survey_id;
  double lon = 0.0;
  double lat = 0.0;
  Tensor patch;  // (C, side, side); empty without a patch modality
  std::map<std::string, TimeSeriesCube> cubes;
  std::vector<double> label;  // multi-hot, num_classes; empty in predict mode
};

/// Indexed, length-known source of samples.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual MultiModalSample get(std::size_t index) const = 0;
};

struct PatchSource {
  std::shared_ptr<const std::vector<RasterLayer>> layers;
  PatchSpec spec;
  ExtentPolicy policy = ExtentPolicy::error;
};

using CubeSources = std::map<std::string, std::shared_ptr<const CubeSet>>;

/// Item i is the sample of the i-th survey in table order. Patches are
/// extracted on access; all sources are shared read-only.
class MultiModalDataset final : public SampleSource {
 public:
  MultiModalDataset(ObservationTable table, std::optional<PatchSource> patches, CubeSources cubes,
                    LabelsMode mode, int num_classes);

  std::size_t size() const override { return table_.size(); }
  MultiModalSample get(std::size_t index) const override;

  const ObservationTable& table() const noexcept { return table_; }
  LabelsMode mode() const noexcept { return mode_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t patch_channels() const noexcept { return extractor_ ? extractor_->channels() : 0; }
  const CubeSources& cube_sources() const noexcept { return cubes_; }

 private:
  ObservationTable table_;
  std::shared_ptr<const std::vector<RasterLayer>> layers_;
  std::optional<PatchExtractor> extractor_;
  CubeSources cubes_;
  LabelsMode mode_;
  int num_classes_;
};

/// Throws Error(missing_modality) naming the first unresolvable survey and
/// Error(data) for an empty label set of a training survey.
std::shared_ptr<MultiModalDataset> make_dataset(ObservationTable table, std::optional<PatchSource> patches,
                                                CubeSources cubes, LabelsMode mode, int num_classes);

}  // namespace geosdm::geodata
