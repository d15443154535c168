// SPDX-License-Identifier: Apache-2.0
#include "geosdm/geodata/cubes.hpp"

#include <cmath>
#include <set>

#include "json.hpp"

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::geodata {

using nlohmann::json;

const TimeSeriesCube* CubeSet::find(const std::string& survey_id) const {
  const auto it = cubes.find(survey_id);
  return it == cubes.end() ? nullptr : &it->second;
}

CubeSet load_cubes(const std::filesystem::path& manifest_path) {
  json j;
  try {
    j = json::parse(read_text(manifest_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::format, manifest_path.string() + ": " + e.what());
  }

  CubeSet set;
  std::filesystem::path payload;
  try {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw Error(ErrorKind::format, manifest_path.string() + ": shape must have 3 axes");
    set.shape = {shape[0], shape[1], shape[2]};
    set.surveys = j.at("surveys").get<std::vector<std::string>>();
    if (j.contains("band_names")) set.band_names = j.at("band_names").get<std::vector<std::string>>();
    if (j.contains("payload")) {
      payload = manifest_path.parent_path() / j.at("payload").get<std::string>();
    } else {
      payload = manifest_path;
      payload.replace_extension(".f32");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, manifest_path.string() + ": " + e.what());
  }
  if (set.band_names.empty()) {
    for (std::size_t b = 0; b < set.shape.bands; ++b) set.band_names.push_back("band" + std::to_string(b));
  }
  if (set.band_names.size() != set.shape.bands) {
    throw Error(ErrorKind::format, manifest_path.string() + ": band_names length differs from shape[0]");
  }

  const std::size_t block = set.shape.numel();
  const std::uintmax_t expected = set.surveys.size() * block * sizeof(float);
  const std::uintmax_t actual = file_size_of(payload);
  if (actual != expected) {
    throw Error(ErrorKind::truncation, payload.string() + ": " + std::to_string(actual) + " bytes, expected " +
                                           std::to_string(expected) + " (" + std::to_string(set.surveys.size()) +
                                           " surveys x " + std::to_string(block) + " floats x 4)");
  }
  const std::string bytes = read_text(payload);

  std::size_t imputed = 0;
  for (std::size_t i = 0; i < set.surveys.size(); ++i) {
    TimeSeriesCube cube{set.surveys[i], set.shape, std::vector<float>(block)};
    decode_f32_le(std::string_view(bytes).substr(i * block * sizeof(float), block * sizeof(float)), cube.values);
    for (float& v : cube.values) {
      if (std::isnan(v)) {
        v = 0.0f;
        ++imputed;
      }
    }
    if (!set.cubes.emplace(set.surveys[i], std::move(cube)).second) {
      throw Error(ErrorKind::format, manifest_path.string() + ": duplicate survey '" + set.surveys[i] + "'");
    }
  }
  if (imputed > 0) log().warn("{}: imputed {} NaN cube entries to 0", manifest_path.string(), imputed);
  return set;
}

void save_cubes(const CubeSet& set, const std::filesystem::path& manifest_path) {
  auto payload = manifest_path;
  payload.replace_extension(".f32");
  const json j{{"surveys", set.surveys},
               {"shape", {set.shape.bands, set.shape.steps, set.shape.years}},
               {"band_names", set.band_names},
               {"payload", payload.filename().string()}};
  std::string bytes;
  bytes.reserve(set.surveys.size() * set.shape.numel() * sizeof(float));
  for (const auto& id : set.surveys) {
    const TimeSeriesCube* cube = set.find(id);
    if (cube == nullptr || cube->values.size() != set.shape.numel()) {
      throw Error(ErrorKind::data, "cube for survey '" + id + "' missing or misshaped");
    }
    append_f32_le(bytes, cube->values);
  }
  write_text(manifest_path, j.dump(2) + "\n");
  write_text(payload, bytes);
}

CubeSet build_time_series_cubes(const std::vector<TaggedLayer>& layers, const ObservationTable& table,
                                CubeShape shape, std::vector<std::string> band_names) {
  const std::size_t n = shape.numel();
  if (n == 0) throw Error(ErrorKind::validation, "cube shape axes must be >= 1");
  std::vector<const RasterLayer*> slot(n, nullptr);
  for (const auto& tl : layers) {
    const auto& t = tl.tag;
    if (t.band >= shape.bands || t.step >= shape.steps || t.year >= shape.years) {
      throw Error(ErrorKind::coverage, "layer '" + tl.layer.name + "' tag (" + std::to_string(t.band) + "," +
                                           std::to_string(t.step) + "," + std::to_string(t.year) +
                                           ") is outside the cube shape");
    }
    const std::size_t k = (t.band * shape.steps + t.step) * shape.years + t.year;
    if (slot[k] != nullptr) throw Error(ErrorKind::format, "two layers share tag of '" + tl.layer.name + "'");
    slot[k] = &tl.layer;
  }
  std::string gaps;
  std::size_t missing = 0;
  for (std::size_t b = 0; b < shape.bands; ++b) {
    for (std::size_t q = 0; q < shape.steps; ++q) {
      for (std::size_t y = 0; y < shape.years; ++y) {
        if (slot[(b * shape.steps + q) * shape.years + y] == nullptr) {
          if (missing++ < 20) gaps += " (" + std::to_string(b) + "," + std::to_string(q) + "," + std::to_string(y) + ")";
        }
      }
    }
  }
  if (missing > 0) {
    throw Error(ErrorKind::coverage, std::to_string(missing) + " missing (band,step,year) layers:" + gaps +
                                         (missing > 20 ? " ..." : ""));
  }

  CubeSet set;
  set.shape = shape;
  set.band_names = std::move(band_names);
  if (set.band_names.empty()) {
    for (std::size_t b = 0; b < shape.bands; ++b) set.band_names.push_back("band" + std::to_string(b));
  }
  if (set.band_names.size() != shape.bands) throw Error(ErrorKind::validation, "band_names length differs from bands");

  // Same cell rule as a side-1 patch with fill 0 and no normalization.
  for (const auto& obs : table.records()) {
    TimeSeriesCube cube{obs.survey_id, shape, std::vector<float>(n)};
    for (std::size_t k = 0; k < n; ++k) {
      const RasterLayer& layer = *slot[k];
      const PixelIndex px = pixel_of(layer, obs.lon, obs.lat);
      float v = 0.0f;
      if (px.row >= 0 && px.col >= 0 && px.row < static_cast<long long>(layer.height) &&
          px.col < static_cast<long long>(layer.width)) {
        v = layer.at(static_cast<std::size_t>(px.row), static_cast<std::size_t>(px.col));
        if (layer.is_nodata(v)) v = 0.0f;
      }
      cube.values[k] = v;
    }
    set.surveys.push_back(obs.survey_id);
    set.cubes.emplace(obs.survey_id, std::move(cube));
  }
  return set;
}

}  // namespace geosdm::geodata
