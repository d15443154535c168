// SPDX-License-Identifier: Apache-2.0
#include "geosdm/geodata/raster.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"
#include "geosdm/geodata/crs.hpp"

namespace geosdm::geodata {

using nlohmann::json;

bool RasterLayer::is_nodata(float v) const { return std::isnan(v) || (nodata && static_cast<double>(v) == *nodata); }

void RasterLayer::validate() const {
  if (values.size() != width * height) {
    throw Error(ErrorKind::format, "raster '" + name + "': " + std::to_string(values.size()) + " values for " +
                                       std::to_string(width) + "x" + std::to_string(height) + " grid");
  }
  if (!(pixel_size_x > 0.0)) throw Error(ErrorKind::format, "raster '" + name + "': pixel_size_x must be > 0");
  if (pixel_size_y == 0.0 || std::isnan(pixel_size_y)) {
    throw Error(ErrorKind::format, "raster '" + name + "': pixel_size_y must be non-zero");
  }
}

namespace {

std::filesystem::path payload_path(const std::filesystem::path& header, const json& j) {
  if (j.contains("data")) return header.parent_path() / j.at("data").get<std::string>();
  auto p = header;
  return p.replace_extension(".f32");
}

json parse_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
}

}  // namespace

RasterLayer load_raster(const std::filesystem::path& header_path) {
  const json j = parse_json(header_path);
  RasterLayer layer;
  try {
    layer.name = j.at("name").get<std::string>();
    layer.width = j.at("width").get<std::size_t>();
    layer.height = j.at("height").get<std::size_t>();
    layer.origin_x = j.at("origin_x").get<double>();
    layer.origin_y = j.at("origin_y").get<double>();
    layer.pixel_size_x = j.at("pixel_size_x").get<double>();
    layer.pixel_size_y = j.at("pixel_size_y").get<double>();
    layer.crs = j.at("crs").get<std::string>();
    if (j.contains("nodata") && !j.at("nodata").is_null()) layer.nodata = j.at("nodata").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, header_path.string() + ": " + e.what());
  }
  const auto payload = payload_path(header_path, j);
  const auto expected = static_cast<std::uintmax_t>(layer.width * layer.height * sizeof(float));
  const auto actual = file_size_of(payload);
  if (actual != expected) {
    throw Error(ErrorKind::truncation, payload.string() + ": " + std::to_string(actual) + " bytes, expected " +
                                           std::to_string(expected));
  }
  layer.values = read_f32_le(payload);
  layer.validate();
  return layer;
}

void save_raster(const RasterLayer& layer, const std::filesystem::path& header_path) {
  layer.validate();
  auto payload = header_path;
  payload.replace_extension(".f32");
  json j{{"name", layer.name},
         {"width", layer.width},
         {"height", layer.height},
         {"origin_x", layer.origin_x},
         {"origin_y", layer.origin_y},
         {"pixel_size_x", layer.pixel_size_x},
         {"pixel_size_y", layer.pixel_size_y},
         {"crs", layer.crs},
         {"nodata", layer.nodata ? json(*layer.nodata) : json(nullptr)},
         {"data", payload.filename().string()}};
  write_text(header_path, j.dump(2) + "\n");
  write_f32_le(payload, layer.values);
}

RasterManifest load_raster_manifest(const std::filesystem::path& path) {
  const json j = parse_json(path);
  RasterManifest manifest;
  try {
    for (const auto& e : j.at("layers")) {
      ManifestEntry entry;
      entry.name = e.at("name").get<std::string>();
      entry.header = path.parent_path() / e.at("path").get<std::string>();
      if (e.contains("group")) {
        entry.tag = LayerTag{e.at("group").get<std::string>(), e.at("band").get<std::size_t>(),
                             e.at("step").get<std::size_t>(), e.at("year").get<std::size_t>()};
      }
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
  return manifest;
}

void save_raster_manifest(const RasterManifest& manifest, const std::filesystem::path& path) {
  json layers = json::array();
  for (const auto& e : manifest.entries) {
    json item{{"name", e.name}, {"path", e.header.lexically_relative(path.parent_path()).generic_string()}};
    if (e.tag) {
      item["group"] = e.tag->group;
      item["band"] = e.tag->band;
      item["step"] = e.tag->step;
      item["year"] = e.tag->year;
    }
    layers.push_back(std::move(item));
  }
  write_text(path, json{{"layers", layers}}.dump(2) + "\n");
}

std::vector<RasterLayer> load_patch_layers(const RasterManifest& manifest) {
  std::vector<RasterLayer> out;
  for (const auto& e : manifest.entries) {
    if (!e.tag) out.push_back(load_raster(e.header));
  }
  return out;
}

std::vector<TaggedLayer> load_tagged_layers(const RasterManifest& manifest, const std::string& group) {
  std::vector<TaggedLayer> out;
  for (const auto& e : manifest.entries) {
    if (e.tag && e.tag->group == group) out.push_back(TaggedLayer{load_raster(e.header), *e.tag});
  }
  return out;
}

void PatchSpec::validate() const {
  if (side < 1) throw Error(ErrorKind::validation, "patch side must be >= 1");
  if (layer_names.empty()) throw Error(ErrorKind::validation, "patch spec needs at least one layer");
  if (!normalize.empty() && normalize.size() != layer_names.size()) {
    throw Error(ErrorKind::validation, "patch normalization needs one (mean, std) pair per layer");
  }
  for (const auto& n : normalize) {
    if (!(n.std > 0.0)) throw Error(ErrorKind::validation, "patch normalization std must be > 0");
  }
}

PixelIndex pixel_of(const RasterLayer& layer, double lon, double lat) {
  const ProjectedPoint p = transform_point(lon, lat, layer.crs);
  return {static_cast<long long>(std::floor((p.y - layer.origin_y) / layer.pixel_size_y)),
          static_cast<long long>(std::floor((p.x - layer.origin_x) / layer.pixel_size_x))};
}

Normalization layer_statistics(const RasterLayer& layer) {
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  for (float v : layer.values) {
    if (layer.is_nodata(v) || !std::isfinite(v)) continue;
    sum += v;
    sq += static_cast<double>(v) * v;
    ++n;
  }
  if (n == 0) return {};
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
  return {mean, std::max(std::sqrt(var), 1e-12)};
}

PatchExtractor::PatchExtractor(const std::vector<RasterLayer>& layers, PatchSpec spec, ExtentPolicy policy)
    : spec_(std::move(spec)), policy_(policy) {
  spec_.validate();
  for (const auto& name : spec_.layer_names) {
    const auto it = std::find_if(layers.begin(), layers.end(), [&](const RasterLayer& l) { return l.name == name; });
    if (it == layers.end()) throw Error(ErrorKind::data, "patch layer '" + name + "' not loaded");
    layers_.push_back(&*it);
  }
}

Tensor PatchExtractor::extract(double lon, double lat) const {
  const std::size_t side = spec_.side;
  const long long half = static_cast<long long>(side / 2);
  Tensor out({layers_.size(), side, side}, spec_.fill_value);
  bool any_near = false;

  for (std::size_t c = 0; c < layers_.size(); ++c) {
    const RasterLayer& layer = *layers_[c];
    const ProjectedPoint p = transform_point(lon, lat, layer.crs);
    const double px = (p.x - layer.origin_x) / layer.pixel_size_x;
    const double py = (p.y - layer.origin_y) / layer.pixel_size_y;
    const double w = static_cast<double>(layer.width);
    const double h = static_cast<double>(layer.height);
    const double outside = std::max({0.0, -px, px - w, -py, py - h});
    if (outside <= static_cast<double>(side) / 2.0) any_near = true;

    const auto col = static_cast<long long>(std::floor(px));
    const auto row = static_cast<long long>(std::floor(py));
    const bool norm = !spec_.normalize.empty();
    const double mean = norm ? spec_.normalize[c].mean : 0.0;
    const double inv_std = norm ? 1.0 / spec_.normalize[c].std : 1.0;
    double* dst = out.data() + c * side * side;
    for (std::size_t i = 0; i < side; ++i) {
      const long long r = row - half + static_cast<long long>(i);
      if (r < 0 || r >= static_cast<long long>(layer.height)) continue;
      for (std::size_t j = 0; j < side; ++j) {
        const long long cc = col - half + static_cast<long long>(j);
        if (cc < 0 || cc >= static_cast<long long>(layer.width)) continue;
        const float v = layer.at(static_cast<std::size_t>(r), static_cast<std::size_t>(cc));
        if (layer.is_nodata(v)) continue;
        dst[i * side + j] = (static_cast<double>(v) - mean) * inv_std;
      }
    }
  }

  if (!any_near) {
    const std::string msg = "point (" + format_double(lon) + ", " + format_double(lat) +
                            ") lies more than side/2 pixels outside every patch layer";
    if (policy_ == ExtentPolicy::error) throw Error(ErrorKind::out_of_extent, msg);
    log().warn("{}; filling with {}", msg, spec_.fill_value);
  }
  return out;
}

Tensor extract_patch(const std::vector<RasterLayer>& layers, const PatchSpec& spec, double lon, double lat,
                     ExtentPolicy policy) {
  return PatchExtractor(layers, spec, policy).extract(lon, lat);
}

}  // namespace geosdm::geodata
