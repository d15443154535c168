// SPDX-License-Identifier: Apache-2.0
#include "geosdm/cli/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geosdm/config/config.hpp"
#include "geosdm/core/error.hpp"
#include "geosdm/core/rng.hpp"
#include "geosdm/core/util.hpp"
#include "geosdm/geodata/observations.hpp"
#include "geosdm/geodata/raster.hpp"

namespace geosdm::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kLon0 = 0.0, kLat0 = 40.0, kSpan = 8.0;

// Sum of separable waves with periods between roughly 1.5 and 6 degrees.
struct Field {
  struct Wave {
    double amp, fx, fy, px, py;
  };
  std::vector<Wave> waves;
  double offset = 0.0;

  static Field random(Rng& rng, double offset) {
    Field f;
    f.offset = offset;
    for (int m = 0; m < 4; ++m) {
      f.waves.push_back({rng.uniform(0.5, 1.5), rng.uniform(0.3, 1.2), rng.uniform(0.3, 1.2),
                         rng.uniform(0.0, 6.283185307179586), rng.uniform(0.0, 6.283185307179586)});
    }
    return f;
  }
  double operator()(double lon, double lat) const {
    double v = offset;
    for (const auto& w : waves) v += w.amp * std::sin(w.fx * lon + w.px) * std::cos(w.fy * lat + w.py);
    return v;
  }
};

geodata::RasterLayer grid_layer(const std::string& name, std::size_t size) {
  geodata::RasterLayer layer;
  layer.name = name;
  layer.width = size;
  layer.height = size;
  layer.origin_x = kLon0;
  layer.origin_y = kLat0 + kSpan;
  layer.pixel_size_x = kSpan / static_cast<double>(size);
  layer.pixel_size_y = -kSpan / static_cast<double>(size);
  layer.values.resize(size * size);
  return layer;
}

template <typename F>
void paint(geodata::RasterLayer& layer, F&& value_at) {
  for (std::size_t r = 0; r < layer.height; ++r) {
    const double lat = layer.origin_y + (static_cast<double>(r) + 0.5) * layer.pixel_size_y;
    for (std::size_t c = 0; c < layer.width; ++c) {
      const double lon = layer.origin_x + (static_cast<double>(c) + 0.5) * layer.pixel_size_x;
      layer.values[r * layer.width + c] = static_cast<float>(value_at(lon, lat));
    }
  }
}

double round_to(double v, double scale) { return std::round(v * scale) / scale; }

std::string pad_id(std::size_t i) {
  std::string s = std::to_string(i);
  return "S" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

}  // namespace

std::vector<fs::path> SyntheticArtifacts::all() const {
  std::vector<fs::path> out{observations, raster_manifest};
  for (const auto& [name, path] : cubes) out.push_back(path);
  out.push_back(config);
  return out;
}

SyntheticArtifacts make_synthetic(const SyntheticSpec& spec, const fs::path& out_dir) {
  if (spec.surveys < 10) throw Error(ErrorKind::validation, "synthetic: need at least 10 surveys");
  if (spec.species < 2) throw Error(ErrorKind::validation, "synthetic: need at least 2 species");
  if (spec.patch_channels < 1 || spec.clusters < 1) throw Error(ErrorKind::validation, "synthetic: empty channel or cluster count");
  if (spec.patch_size < 1 || spec.patch_size > spec.raster_size) {
    throw Error(ErrorKind::validation, "synthetic: patch_size must be in [1, raster_size]");
  }

  Rng rng(derive_seed(spec.seed, streams::synthetic));
  SyntheticArtifacts art;
  art.root = out_dir;
  fs::create_directories(out_dir / "rasters");
  fs::create_directories(out_dir / "cubes");

  // Survey locations, clustered, kept inside the window by half a patch.
  const double margin = kSpan * static_cast<double>(spec.patch_size) / static_cast<double>(spec.raster_size) / 2.0 + 0.01;
  std::vector<std::pair<double, double>> centers;
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    centers.emplace_back(rng.uniform(kLon0 + margin, kLon0 + kSpan - margin), rng.uniform(kLat0 + margin, kLat0 + kSpan - margin));
  }
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < spec.surveys; ++i) {
    const auto& [cx, cy] = centers[rng.below(centers.size())];
    const double lon = std::clamp(cx + 0.35 * rng.normal(), kLon0 + margin, kLon0 + kSpan - margin);
    const double lat = std::clamp(cy + 0.35 * rng.normal(), kLat0 + margin, kLat0 + kSpan - margin);
    points.emplace_back(round_to(lon, 1e5), round_to(lat, 1e5));
  }

  // Patch predictors.
  std::vector<Field> fields;
  std::vector<geodata::RasterLayer> patch_layers;
  geodata::RasterManifest manifest;
  for (std::size_t c = 0; c < spec.patch_channels; ++c) {
    fields.push_back(Field::random(rng, 10.0 * static_cast<double>(c)));
    auto layer = grid_layer("env" + std::to_string(c), spec.raster_size);
    paint(layer, fields.back());
    const fs::path header = out_dir / "rasters" / (layer.name + ".json");
    geodata::save_raster(layer, header);
    manifest.entries.push_back({layer.name, header, std::nullopt});
    patch_layers.push_back(std::move(layer));
  }

  // Time-tagged cube predictors; each band mixes the patch fields plus its
  // own wave so cubes carry signal without duplicating the patch.
  const auto& cs = spec.cube_shape;
  for (const auto& group : spec.cube_groups) {
    for (std::size_t b = 0; b < cs.bands; ++b) {
      std::vector<double> mix(spec.patch_channels);
      for (double& m : mix) m = rng.normal() * 0.5;
      const Field own = Field::random(rng, 0.0);
      for (std::size_t q = 0; q < cs.steps; ++q) {
        for (std::size_t y = 0; y < cs.years; ++y) {
          const double season = 1.0 + 0.3 * std::sin(6.283185307179586 * static_cast<double>(q) / static_cast<double>(cs.steps));
          const double trend = 0.1 * static_cast<double>(y);
          const std::string name = group + "_b" + std::to_string(b) + "_q" + std::to_string(q) + "_y" + std::to_string(y);
          auto layer = grid_layer(name, spec.cube_raster_size);
          paint(layer, [&](double lon, double lat) {
            double v = own(lon, lat);
            for (std::size_t c = 0; c < spec.patch_channels; ++c) v += mix[c] * (fields[c](lon, lat) - fields[c].offset);
            return v * season + trend;
          });
          const fs::path header = out_dir / "rasters" / (name + ".json");
          geodata::save_raster(layer, header);
          manifest.entries.push_back({name, header, geodata::LayerTag{group, b, q, y}});
        }
      }
    }
  }
  art.raster_manifest = out_dir / "rasters" / "manifest.json";
  geodata::save_raster_manifest(manifest, art.raster_manifest);

  // Labels from standardized patch channel means.
  geodata::PatchSpec pspec;
  pspec.side = spec.patch_size;
  for (const auto& l : patch_layers) pspec.layer_names.push_back(l.name);
  const geodata::PatchExtractor extractor(patch_layers, pspec, geodata::ExtentPolicy::error);
  const std::size_t n = spec.surveys, s = spec.species, ch = spec.patch_channels;
  std::vector<double> z(n * ch);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor patch = extractor.extract(points[i].first, points[i].second);
    const std::size_t area = spec.patch_size * spec.patch_size;
    for (std::size_t c = 0; c < ch; ++c) {
      double sum = 0.0;
      for (std::size_t p = 0; p < area; ++p) sum += patch[c * area + p];
      z[i * ch + c] = sum / static_cast<double>(area);
    }
  }
  for (std::size_t c = 0; c < ch; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += z[i * ch + c];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) sq += (z[i * ch + c] - mean) * (z[i * ch + c] - mean);
    const double sd = std::max(std::sqrt(sq / static_cast<double>(n)), 1e-12);
    for (std::size_t i = 0; i < n; ++i) z[i * ch + c] = (z[i * ch + c] - mean) / sd;
  }

  std::vector<std::vector<int>> species_of(n);
  std::vector<double> margin_best(n, -1e300);
  std::vector<int> species_best(n, 0);
  for (std::size_t j = 0; j < s; ++j) {
    std::vector<double> a(ch);
    double norm = 0.0;
    for (double& v : a) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    std::vector<double> score(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.15 * rng.normal();
      for (std::size_t c = 0; c < ch; ++c) v += a[c] / norm * z[i * ch + c];
      score[i] = v;
    }
    // Prevalence spread from 8% to 50% across species.
    const double prevalence = 0.08 + 0.42 * static_cast<double>(j) / static_cast<double>(s - 1);
    std::vector<double> sorted = score;
    std::sort(sorted.begin(), sorted.end());
    const auto cut = static_cast<std::size_t>(std::floor((1.0 - prevalence) * static_cast<double>(n)));
    const double tau = sorted[std::min(cut, n - 1)];
    for (std::size_t i = 0; i < n; ++i) {
      if (score[i] >= tau) species_of[i].push_back(static_cast<int>(j));
      if (score[i] - tau > margin_best[i]) {
        margin_best[i] = score[i] - tau;
        species_best[i] = static_cast<int>(j);
      }
    }
  }
  std::vector<geodata::Observation> records;
  for (std::size_t i = 0; i < n; ++i) {
    if (species_of[i].empty()) species_of[i].push_back(species_best[i]);
    records.push_back({pad_id(i), points[i].first, points[i].second, species_of[i]});
  }
  const geodata::ObservationTable table(std::move(records));
  art.observations = out_dir / "observations.csv";
  geodata::save_observations(table, art.observations);

  for (const auto& group : spec.cube_groups) {
    std::vector<std::string> bands;
    for (std::size_t b = 0; b < cs.bands; ++b) bands.push_back(group + "_b" + std::to_string(b));
    const auto set = geodata::build_time_series_cubes(geodata::load_tagged_layers(manifest, group), table, cs, bands);
    const fs::path path = out_dir / "cubes" / (group + ".json");
    geodata::save_cubes(set, path);
    art.cubes.emplace(group, path);
  }

  config::ExperimentConfig cfg;
  cfg.run.seed = static_cast<std::int64_t>(spec.seed);
  cfg.run.output_dir = "runs";
  cfg.data.observations = "observations.csv";
  cfg.data.rasters = "rasters/manifest.json";
  for (const auto& group : spec.cube_groups) cfg.data.cubes.emplace(group, "cubes/" + group + ".json");
  cfg.data.patch_size = static_cast<int>(spec.patch_size);
  cfg.task.num_classes = static_cast<int>(spec.species);
  cfg.task.top_k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(spec.top_k), spec.species));
  cfg.trainer.epochs = spec.epochs;
  auto encoder = [](std::string modality, std::string name, double width) {
    config::EncoderEntry e;
    e.modality = std::move(modality);
    e.name = std::move(name);
    e.embedding_dim = 128;
    e.options["width"] = width;
    return e;
  };
  cfg.model.encoders.push_back(encoder("patch", "micro_conv2d", 16));
  for (const auto& group : spec.cube_groups) cfg.model.encoders.push_back(encoder(group, "micro_conv3d", 32));
  cfg.optimizer.loss.name = std::string(config::default_loss_for(cfg.task.type));
  config::validate(cfg);
  art.config = out_dir / "config.yaml";
  write_text(art.config, config::render_config(cfg));
  return art;
}

}  // namespace geosdm::cli
