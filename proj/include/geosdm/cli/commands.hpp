// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geosdm/cli/synthetic.hpp"

namespace geosdm::cli {

struct GlobalOptions {
  std::optional<std::int64_t> seed;        // overrides run.seed
  std::optional<std::filesystem::path> out;
  bool force = false;                      // allow overwriting existing artifacts
};

struct TrainOutcome {
  std::filesystem::path run_dir;
  double best_val_loss = 0.0;
  std::int64_t best_epoch = -1;
};

/// Split (unless data.split names one), dataset assembly, fit. --out
/// replaces the run root directory.
TrainOutcome cmd_train(const std::filesystem::path& config_path, const GlobalOptions& opts);

/// Scores data.observations with `weights` (default run.checkpoint).
/// --out is the predictions.csv path, default next to the weights.
std::filesystem::path cmd_predict(const std::filesystem::path& config_path,
                                  const std::optional<std::filesystem::path>& weights, const GlobalOptions& opts);

/// report.json and report.txt in --out (default: the predictions' folder).
std::vector<std::filesystem::path> cmd_evaluate(const std::filesystem::path& predictions,
                                                const std::filesystem::path& labels, std::size_t k,
                                                const GlobalOptions& opts);

/// Block-holdout split of data.observations written as CSV (default
/// <run.output_dir>/split.csv).
std::filesystem::path cmd_split(const std::filesystem::path& config_path, const GlobalOptions& opts);

/// Builds a cube modality from the tagged layers of `group` in a raster
/// manifest. The cube shape is the tag extent.
std::filesystem::path cmd_build_cubes(const std::filesystem::path& raster_manifest,
                                      const std::filesystem::path& observations, const std::string& group,
                                      const GlobalOptions& opts);

SyntheticArtifacts cmd_make_synthetic(const SyntheticSpec& spec, const GlobalOptions& opts);

/// argv entry point: artifact paths to `out`, diagnostics to `err`;
/// returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geosdm::cli
