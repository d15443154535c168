// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geosdm/config/config.hpp"
#include "geosdm/engine/checkpoint.hpp"
#include "geosdm/engine/loss.hpp"
#include "geosdm/evalkit/metrics.hpp"
#include "geosdm/geodata/dataset.hpp"
#include "geosdm/modelkit/mme.hpp"

namespace geosdm::engine {

struct EpochRecord {
  std::int64_t epoch = 0;  // 0-based, the schedule clock
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::vector<double> metrics;  // evalkit::MetricReport::metric_names() order
};

struct FitOptions {
  /// Explicit run directory; default is <root>/<UTC timestamp>-<digest8>
  /// with root = trainer.checkpoint_dir or run.output_dir.
  std::optional<std::filesystem::path> run_dir;
};

struct FitResult {
  std::filesystem::path run_dir;
  std::vector<EpochRecord> history;
  TrainState state;
  std::int64_t best_epoch = -1;
  evalkit::MetricReport best_report;
};

/// Forward pass over a whole source in eval mode.
struct InferenceResult {
  double loss = 0.0;  // sample-weighted mean; NaN without labels
  std::vector<evalkit::PredictionSet> predictions;
  std::vector<evalkit::LabeledRow> labels;  // empty without labels
};

InferenceResult run_inference(modelkit::MultiModalModel& model, const geodata::SampleSource& source,
                              const LossSpec& loss, std::size_t batch_size, std::size_t workers, std::size_t k);

/// Top-k size used for a task: cfg.task.top_k capped at the class count.
std::size_t effective_k(const config::ExperimentConfig& cfg);

/// Creates a fresh, uniquely named directory under `root`.
std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& digest);

std::string metrics_csv_header();

/// Trains for cfg.trainer.epochs epochs, writing config.yaml, metrics.csv,
/// train.log, best.ckpt and last.ckpt into the run directory. Throws
/// Error(non_finite) when every batch of an epoch has a non-finite loss.
FitResult fit(const config::ExperimentConfig& cfg, modelkit::MultiModalModel& model,
              const geodata::SampleSource& train, const geodata::SampleSource& val, const FitOptions& options = {});

/// Loads `weights` into `model`, scores `test` and writes predictions.csv
/// to `out_csv` when non-empty.
std::vector<evalkit::PredictionSet> predict(const config::ExperimentConfig& cfg, modelkit::MultiModalModel& model,
                                            const std::filesystem::path& weights, const geodata::SampleSource& test,
                                            const std::filesystem::path& out_csv);

}  // namespace geosdm::engine
