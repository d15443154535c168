// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace geosdm::config {

enum class RunMode { train, predict, evaluate };
enum class TaskType { binary, multiclass, multilabel };

std::string_view to_string(RunMode mode);
std::string_view to_string(TaskType type);

struct RunSection {
  RunMode mode = RunMode::train;
  std::int64_t seed = 42;
  std::optional<std::string> checkpoint;  // transfer / resume / predict weights
  std::string output_dir = "runs";
  friend bool operator==(const RunSection&, const RunSection&) = default;
};

struct DataSection {
  std::string observations;
  std::optional<std::string> rasters;        // raster manifest (patch layers)
  std::map<std::string, std::string> cubes;  // modality name -> cube manifest
  int batch_size = 64;
  int patch_size = 64;
  int workers = 1;
  std::optional<std::string> split;  // precomputed split CSV
  double split_cell_size = 1.0 / 6.0;
  double val_fraction = 0.15;
  bool normalize = true;
  friend bool operator==(const DataSection&, const DataSection&) = default;
};

struct TaskSection {
  TaskType type = TaskType::multilabel;
  int num_classes = 0;
  int top_k = 25;
  friend bool operator==(const TaskSection&, const TaskSection&) = default;
};

struct TrainerSection {
  int epochs = 20;
  std::string device = "cpu";
  int log_interval = 10;
  std::optional<std::string> checkpoint_dir;
  friend bool operator==(const TrainerSection&, const TrainerSection&) = default;
};

struct ModifierRequests {
  std::optional<int> input_channels;
  std::optional<int> output_dim;
  bool strip_head = false;
  friend bool operator==(const ModifierRequests&, const ModifierRequests&) = default;
};

struct EncoderEntry {
  std::string modality;  // "patch", "location", or a key of data.cubes
  std::string provider;  // empty: inherit model.provider
  std::string name;
  std::optional<int> input_channels;  // absent: inferred from the data
  int embedding_dim = 64;
  bool pretrained = false;
  std::map<std::string, double> options;
  ModifierRequests modifiers;
  friend bool operator==(const EncoderEntry&, const EncoderEntry&) = default;
};

struct ModelSection {
  std::string provider = "builtin";
  std::string architecture = "mme";  // mme | single
  std::vector<EncoderEntry> encoders;  // empty: one default encoder per modality
  double dropout = 0.1;
  int hidden_dim = 256;
  friend bool operator==(const ModelSection&, const ModelSection&) = default;
};

struct SchedulerSection {
  std::string name = "cosine_annealing";
  int t_max = 25;
  double eta_min = 0.0;
  friend bool operator==(const SchedulerSection&, const SchedulerSection&) = default;
};

struct LossSection {
  std::string name;  // resolved from task.type when absent
  double pos_weight = 10.0;
  friend bool operator==(const LossSection&, const LossSection&) = default;
};

struct OptimizerSection {
  std::string algorithm = "adamw";
  double lr = 2.5e-4;
  double weight_decay = 0.01;
  SchedulerSection scheduler;
  LossSection loss;
  friend bool operator==(const OptimizerSection&, const OptimizerSection&) = default;
};

struct ExperimentConfig {
  RunSection run;
  DataSection data;
  TaskSection task;
  TrainerSection trainer;
  ModelSection model;
  OptimizerSection optimizer;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Loss name implied by a task type.
std::string_view default_loss_for(TaskType type);

/// Parses a YAML document. Absent optional fields take their defaults;
/// explicit values are never overridden. Throws Error(parse) with the line
/// for malformed YAML and Error(validation) naming the field otherwise.
ExperimentConfig parse_config(std::string_view text);

/// Reads and parses `path`; relative data/output paths are resolved
/// against the document's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws Error(validation) on the first violated invariant.
void validate(const ExperimentConfig& cfg);

/// YAML rendering; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& cfg);

/// Keys sorted, numbers in shortest round-trip form.
nlohmann::json canonical_json(const ExperimentConfig& cfg);

/// First 16 hex chars of SHA-256 over the canonical JSON dump.
std::string config_digest(const ExperimentConfig& cfg);

}  // namespace geosdm::config
