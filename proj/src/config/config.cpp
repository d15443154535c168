// SPDX-License-Identifier: Apache-2.0
#include "geosdm/config/config.hpp"

#include <yaml-cpp/yaml.h>

#include <set>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::config {

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::train: return "train";
    case RunMode::predict: return "predict";
    case RunMode::evaluate: return "evaluate";
  }
  return "train";
}

std::string_view to_string(TaskType type) {
  switch (type) {
    case TaskType::binary: return "binary";
    case TaskType::multiclass: return "multiclass";
    case TaskType::multilabel: return "multilabel";
  }
  return "multilabel";
}

std::string_view default_loss_for(TaskType type) {
  switch (type) {
    case TaskType::binary: return "bce_logits_binary";
    case TaskType::multiclass: return "softmax_ce";
    case TaskType::multilabel: return "weighted_bce_logits";
  }
  return "weighted_bce_logits";
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::validation, field + ": " + what);
}

std::string at_line(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.line < 0) return {};
  return " (line " + std::to_string(mark.line + 1) + ")";
}

/// Reads one mapping; every key must be consumed or finish() rejects it.
class MapReader {
 public:
  MapReader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) invalid(path_, "expected a mapping" + at_line(node_));
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return static_cast<bool>(node_[key]) && !node_[key].IsNull();
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  T scalar(const std::string& key) {
    const YAML::Node n = child(key);
    if (!n.IsScalar()) invalid(field(key), "expected a scalar" + at_line(n));
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      invalid(field(key), "cannot convert '" + n.Scalar() + "'" + at_line(n));
    }
  }

  void read(const std::string& key, std::string& out) {
    if (has(key)) out = scalar<std::string>(key);
  }
  void read(const std::string& key, std::optional<std::string>& out) {
    if (has(key)) out = scalar<std::string>(key);
  }
  void read(const std::string& key, double& out) {
    if (has(key)) out = scalar<double>(key);
  }
  void read(const std::string& key, bool& out) {
    if (has(key)) out = scalar<bool>(key);
  }
  void read(const std::string& key, int& out) {
    if (has(key)) out = read_int(key);
  }
  void read(const std::string& key, std::int64_t& out) {
    if (has(key)) out = scalar<std::int64_t>(key);
  }
  void read(const std::string& key, std::optional<int>& out) {
    if (has(key)) out = read_int(key);
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const auto key = it->first.as<std::string>();
      if (!seen_.contains(key)) invalid(field(key), "unknown key" + at_line(it->first));
    }
  }

 private:
  int read_int(const std::string& key) {
    const auto v = scalar<long long>(key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      invalid(field(key), "integer out of range");
    }
    return static_cast<int>(v);
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

RunMode parse_mode(const std::string& s) {
  if (s == "train") return RunMode::train;
  if (s == "predict") return RunMode::predict;
  if (s == "evaluate") return RunMode::evaluate;
  invalid("run.mode", "must be one of train|predict|evaluate, got '" + s + "'");
}

TaskType parse_task_type(const std::string& s) {
  if (s == "binary") return TaskType::binary;
  if (s == "multiclass") return TaskType::multiclass;
  if (s == "multilabel") return TaskType::multilabel;
  invalid("task.type", "must be one of binary|multiclass|multilabel, got '" + s + "'");
}

void parse_run(MapReader r, RunSection& run) {
  if (r.has("mode")) run.mode = parse_mode(r.scalar<std::string>("mode"));
  r.read("seed", run.seed);
  r.read("checkpoint", run.checkpoint);
  r.read("output_dir", run.output_dir);
  r.finish();
}

void parse_data(MapReader r, DataSection& data) {
  r.read("observations", data.observations);
  r.read("rasters", data.rasters);
  if (r.has("cubes")) {
    MapReader cubes(r.child("cubes"), r.field("cubes"));
    for (auto it = r.child("cubes").begin(); it != r.child("cubes").end(); ++it) {
      const auto key = it->first.as<std::string>();
      std::string path;
      cubes.read(key, path);
      data.cubes[key] = path;
    }
    cubes.finish();
  }
  r.read("batch_size", data.batch_size);
  r.read("patch_size", data.patch_size);
  r.read("workers", data.workers);
  r.read("split", data.split);
  r.read("split_cell_size", data.split_cell_size);
  r.read("val_fraction", data.val_fraction);
  r.read("normalize", data.normalize);
  r.finish();
}

void parse_task(MapReader r, TaskSection& task) {
  if (r.has("type")) task.type = parse_task_type(r.scalar<std::string>("type"));
  if (!r.has("num_classes")) invalid("task.num_classes", "required");
  r.read("num_classes", task.num_classes);
  r.read("top_k", task.top_k);
  r.finish();
}

void parse_trainer(MapReader r, TrainerSection& t) {
  r.read("epochs", t.epochs);
  r.read("device", t.device);
  r.read("log_interval", t.log_interval);
  r.read("checkpoint_dir", t.checkpoint_dir);
  r.finish();
}

void parse_modifiers(MapReader r, ModifierRequests& m) {
  r.read("input_channels", m.input_channels);
  r.read("output_dim", m.output_dim);
  r.read("strip_head", m.strip_head);
  r.finish();
}

void parse_model(MapReader r, ModelSection& m) {
  r.read("provider", m.provider);
  r.read("architecture", m.architecture);
  r.read("dropout", m.dropout);
  r.read("hidden_dim", m.hidden_dim);
  if (r.has("encoders")) {
    const YAML::Node list = r.child("encoders");
    if (!list.IsSequence()) invalid(r.field("encoders"), "expected a list" + at_line(list));
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = r.field("encoders") + "[" + std::to_string(i) + "]";
      MapReader e(list[i], path);
      EncoderEntry enc;
      if (!e.has("modality")) invalid(e.field("modality"), "required");
      if (!e.has("name")) invalid(e.field("name"), "required");
      e.read("modality", enc.modality);
      e.read("provider", enc.provider);
      e.read("name", enc.name);
      e.read("input_channels", enc.input_channels);
      e.read("embedding_dim", enc.embedding_dim);
      e.read("pretrained", enc.pretrained);
      if (e.has("options")) {
        MapReader opts(e.child("options"), e.field("options"));
        for (auto it = e.child("options").begin(); it != e.child("options").end(); ++it) {
          const auto key = it->first.as<std::string>();
          double v = 0.0;
          opts.read(key, v);
          enc.options[key] = v;
        }
        opts.finish();
      }
      if (e.has("modifiers")) parse_modifiers(MapReader(e.child("modifiers"), e.field("modifiers")), enc.modifiers);
      e.finish();
      m.encoders.push_back(std::move(enc));
    }
  }
  r.finish();
}

void parse_optimizer(MapReader r, OptimizerSection& o) {
  r.read("algorithm", o.algorithm);
  r.read("lr", o.lr);
  r.read("weight_decay", o.weight_decay);
  if (r.has("scheduler")) {
    MapReader s(r.child("scheduler"), r.field("scheduler"));
    s.read("name", o.scheduler.name);
    s.read("t_max", o.scheduler.t_max);
    s.read("eta_min", o.scheduler.eta_min);
    s.finish();
  }
  if (r.has("loss")) {
    MapReader l(r.child("loss"), r.field("loss"));
    l.read("name", o.loss.name);
    l.read("pos_weight", o.loss.pos_weight);
    l.finish();
  }
  r.finish();
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::parse, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw Error(ErrorKind::parse, "line 1: document root must be a mapping");

  ExperimentConfig cfg;
  MapReader top(root, "config");
  if (!top.has("data")) invalid("data", "section required");
  if (!top.has("task")) invalid("task", "section required");
  if (top.has("run")) parse_run(MapReader(top.child("run"), "run"), cfg.run);
  parse_data(MapReader(top.child("data"), "data"), cfg.data);
  parse_task(MapReader(top.child("task"), "task"), cfg.task);
  if (top.has("trainer")) parse_trainer(MapReader(top.child("trainer"), "trainer"), cfg.trainer);
  if (top.has("model")) parse_model(MapReader(top.child("model"), "model"), cfg.model);
  if (top.has("optimizer")) parse_optimizer(MapReader(top.child("optimizer"), "optimizer"), cfg.optimizer);
  for (auto it = root.begin(); it != root.end(); ++it) {
    const auto key = it->first.as<std::string>();
    static const std::set<std::string> sections{"run", "data", "task", "trainer", "model", "optimizer"};
    if (!sections.contains(key)) invalid(key, "unknown top-level section" + at_line(it->first));
  }

  if (cfg.optimizer.loss.name.empty()) cfg.optimizer.loss.name = std::string(default_loss_for(cfg.task.type));
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg = parse_config(read_text(path));
  const auto base = std::filesystem::absolute(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  auto resolve_opt = [&](std::optional<std::string>& p) {
    if (p) resolve(*p);
  };
  resolve(cfg.data.observations);
  resolve_opt(cfg.data.rasters);
  resolve_opt(cfg.data.split);
  for (auto& [name, p] : cfg.data.cubes) resolve(p);
  resolve_opt(cfg.run.checkpoint);
  resolve(cfg.run.output_dir);
  resolve_opt(cfg.trainer.checkpoint_dir);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  const auto& t = cfg.task;
  if (d.observations.empty()) invalid("data.observations", "path required");
  if (d.batch_size < 1) invalid("data.batch_size", "must be >= 1");
  if (d.patch_size < 1) invalid("data.patch_size", "must be >= 1");
  if (d.workers < 1) invalid("data.workers", "must be >= 1");
  if (!(d.split_cell_size > 0.0)) invalid("data.split_cell_size", "must be > 0");
  if (!(d.val_fraction > 0.0 && d.val_fraction < 1.0)) invalid("data.val_fraction", "must lie in (0, 1)");
  for (const auto& [name, p] : d.cubes) {
    if (name == "patch" || name == "location") invalid("data.cubes." + name, "reserved modality name");
    if (p.empty()) invalid("data.cubes." + name, "path required");
  }

  if (t.num_classes < 1) invalid("task.num_classes", "must be >= 1");
  if (t.top_k < 1) invalid("task.top_k", "must be >= 1");
  if (t.top_k > t.num_classes) invalid("task.top_k", "must be <= task.num_classes");
  if (t.type == TaskType::binary && t.num_classes != 2) invalid("task.num_classes", "binary task requires exactly 2 classes");

  if (cfg.trainer.epochs < 1) invalid("trainer.epochs", "must be >= 1");
  if (cfg.trainer.log_interval < 1) invalid("trainer.log_interval", "must be >= 1");
  if (cfg.trainer.device != "cpu" && cfg.trainer.device != "auto") {
    invalid("trainer.device", "only 'cpu' or 'auto' are available, got '" + cfg.trainer.device + "'");
  }

  const auto& m = cfg.model;
  if (m.architecture != "mme" && m.architecture != "single") invalid("model.architecture", "must be mme or single");
  if (!(m.dropout >= 0.0 && m.dropout < 1.0)) invalid("model.dropout", "must lie in [0, 1)");
  if (m.hidden_dim < 1) invalid("model.hidden_dim", "must be >= 1");
  if (m.architecture == "single" && m.encoders.size() > 1) invalid("model.encoders", "single architecture takes one encoder");
  std::set<std::string> modalities;
  for (std::size_t i = 0; i < m.encoders.size(); ++i) {
    const auto& e = m.encoders[i];
    const std::string f = "model.encoders[" + std::to_string(i) + "]";
    if (!modalities.insert(e.modality).second) invalid(f + ".modality", "duplicate modality '" + e.modality + "'");
    if (e.modality != "patch" && e.modality != "location" && !d.cubes.contains(e.modality)) {
      invalid(f + ".modality", "'" + e.modality + "' is neither patch, location, nor a data.cubes entry");
    }
    if (e.input_channels && *e.input_channels < 1) invalid(f + ".input_channels", "must be >= 1");
    if (e.embedding_dim < 1) invalid(f + ".embedding_dim", "must be >= 1");
    if (e.modifiers.input_channels && *e.modifiers.input_channels < 1) {
      invalid(f + ".modifiers.input_channels", "must be a positive integer");
    }
    if (e.modifiers.output_dim && *e.modifiers.output_dim < 1) {
      invalid(f + ".modifiers.output_dim", "must be a positive integer");
    }
  }

  const auto& o = cfg.optimizer;
  if (o.algorithm != "adamw") invalid("optimizer.algorithm", "only adamw is available");
  if (!(o.lr > 0.0)) invalid("optimizer.lr", "must be > 0");
  if (!(o.weight_decay >= 0.0)) invalid("optimizer.weight_decay", "must be >= 0");
  if (o.scheduler.name != "cosine_annealing") invalid("optimizer.scheduler.name", "only cosine_annealing is available");
  if (o.scheduler.t_max < 1) invalid("optimizer.scheduler.t_max", "must be >= 1");
  if (!(o.scheduler.eta_min >= 0.0 && o.scheduler.eta_min <= o.lr)) {
    invalid("optimizer.scheduler.eta_min", "must satisfy 0 <= eta_min <= lr");
  }
  if (!(o.loss.pos_weight >= 0.0)) invalid("optimizer.loss.pos_weight", "must be >= 0");
  if (o.loss.name != default_loss_for(t.type)) {
    invalid("optimizer.loss.name", "'" + o.loss.name + "' does not match task type " + std::string(to_string(t.type)) +
                                       " (expected " + std::string(default_loss_for(t.type)) + ")");
  }
}

namespace {

void emit_double(YAML::Emitter& out, const char* key, double v) {
  out << YAML::Key << key << YAML::Value << format_double(v);
}

template <typename T>
void emit_opt(YAML::Emitter& out, const char* key, const std::optional<T>& v) {
  if (v) out << YAML::Key << key << YAML::Value << *v;
}

}  // namespace

std::string render_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;

  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << std::string(to_string(cfg.run.mode));
  out << YAML::Key << "seed" << YAML::Value << cfg.run.seed;
  emit_opt(out, "checkpoint", cfg.run.checkpoint);
  out << YAML::Key << "output_dir" << YAML::Value << cfg.run.output_dir;
  out << YAML::EndMap;

  const auto& d = cfg.data;
  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "observations" << YAML::Value << d.observations;
  emit_opt(out, "rasters", d.rasters);
  if (!d.cubes.empty()) {
    out << YAML::Key << "cubes" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : d.cubes) out << YAML::Key << k << YAML::Value << v;
    out << YAML::EndMap;
  }
  out << YAML::Key << "batch_size" << YAML::Value << d.batch_size;
  out << YAML::Key << "patch_size" << YAML::Value << d.patch_size;
  out << YAML::Key << "workers" << YAML::Value << d.workers;
  emit_opt(out, "split", d.split);
  emit_double(out, "split_cell_size", d.split_cell_size);
  emit_double(out, "val_fraction", d.val_fraction);
  out << YAML::Key << "normalize" << YAML::Value << d.normalize;
  out << YAML::EndMap;

  out << YAML::Key << "task" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "type" << YAML::Value << std::string(to_string(cfg.task.type));
  out << YAML::Key << "num_classes" << YAML::Value << cfg.task.num_classes;
  out << YAML::Key << "top_k" << YAML::Value << cfg.task.top_k;
  out << YAML::EndMap;

  const auto& t = cfg.trainer;
  out << YAML::Key << "trainer" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epochs" << YAML::Value << t.epochs;
  out << YAML::Key << "device" << YAML::Value << t.device;
  out << YAML::Key << "log_interval" << YAML::Value << t.log_interval;
  emit_opt(out, "checkpoint_dir", t.checkpoint_dir);
  out << YAML::EndMap;

  const auto& m = cfg.model;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "provider" << YAML::Value << m.provider;
  out << YAML::Key << "architecture" << YAML::Value << m.architecture;
  emit_double(out, "dropout", m.dropout);
  out << YAML::Key << "hidden_dim" << YAML::Value << m.hidden_dim;
  if (!m.encoders.empty()) {
    out << YAML::Key << "encoders" << YAML::Value << YAML::BeginSeq;
    for (const auto& e : m.encoders) {
      out << YAML::BeginMap;
      out << YAML::Key << "modality" << YAML::Value << e.modality;
      if (!e.provider.empty()) out << YAML::Key << "provider" << YAML::Value << e.provider;
      out << YAML::Key << "name" << YAML::Value << e.name;
      emit_opt(out, "input_channels", e.input_channels);
      out << YAML::Key << "embedding_dim" << YAML::Value << e.embedding_dim;
      out << YAML::Key << "pretrained" << YAML::Value << e.pretrained;
      if (!e.options.empty()) {
        out << YAML::Key << "options" << YAML::Value << YAML::BeginMap;
        for (const auto& [k, v] : e.options) emit_double(out, k.c_str(), v);
        out << YAML::EndMap;
      }
      out << YAML::Key << "modifiers" << YAML::Value << YAML::BeginMap;
      emit_opt(out, "input_channels", e.modifiers.input_channels);
      emit_opt(out, "output_dim", e.modifiers.output_dim);
      out << YAML::Key << "strip_head" << YAML::Value << e.modifiers.strip_head;
      out << YAML::EndMap;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;

  const auto& o = cfg.optimizer;
  out << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "algorithm" << YAML::Value << o.algorithm;
  emit_double(out, "lr", o.lr);
  emit_double(out, "weight_decay", o.weight_decay);
  out << YAML::Key << "scheduler" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << o.scheduler.name;
  out << YAML::Key << "t_max" << YAML::Value << o.scheduler.t_max;
  emit_double(out, "eta_min", o.scheduler.eta_min);
  out << YAML::EndMap;
  out << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << o.loss.name;
  emit_double(out, "pos_weight", o.loss.pos_weight);
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

nlohmann::json canonical_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  auto opt = [](json& j, const char* key, const auto& v) {
    if (v) j[key] = *v;
  };
  json run{{"mode", to_string(cfg.run.mode)}, {"seed", cfg.run.seed}, {"output_dir", cfg.run.output_dir}};
  opt(run, "checkpoint", cfg.run.checkpoint);

  const auto& d = cfg.data;
  json data{{"observations", d.observations},     {"cubes", d.cubes},
            {"batch_size", d.batch_size},         {"patch_size", d.patch_size},
            {"workers", d.workers},               {"split_cell_size", d.split_cell_size},
            {"val_fraction", d.val_fraction},     {"normalize", d.normalize}};
  opt(data, "rasters", d.rasters);
  opt(data, "split", d.split);

  json task{{"type", to_string(cfg.task.type)}, {"num_classes", cfg.task.num_classes}, {"top_k", cfg.task.top_k}};

  json trainer{{"epochs", cfg.trainer.epochs}, {"device", cfg.trainer.device}, {"log_interval", cfg.trainer.log_interval}};
  opt(trainer, "checkpoint_dir", cfg.trainer.checkpoint_dir);

  json encoders = json::array();
  for (const auto& e : cfg.model.encoders) {
    json mods{{"strip_head", e.modifiers.strip_head}};
    opt(mods, "input_channels", e.modifiers.input_channels);
    opt(mods, "output_dim", e.modifiers.output_dim);
    json enc{{"modality", e.modality}, {"provider", e.provider},   {"name", e.name},
             {"embedding_dim", e.embedding_dim}, {"pretrained", e.pretrained}, {"options", e.options},
             {"modifiers", mods}};
    opt(enc, "input_channels", e.input_channels);
    encoders.push_back(std::move(enc));
  }
  json model{{"provider", cfg.model.provider}, {"architecture", cfg.model.architecture},
             {"encoders", encoders},           {"dropout", cfg.model.dropout},
             {"hidden_dim", cfg.model.hidden_dim}};

  const auto& o = cfg.optimizer;
  json optimizer{{"algorithm", o.algorithm},
                 {"lr", o.lr},
                 {"weight_decay", o.weight_decay},
                 {"scheduler", {{"name", o.scheduler.name}, {"t_max", o.scheduler.t_max}, {"eta_min", o.scheduler.eta_min}}},
                 {"loss", {{"name", o.loss.name}, {"pos_weight", o.loss.pos_weight}}}};

  return json{{"run", run}, {"data", data}, {"task", task}, {"trainer", trainer}, {"model", model}, {"optimizer", optimizer}};
}

std::string config_digest(const ExperimentConfig& cfg) {
  return sha256_hex(canonical_json(cfg).dump()).substr(0, 16);
}

}  // namespace geosdm::config
