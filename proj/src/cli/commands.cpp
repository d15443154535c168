// SPDX-License-Identifier: Apache-2.0
#include "geosdm/cli/commands.hpp"

#include <CLI11.hpp>
#include <climits>
#include <ostream>

#include "geosdm/cli/pipeline.hpp"
#include "geosdm/config/config.hpp"
#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"
#include "geosdm/engine/trainer.hpp"
#include "geosdm/evalkit/metrics.hpp"
#include "geosdm/evalkit/report.hpp"
#include "geosdm/geodata/cubes.hpp"
#include "geosdm/geodata/raster.hpp"
#include "geosdm/split/split.hpp"

namespace geosdm::cli {

namespace fs = std::filesystem;

namespace {

config::ExperimentConfig load_with_overrides(const fs::path& path, const GlobalOptions& opts) {
  auto cfg = config::load_config(path);
  if (opts.seed) cfg.run.seed = *opts.seed;
  config::validate(cfg);
  return cfg;
}

void refuse_clobber(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw Error(ErrorKind::io, path.string() + " already exists; pass --force to overwrite");
  }
}

}  // namespace

TrainOutcome cmd_train(const fs::path& config_path, const GlobalOptions& opts) {
  auto cfg = load_with_overrides(config_path, opts);
  if (cfg.run.mode != config::RunMode::train) {
    throw Error(ErrorKind::validation, "run.mode is '" + std::string(config::to_string(cfg.run.mode)) +
                                           "'; the train command needs mode train");
  }
  if (opts.out) {
    cfg.run.output_dir = opts.out->string();
    cfg.trainer.checkpoint_dir.reset();
  }
  const LoadedData data = load_data(cfg);
  const split::SpatialSplit sp = resolve_split(cfg, data.table);
  auto [train_table, val_table] = split::apply_split(data.table, sp);
  log().info("split: {} train / {} val surveys (val fraction {:.4f})", train_table.size(), val_table.size(),
             sp.val_fraction());

  auto model = build_model(cfg, data);
  if (cfg.run.checkpoint) {
    engine::restore_weights(model, engine::load_checkpoint(*cfg.run.checkpoint));
    log().info("initialized weights from {}", *cfg.run.checkpoint);
  }
  const auto train_ds = dataset_for(cfg, data, model, std::move(train_table), geodata::LabelsMode::train);
  const auto val_ds = dataset_for(cfg, data, model, std::move(val_table), geodata::LabelsMode::train);

  const auto result = engine::fit(cfg, model, *train_ds, *val_ds);
  split::save_split(sp, result.run_dir / "split.csv");
  log().info("best val loss {} at epoch {}", format_double(result.state.best_val_loss), result.best_epoch);
  return {result.run_dir, result.state.best_val_loss, result.best_epoch};
}

fs::path cmd_predict(const fs::path& config_path, const std::optional<fs::path>& weights, const GlobalOptions& opts) {
  const auto cfg = load_with_overrides(config_path, opts);
  fs::path ckpt;
  if (weights) {
    ckpt = *weights;
  } else if (cfg.run.checkpoint) {
    ckpt = *cfg.run.checkpoint;
  } else {
    throw Error(ErrorKind::validation, "predict needs --weights or run.checkpoint");
  }
  const fs::path out = opts.out ? *opts.out : ckpt.parent_path() / "predictions.csv";
  refuse_clobber(out, opts.force);

  const LoadedData data = load_data(cfg);
  auto model = build_model(cfg, data);
  const auto ds = dataset_for(cfg, data, model, data.table, geodata::LabelsMode::predict);
  const auto preds = engine::predict(cfg, model, ckpt, *ds, out);
  log().info("{} surveys scored with {}", preds.size(), ckpt.string());
  return out;
}

std::vector<fs::path> cmd_evaluate(const fs::path& predictions, const fs::path& labels, std::size_t k,
                                   const GlobalOptions& opts) {
  const auto preds = evalkit::load_predictions(predictions);
  if (preds.empty()) throw Error(ErrorKind::alignment, predictions.string() + " holds no predictions");
  const std::size_t s = preds.front().scores.size();
  const auto table = geodata::load_observations(labels, static_cast<int>(s));

  std::vector<evalkit::LabeledRow> rows;
  rows.reserve(preds.size());
  for (const auto& p : preds) {
    const auto idx = table.find(p.survey_id);
    if (!idx) throw Error(ErrorKind::alignment, "survey '" + p.survey_id + "' has no row in " + labels.string());
    evalkit::MultiHot mh(s, 0);
    for (int sp : table[*idx].species_ids) mh[static_cast<std::size_t>(sp)] = 1;
    rows.push_back({p.survey_id, std::move(mh)});
  }
  if (table.size() != preds.size()) {
    log().warn("{} label surveys without a prediction are ignored", table.size() - preds.size());
  }
  const auto report = evalkit::evaluate(preds, rows, k);
  const fs::path dir = opts.out ? *opts.out : predictions.parent_path();
  refuse_clobber(dir / "report.json", opts.force);
  refuse_clobber(dir / "report.txt", opts.force);
  log().info("\n{}", evalkit::report_text(report));
  return evalkit::write_report(report, dir.empty() ? fs::path(".") : dir);
}

fs::path cmd_split(const fs::path& config_path, const GlobalOptions& opts) {
  const auto cfg = load_with_overrides(config_path, opts);
  const fs::path out = opts.out ? *opts.out : fs::path(cfg.run.output_dir) / "split.csv";
  refuse_clobber(out, opts.force);
  const auto table = geodata::load_observations(cfg.data.observations, cfg.task.num_classes);
  const auto sp = split::block_holdout(table, cfg.data.split_cell_size, cfg.data.val_fraction,
                                       static_cast<std::uint64_t>(cfg.run.seed));
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  split::save_split(sp, out);
  log().info("split: {} train / {} val surveys (val fraction {:.4f})", sp.count(split::Partition::train),
             sp.count(split::Partition::val), sp.val_fraction());
  return out;
}

fs::path cmd_build_cubes(const fs::path& raster_manifest, const fs::path& observations, const std::string& group,
                         const GlobalOptions& opts) {
  if (!opts.out) throw Error(ErrorKind::validation, "build-cubes needs --out <cube manifest path>");
  refuse_clobber(*opts.out, opts.force);
  const auto manifest = geodata::load_raster_manifest(raster_manifest);
  const auto layers = geodata::load_tagged_layers(manifest, group);
  if (layers.empty()) throw Error(ErrorKind::coverage, "no layers tagged with group '" + group + "'");
  geodata::CubeShape shape;
  for (const auto& l : layers) {
    shape.bands = std::max(shape.bands, l.tag.band + 1);
    shape.steps = std::max(shape.steps, l.tag.step + 1);
    shape.years = std::max(shape.years, l.tag.year + 1);
  }
  const auto table = geodata::load_observations(observations, INT_MAX);
  const auto set = geodata::build_time_series_cubes(layers, table, shape);
  if (opts.out->has_parent_path()) fs::create_directories(opts.out->parent_path());
  geodata::save_cubes(set, *opts.out);
  return *opts.out;
}

SyntheticArtifacts cmd_make_synthetic(const SyntheticSpec& spec, const GlobalOptions& opts) {
  if (!opts.out) throw Error(ErrorKind::validation, "make-synthetic needs --out <directory>");
  if (!opts.force && fs::exists(*opts.out) && !fs::is_empty(*opts.out)) {
    throw Error(ErrorKind::io, opts.out->string() + " is not empty; pass --force to overwrite");
  }
  return make_synthetic(spec, *opts.out);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"geosdm: multimodal species distribution modeling"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::string out_path;
  std::int64_t seed = 0;
  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override run.seed");
    sub->add_option("--out", out_path, "Output path");
    sub->add_flag("--force", opts.force, "Overwrite existing artifacts");
  };

  std::string config_path, weights, predictions, labels, rasters, observations, group;
  std::size_t k = 25;
  SyntheticSpec synth;

  auto* train = app.add_subcommand("train", "Train a model from a config");
  train->add_option("--config", config_path, "Experiment config")->required();
  add_globals(train);

  auto* predict = app.add_subcommand("predict", "Score surveys with trained weights");
  predict->add_option("--config", config_path, "Experiment config")->required();
  predict->add_option("--weights", weights, "Checkpoint (default run.checkpoint)");
  add_globals(predict);

  auto* evaluate = app.add_subcommand("evaluate", "Top-k and AUC metrics for a predictions file");
  evaluate->add_option("--predictions", predictions, "predictions.csv")->required();
  evaluate->add_option("--labels", labels, "Observations CSV with true species")->required();
  evaluate->add_option("--k", k, "Top-k size")->default_val(25);
  add_globals(evaluate);

  auto* split_cmd = app.add_subcommand("split", "Spatial block holdout of the configured observations");
  split_cmd->add_option("--config", config_path, "Experiment config")->required();
  add_globals(split_cmd);

  auto* cubes = app.add_subcommand("build-cubes", "Extract time-series cubes from tagged rasters");
  cubes->add_option("--rasters", rasters, "Raster manifest")->required();
  cubes->add_option("--observations", observations, "Observations CSV")->required();
  cubes->add_option("--group", group, "Layer group")->required();
  add_globals(cubes);

  auto* synthetic = app.add_subcommand("make-synthetic", "Write a seeded synthetic dataset and config");
  synthetic->add_option("--surveys", synth.surveys, "Survey count")->default_val(synth.surveys);
  synthetic->add_option("--species", synth.species, "Species count")->default_val(synth.species);
  synthetic->add_option("--epochs", synth.epochs, "Epochs in the written config")->default_val(synth.epochs);
  add_globals(synthetic);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--out")) opts.out = fs::path(out_path);

    if (sub == train) {
      const auto r = cmd_train(config_path, opts);
      out << r.run_dir.string() << '\n';
      out << "best val loss " << format_double(r.best_val_loss) << " (epoch " << r.best_epoch << ")\n";
    } else if (sub == predict) {
      const auto path = cmd_predict(config_path, weights.empty() ? std::nullopt : std::optional<fs::path>(weights), opts);
      out << path.string() << '\n';
    } else if (sub == evaluate) {
      for (const auto& p : cmd_evaluate(predictions, labels, k, opts)) out << p.string() << '\n';
    } else if (sub == split_cmd) {
      out << cmd_split(config_path, opts).string() << '\n';
    } else if (sub == cubes) {
      out << cmd_build_cubes(rasters, observations, group, opts).string() << '\n';
    } else if (sub == synthetic) {
      if (opts.seed) synth.seed = static_cast<std::uint64_t>(*opts.seed);
      for (const auto& p : cmd_make_synthetic(synth, opts).all()) out << p.string() << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace geosdm::cli
