// SPDX-License-Identifier: Apache-2.0
#include "geosdm/engine/trainer.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>

#include "geosdm/core/error.hpp"
#include "geosdm/core/rng.hpp"
#include "geosdm/core/util.hpp"
#include "geosdm/engine/batching.hpp"
#include "geosdm/engine/optimizer.hpp"
#include "geosdm/engine/schedule.hpp"
#include "geosdm/evalkit/report.hpp"

namespace geosdm::engine {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Mirrors progress lines to stderr and the run's train.log.
class RunLog {
 public:
  explicit RunLog(const fs::path& path) : out_(path) {
    if (!out_) throw Error(ErrorKind::io, "cannot open " + path.string());
  }
  template <typename... Args>
  void info(fmt::format_string<Args...> f, Args&&... args) {
    const std::string line = fmt::format(f, std::forward<Args>(args)...);
    log().info("{}", line);
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string csv_real(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

}  // namespace

std::size_t effective_k(const config::ExperimentConfig& cfg) {
  const auto s = static_cast<std::size_t>(cfg.task.num_classes);
  return std::min(static_cast<std::size_t>(cfg.task.top_k), s);
}

fs::path make_run_dir(const fs::path& root, const std::string& digest) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + root.string() + ": " + ec.message());
  const std::string base = utc_stamp() + "-" + digest.substr(0, 8);
  for (int attempt = 0;; ++attempt) {
    const fs::path dir = root / (attempt == 0 ? base : base + "-" + std::to_string(attempt + 1));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  }
}

std::string metrics_csv_header() {
  std::string h = "epoch,lr,train_loss,val_loss";
  for (const auto& name : evalkit::MetricReport::metric_names()) h += "," + name;
  return h;
}

InferenceResult run_inference(modelkit::MultiModalModel& model, const geodata::SampleSource& source,
                              const LossSpec& loss, std::size_t batch_size, std::size_t workers, std::size_t k) {
  InferenceResult out;
  modelkit::ForwardContext ctx{false, nullptr};
  auto stream = make_batches(source, batch_size, false, 0, 0, workers);
  double loss_sum = 0.0;
  std::size_t labeled = 0;
  while (auto batch = stream->next()) {
    const Tensor logits = model.forward(batch->inputs, ctx);
    const Tensor scores = link_scores(loss.kind, logits);
    if (!batch->labels.empty()) {
      const double l = compute_loss(loss, logits, batch->labels).value;
      loss_sum += l * static_cast<double>(batch->indices.size());
      labeled += batch->indices.size();
    }
    for (std::size_t i = 0; i < batch->indices.size(); ++i) {
      evalkit::PredictionSet p;
      p.survey_id = batch->survey_ids[i];
      const auto row = scores.row(i);
      p.scores.assign(row.begin(), row.end());
      p.topk = evalkit::top_k(p.scores, std::min(k, p.scores.size()));
      out.predictions.push_back(std::move(p));
      if (!batch->labels.empty()) {
        const auto y = batch->labels.row(i);
        evalkit::MultiHot mh(y.size());
        for (std::size_t c = 0; c < y.size(); ++c) mh[c] = y[c] != 0.0 ? 1 : 0;
        out.labels.push_back({batch->survey_ids[i], std::move(mh)});
      }
    }
  }
  out.loss = labeled ? loss_sum / static_cast<double>(labeled) : kNaN;
  return out;
}

FitResult fit(const config::ExperimentConfig& cfg, modelkit::MultiModalModel& model,
              const geodata::SampleSource& train, const geodata::SampleSource& val, const FitOptions& options) {
  config::validate(cfg);
  if (train.size() == 0) throw Error(ErrorKind::data, "training source is empty");
  if (val.size() == 0) throw Error(ErrorKind::data, "validation source is empty");

  const std::string digest = config_digest(cfg);
  FitResult result;
  if (options.run_dir) {
    result.run_dir = *options.run_dir;
    fs::create_directories(result.run_dir);
  } else {
    const fs::path root = cfg.trainer.checkpoint_dir ? fs::path(*cfg.trainer.checkpoint_dir) : fs::path(cfg.run.output_dir);
    result.run_dir = make_run_dir(root, digest);
  }
  write_text(result.run_dir / "config.yaml", config::render_config(cfg));
  RunLog runlog(result.run_dir / "train.log");

  std::ofstream metrics(result.run_dir / "metrics.csv");
  if (!metrics) throw Error(ErrorKind::io, "cannot open metrics.csv in " + result.run_dir.string());
  metrics << metrics_csv_header() << '\n';

  const LossSpec loss = loss_spec_for(cfg);
  const ScheduleSpec schedule = schedule_spec_for(cfg);
  AdamW optimizer(AdamWConfig{cfg.optimizer.weight_decay});
  CheckpointTracker tracker;
  const auto seed = static_cast<std::uint64_t>(cfg.run.seed);
  const auto batch_size = static_cast<std::size_t>(cfg.data.batch_size);
  const auto workers = static_cast<std::size_t>(cfg.data.workers);
  const std::size_t k = effective_k(cfg);
  if (k < static_cast<std::size_t>(cfg.task.top_k)) {
    log().warn("top_k {} exceeds {} classes; validation metrics use k={}", cfg.task.top_k, cfg.task.num_classes, k);
  }

  TrainState& state = result.state;
  state.rng_seed = cfg.run.seed;
  runlog.info("run {} | {} train / {} val samples | {} parameters | loss {}", result.run_dir.string(), train.size(),
              val.size(), model.parameter_count(), to_string(loss.kind));

  for (std::int64_t epoch = 0; epoch < cfg.trainer.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, schedule);
    auto stream = make_batches(train, batch_size, true, seed, static_cast<std::uint64_t>(epoch), workers);
    Rng dropout_rng(derive_seed(seed, streams::dropout, static_cast<std::uint64_t>(epoch)));
    modelkit::ForwardContext ctx{true, &dropout_rng};
    const auto params = model.parameters();

    double loss_sum = 0.0;
    std::size_t seen = 0, finite_batches = 0, batch_no = 0;
    while (auto batch = stream->next()) {
      ++batch_no;
      model.zero_grad();
      const Tensor logits = model.forward(batch->inputs, ctx);
      const LossResult l = compute_loss(loss, logits, batch->labels);
      if (!std::isfinite(l.value)) {
        log().warn("epoch {} batch {}: non-finite loss, step skipped", epoch, batch_no);
        continue;
      }
      model.backward(l.grad);
      if (optimizer.step(params, lr)) ++state.global_step;
      ++finite_batches;
      loss_sum += l.value * static_cast<double>(batch->indices.size());
      seen += batch->indices.size();
      if (cfg.trainer.log_interval > 0 && batch_no % static_cast<std::size_t>(cfg.trainer.log_interval) == 0) {
        log().info("epoch {} [{}/{}] loss {:.6f}", epoch, batch_no, stream->size(), l.value);
      }
    }
    if (finite_batches == 0) {
      throw Error(ErrorKind::non_finite, fmt::format("epoch {}: training loss was non-finite for every batch", epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    const InferenceResult inf = run_inference(model, val, loss, batch_size, workers, k);
    rec.val_loss = inf.loss;
    evalkit::MetricReport report;
    try {
      report = evalkit::evaluate(inf.predictions, inf.labels, k);
      rec.metrics = report.metric_values();
    } catch (const Error& e) {
      log().warn("epoch {}: validation metrics unavailable ({})", epoch, e.what());
      rec.metrics.assign(evalkit::MetricReport::metric_names().size(), kNaN);
    }

    std::string row = fmt::format("{},{},{},{}", epoch, csv_real(rec.lr), csv_real(rec.train_loss), csv_real(rec.val_loss));
    for (double m : rec.metrics) row += "," + csv_real(m);
    metrics << row << '\n';
    metrics.flush();
    if (!metrics) throw Error(ErrorKind::io, "write to metrics.csv failed");

    state.epoch = epoch + 1;
    state.lr_current = lr;
    const bool improved = tracker.update(rec.val_loss, epoch);
    if (improved) {
      state.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.best_report = report;
      save_checkpoint(capture_checkpoint(model, &optimizer, state, digest), result.run_dir / "best.ckpt");
    }
    save_checkpoint(capture_checkpoint(model, &optimizer, state, digest), result.run_dir / "last.ckpt");

    const std::size_t micro_auc_col = 0;
    runlog.info("epoch {}/{} lr {:.3e} train_loss {:.6f} val_loss {:.6f} micro_auc {:.4f}{}", epoch + 1,
                cfg.trainer.epochs, lr, rec.train_loss, rec.val_loss, rec.metrics[micro_auc_col],
                improved ? " (best)" : "");
    result.history.push_back(std::move(rec));
  }
  if (result.best_epoch < 0) {
    log().warn("validation loss never finite; best.ckpt holds the final weights");
    save_checkpoint(capture_checkpoint(model, &optimizer, state, digest), result.run_dir / "best.ckpt");
  }
  return result;
}

std::vector<evalkit::PredictionSet> predict(const config::ExperimentConfig& cfg, modelkit::MultiModalModel& model,
                                            const fs::path& weights, const geodata::SampleSource& test,
                                            const fs::path& out_csv) {
  const Checkpoint ck = load_checkpoint(weights);
  restore_weights(model, ck);
  const std::string digest = config_digest(cfg);
  if (ck.config_digest != digest) {
    log().info("checkpoint config digest {} differs from current {} (architecture matches)", ck.config_digest, digest);
  }
  const std::size_t k = effective_k(cfg);
  if (k < static_cast<std::size_t>(cfg.task.top_k)) {
    log().warn("top_k {} exceeds {} classes; predictions list k={}", cfg.task.top_k, cfg.task.num_classes, k);
  }
  auto inf = run_inference(model, test, loss_spec_for(cfg), static_cast<std::size_t>(cfg.data.batch_size),
                           static_cast<std::size_t>(cfg.data.workers), k);
  if (!out_csv.empty()) {
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    evalkit::save_predictions(inf.predictions, out_csv);
  }
  return std::move(inf.predictions);
}

}  // namespace geosdm::engine
