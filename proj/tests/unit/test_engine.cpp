// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "geosdm/config/config.hpp"
#include "geosdm/core/util.hpp"
#include "geosdm/engine/batching.hpp"
#include "geosdm/engine/checkpoint.hpp"
#include "geosdm/engine/loss.hpp"
#include "geosdm/engine/optimizer.hpp"
#include "geosdm/engine/schedule.hpp"
#include "geosdm/engine/trainer.hpp"
#include "geosdm/evalkit/metrics.hpp"
#include "geosdm/evalkit/report.hpp"
#include "support/expect.hpp"
#include "support/gradcheck.hpp"
#include "support/memory_source.hpp"
#include "support/tempdir.hpp"

using namespace geosdm;
using namespace geosdm::engine;
using testing::error_kind;

namespace {

Tensor scalar(double v) { return Tensor({1, 1}, std::vector<double>{v}); }

config::ExperimentConfig toy_config(const std::filesystem::path& root, std::size_t classes, int epochs) {
  config::ExperimentConfig cfg;
  cfg.data.observations = "memory";
  cfg.data.batch_size = 16;
  cfg.task.num_classes = static_cast<int>(classes);
  cfg.task.top_k = 3;
  cfg.trainer.epochs = epochs;
  cfg.trainer.checkpoint_dir = root.string();
  cfg.optimizer.loss.name = "weighted_bce_logits";
  cfg.run.seed = 5;
  return cfg;
}

modelkit::MultiModalModel toy_model(std::size_t classes, std::uint64_t seed) {
  return testing::gradcheck_model(classes, seed);
}

}  // namespace

TEST_CASE("weighted logistic loss closed forms and stability") {
  CHECK(weighted_bce_logits(scalar(0), scalar(1), 10) == doctest::Approx(10 * std::numbers::ln2).epsilon(1e-12));
  CHECK(std::abs(weighted_bce_logits(scalar(0), scalar(1), 10) - 10 * std::numbers::ln2) <= 1e-9);
  CHECK(weighted_bce_logits(scalar(0), scalar(0), 10) == doctest::Approx(std::numbers::ln2));
  const double sat = weighted_bce_logits(scalar(100), scalar(1), 10);
  CHECK(sat >= 0.0);
  CHECK(sat < 1e-40);
  for (double z : {1e4, -1e4}) {
    for (double y : {0.0, 1.0}) {
      const double v = weighted_bce_logits(scalar(z), scalar(y), 10);
      CHECK(std::isfinite(v));
      const Tensor g = weighted_bce_logits_grad(scalar(z), scalar(y), 10);
      CHECK(std::isfinite(g[0]));
    }
  }
  CHECK(error_kind([] { weighted_bce_logits(scalar(0), Tensor({1, 2}), 10); }) == ErrorKind::shape);
  CHECK(error_kind([] { weighted_bce_logits(scalar(0), scalar(0.5), 10); }) == ErrorKind::domain);
}

TEST_CASE("loss is non-negative and its gradient matches finite differences") {
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const double z = rng.uniform(-30, 30), y = rng.below(2) ? 1.0 : 0.0, w = rng.uniform(0.5, 20);
    CHECK(weighted_bce_logits(scalar(z), scalar(y), w) >= 0.0);
    const double h = 1e-6;
    const double num =
        (weighted_bce_logits(scalar(z + h), scalar(y), w) - weighted_bce_logits(scalar(z - h), scalar(y), w)) / (2 * h);
    CHECK(weighted_bce_logits_grad(scalar(z), scalar(y), w)[0] == doctest::Approx(num).epsilon(1e-5));
  }
}

TEST_CASE("compute_loss variants") {
  const Tensor logits({2, 3}, std::vector<double>{1, 2, 3, 0, 0, 0});
  const Tensor onehot({2, 3}, std::vector<double>{0, 0, 1, 1, 0, 0});
  const auto ce = compute_loss({LossKind::softmax_ce, 0}, logits, onehot);
  const double row0 = -3 + std::log(std::exp(1) + std::exp(2) + std::exp(3));
  CHECK(ce.value == doctest::Approx((row0 + std::log(3.0)) / 2));
  CHECK(error_kind([] {
          compute_loss({LossKind::softmax_ce, 0}, Tensor({1, 2}), Tensor({1, 2}, std::vector<double>{1, 1}));
        }) == ErrorKind::domain);
  const auto bin = compute_loss({LossKind::bce_logits_binary, 1.0}, Tensor({1, 1}, std::vector<double>{0.0}),
                                Tensor({1, 2}, std::vector<double>{0, 1}));
  CHECK(bin.value == doctest::Approx(std::numbers::ln2));
  const Tensor probs = link_scores(LossKind::bce_logits_binary, Tensor({1, 1}, std::vector<double>{0.0}));
  CHECK(probs.shape() == Shape{1, 2});
  CHECK(probs[1] == 0.5);
}

TEST_CASE("cosine schedule closed forms") {
  const ScheduleSpec spec;
  CHECK(cosine_lr(0, spec) == 2.5e-4);
  CHECK(cosine_lr(25, spec) == 0.0);
  CHECK(cosine_lr(12, ScheduleSpec{2.5e-4, 0.0, 24}) == doctest::Approx(1.25e-4).epsilon(1e-14));
  CHECK(cosine_lr(40, spec) == cosine_lr(25, spec));
  for (std::int64_t t = 1; t <= 25; ++t) CHECK(cosine_lr(t, spec) <= cosine_lr(t - 1, spec));
  CHECK(error_kind([] { cosine_lr(0, ScheduleSpec{1e-3, 0, 0}); }) == ErrorKind::validation);
}

TEST_CASE("AdamW closed forms") {
  modelkit::Parameter p({3});
  p.value = Tensor({3}, std::vector<double>{1.0, -2.0, 0.5});
  {
    AdamW opt(AdamWConfig{0.0});
    auto q = p;
    opt.step({{"w", &q}}, 0.1);
    CHECK(q.value == p.value);
  }
  {
    AdamW opt;
    auto q = p;
    opt.step({{"w", &q}}, 0.1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(q.value[i] == doctest::Approx(p.value[i] * (1 - 0.1 * 0.01)));
  }
  {
    AdamW opt;
    modelkit::Parameter w({1});
    w.value[0] = 1.0;
    for (int s = 0; s < 5; ++s) {
      const double before = std::abs(w.value[0]);
      w.grad[0] = 2 * w.value[0];
      opt.step({{"w", &w}}, 0.05);
      CHECK(std::abs(w.value[0]) < before);
    }
    CHECK(opt.steps() == 5);
  }
  {
    AdamW opt;
    auto q = p;
    q.grad[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(opt.step({{"w", &q}}, 0.1));
    CHECK(q.value == p.value);
    CHECK(opt.skipped() == 1);
    CHECK(opt.steps() == 0);
  }
}

TEST_CASE("batch planning") {
  const auto plan = plan_batches(10, 4, true, 3, 0);
  std::vector<std::size_t> sizes;
  std::set<std::size_t> all;
  for (const auto& b : plan) {
    sizes.push_back(b.size());
    all.insert(b.begin(), b.end());
  }
  CHECK(sizes == std::vector<std::size_t>{4, 4, 2});
  CHECK(all.size() == 10);
  CHECK(plan == plan_batches(10, 4, true, 3, 0));
  CHECK(plan != plan_batches(10, 4, true, 3, 1));
  const auto ordered = plan_batches(10, 4, false, 3, 0);
  CHECK(ordered[0] == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(ordered[2] == std::vector<std::size_t>{8, 9});
  CHECK(plan_batches(5, 50, false, 0, 0).size() == 1);
  CHECK(error_kind([] { plan_batches(0, 4, false, 0, 0); }) == ErrorKind::data);
}

TEST_CASE("batch streams deliver identical batches for any worker count") {
  const testing::MemorySource src(testing::toy_samples(37, 4, 2));
  auto collect = [&](std::size_t workers) {
    std::vector<Batch> out;
    auto stream = make_batches(src, 5, true, 11, 2, workers);
    while (auto b = stream->next()) out.push_back(std::move(*b));
    return out;
  };
  const auto one = collect(1), four = collect(4);
  REQUIRE(one.size() == four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].indices == four[i].indices);
    CHECK(one[i].survey_ids == four[i].survey_ids);
    CHECK(one[i].labels == four[i].labels);
    CHECK(one[i].inputs == four[i].inputs);
  }
  CHECK(one[0].inputs.at("patch").shape() == Shape{5, 4, 8, 8});
  CHECK(one[0].inputs.at("climate").shape() == Shape{5, 2, 4, 3});
  CHECK(one[0].inputs.at("location").shape() == Shape{5, 2});
  CHECK(one[0].labels.shape() == Shape{5, 4});
}

TEST_CASE("analytic gradients match central differences") {
  const auto out = testing::run_gradcheck(3, 80);
  CHECK(out.checked >= 50);
  CHECK(out.kinks < out.checked);
  CHECK_MESSAGE(out.max_rel_error <= 1e-4, out.worst << " rel " << out.max_rel_error);
}

TEST_CASE("checkpoint round-trip and mismatch diagnostics") {
  testing::TempDir dir("ckpt");
  auto model = toy_model(4, 1);
  AdamW opt;
  for (auto& [_, p] : model.parameters()) p->grad.fill(0.01);
  opt.step(model.parameters(), 1e-3);
  TrainState st{3, 0.42, 17, 5, 1e-4};
  const auto ck = capture_checkpoint(model, &opt, st, "cfgdigest");
  save_checkpoint(ck, dir / "a.ckpt");
  const auto back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.weights == ck.weights);
  CHECK(back.state == st);
  CHECK(back.optimizer_steps == 1);
  CHECK(back.config_digest == "cfgdigest");
  CHECK(back.architecture_digest == model.architecture_digest());
  for (const auto& [name, m] : ck.moments) {
    CHECK(back.moments.at(name).m == m.m);
    CHECK(back.moments.at(name).v == m.v);
  }

  auto fresh = toy_model(4, 99);
  restore_weights(fresh, back);
  for (auto& [name, p] : fresh.parameters()) CHECK(p->value == ck.weights.at(name));

  auto other = toy_model(6, 1);
  try {
    restore_weights(other, back);
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::checkpoint_mismatch);
    CHECK(std::string(e.what()).find("head.fc2.weight") != std::string::npos);
  }

  TrainState inf_state;
  save_checkpoint(capture_checkpoint(model, nullptr, inf_state, "d"), dir / "inf.ckpt");
  CHECK(std::isinf(load_checkpoint(dir / "inf.ckpt").state.best_val_loss));

  write_text(dir / "bad.ckpt", "not a checkpoint");
  CHECK(error_kind([&] { load_checkpoint(dir / "bad.ckpt"); }) == ErrorKind::format);
  const auto bytes = read_text(dir / "a.ckpt");
  write_text(dir / "short.ckpt", bytes.substr(0, bytes.size() - 8));
  CHECK(error_kind([&] { load_checkpoint(dir / "short.ckpt"); }).has_value());
}

TEST_CASE("checkpoint tracker keeps the argmin") {
  CheckpointTracker t;
  CHECK(t.update(0.9, 0));
  CHECK(t.update(0.7, 1));
  CHECK_FALSE(t.update(0.8, 2));
  CHECK_FALSE(t.update(0.7, 3));
  CHECK(t.best_epoch() == 1);
  CHECK(t.best() == 0.7);
}

TEST_CASE("fit writes run artefacts, tracks best, and is reproducible") {
  testing::TempDir dir("fit");
  const testing::MemorySource train(testing::toy_samples(100, 4, 1));
  const testing::MemorySource val(testing::toy_samples(30, 4, 2));
  const auto cfg = toy_config(dir.path(), 4, 2);

  auto model_a = toy_model(4, 8);
  const auto a = fit(cfg, model_a, train, val);
  CHECK(a.history.size() == 2);
  for (const char* f : {"best.ckpt", "last.ckpt", "metrics.csv", "config.yaml", "train.log"}) {
    CHECK_MESSAGE(std::filesystem::exists(a.run_dir / f), f);
  }
  const auto lines = split_fields(read_text(a.run_dir / "metrics.csv"), '\n');
  std::size_t nonempty = 0;
  for (const auto& l : lines) nonempty += !l.empty();
  CHECK(nonempty == 3);
  CHECK(lines[0] == metrics_csv_header());

  const auto lr = testing::csv_column(a.run_dir / "metrics.csv", "lr");
  const auto val_loss = testing::csv_column(a.run_dir / "metrics.csv", "val_loss");
  const ScheduleSpec sched = schedule_spec_for(cfg);
  std::size_t argmin = 0;
  for (std::size_t e = 0; e < lr.size(); ++e) {
    CHECK(parse_double(lr[e], "lr") == cosine_lr(static_cast<std::int64_t>(e), sched));
    if (parse_double(val_loss[e], "v") < parse_double(val_loss[argmin], "v")) argmin = e;
  }
  const auto best = load_checkpoint(a.run_dir / "best.ckpt");
  CHECK(best.state.epoch == static_cast<std::int64_t>(argmin) + 1);
  CHECK(a.best_epoch == static_cast<std::int64_t>(argmin));

  auto model_b = toy_model(4, 8);
  const auto b = fit(cfg, model_b, train, val);
  CHECK(a.run_dir != b.run_dir);
  CHECK(testing::csv_column(b.run_dir / "metrics.csv", "train_loss") ==
        testing::csv_column(a.run_dir / "metrics.csv", "train_loss"));
  CHECK(testing::csv_column(b.run_dir / "metrics.csv", "val_loss") == val_loss);

  SUBCASE("predict from best.ckpt reproduces the validation forward") {
    auto restored = toy_model(4, 1234);
    const auto preds = predict(cfg, restored, a.run_dir / "best.ckpt", val, dir / "p.csv");
    auto reference = toy_model(4, 77);
    restore_weights(reference, best);
    const auto inf = run_inference(reference, val, loss_spec_for(cfg), 7, 2, 3);
    REQUIRE(preds.size() == inf.predictions.size());
    double worst = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      CHECK(preds[i].survey_id == inf.predictions[i].survey_id);
      for (std::size_t c = 0; c < 4; ++c) worst = std::max(worst, std::abs(preds[i].scores[c] - inf.predictions[i].scores[c]));
    }
    CHECK(worst <= 1e-12);
    CHECK(evalkit::load_predictions(dir / "p.csv") == preds);
    for (const auto& p : preds) CHECK(p.topk.size() == 3);
  }
}

TEST_CASE("tie-broken top-k on equal logits and long label spaces") {
  const std::vector<double> flat(11255, 0.0);
  const auto t = evalkit::top_k(flat, 25);
  CHECK(t.size() == 25);
  for (std::size_t i = 0; i < 25; ++i) CHECK(t[i] == i);
}

TEST_CASE("fit rejects empty sources") {
  testing::TempDir dir("empty");
  const testing::MemorySource empty({});
  const testing::MemorySource some(testing::toy_samples(4, 4, 1));
  auto model = toy_model(4, 1);
  CHECK(error_kind([&] { fit(toy_config(dir.path(), 4, 1), model, empty, some); }) == ErrorKind::data);
  CHECK(error_kind([&] { fit(toy_config(dir.path(), 4, 1), model, some, empty); }) == ErrorKind::data);
}
