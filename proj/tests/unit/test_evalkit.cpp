// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "geosdm/core/util.hpp"
#include "geosdm/evalkit/metrics.hpp"
#include "geosdm/evalkit/report.hpp"
#include "json.hpp"
#include "support/expect.hpp"
#include "support/metric_suite.hpp"
#include "support/tempdir.hpp"

using namespace geosdm;
using namespace geosdm::evalkit;
using testing::error_kind;

namespace {

PredictionSet pred(const std::string& id, std::vector<double> scores, std::vector<std::size_t> topk) {
  return {id, std::move(scores), std::move(topk)};
}

// N=2, S=4, k=2; Y0={1,2}, top0={1,3}; Y1={0}, top1={0,2}.
std::vector<PredictionSet> toy_predictions() {
  return {pred("a", {0.1, 0.9, 0.2, 0.8}, {1, 3}), pred("b", {0.9, 0.1, 0.8, 0.2}, {0, 2})};
}
const LabelRows kToyLabels{{0, 1, 1, 0}, {1, 0, 0, 0}};

}  // namespace

TEST_CASE("top_k ordering and ties") {
  const std::vector<double> s{0.1, 0.9, 0.5, 0.5};
  CHECK(top_k(s, 2) == std::vector<std::size_t>{1, 2});
  CHECK(top_k(std::vector<double>(5, 0.3), 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(top_k(s, 4) == std::vector<std::size_t>{1, 2, 3, 0});
  CHECK(error_kind([&] { top_k(s, 5); }) == ErrorKind::domain);
  CHECK(error_kind([&] { top_k(s, 0); }) == ErrorKind::domain);
}

TEST_CASE("top_k is permutation-stable on tie-free scores") {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const std::size_t s = 2 + rng.below(40), k = 1 + rng.below(s);
    std::vector<double> scores(s);
    for (auto& v : scores) v = rng.uniform();
    std::vector<std::size_t> perm(s);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<double> permuted(s);
    for (std::size_t i = 0; i < s; ++i) permuted[i] = scores[perm[i]];
    auto back = top_k(permuted, k);
    for (auto& i : back) i = perm[i];
    auto direct = top_k(scores, k);
    std::sort(back.begin(), back.end());
    std::sort(direct.begin(), direct.end());
    CHECK(back == direct);
  }
}

TEST_CASE("toy case: micro and samples P/R/F1") {
  const auto micro = topk_prf(toy_predictions(), kToyLabels, Averaging::micro);
  CHECK(micro.precision == 0.5);
  CHECK(micro.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(micro.f1 == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  const auto samples = topk_prf(toy_predictions(), kToyLabels, Averaging::samples);
  CHECK(samples.precision == 0.5);
  CHECK(samples.recall == 0.75);
  CHECK(samples.f1 == doctest::Approx((0.5 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
  CHECK(error_kind([] { topk_prf(toy_predictions(), LabelRows{{0, 1, 1, 0}}, Averaging::micro); }) == ErrorKind::shape);
}

TEST_CASE("perfect predictions score 1 everywhere") {
  const LabelRows y{{1, 0, 1, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}};
  std::vector<PredictionSet> preds;
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::vector<double> s(y[i].begin(), y[i].end());
    std::vector<std::size_t> t;
    for (std::size_t c = 0; c < 4; ++c) {
      if (y[i][c]) t.push_back(c);
    }
    preds.push_back(pred("r" + std::to_string(i), s, t));
  }
  for (auto avg : {Averaging::micro, Averaging::samples, Averaging::macro}) {
    const auto r = topk_prf(preds, y, avg);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
  }
  ScoreRows scores;
  for (const auto& row : y) scores.emplace_back(row.begin(), row.end());
  for (auto avg : {Averaging::micro, Averaging::samples, Averaging::macro}) {
    CHECK(multilabel_auc(scores, y, avg).auc == 1.0);
  }
}

TEST_CASE("samples averaging skips rows without labels and macro counts absent classes as zero") {
  const LabelRows y{{0, 1, 0}, {0, 0, 0}};
  const std::vector<PredictionSet> preds{pred("a", {0, 1, 0}, {1}), pred("b", {1, 0, 0}, {0})};
  const auto s = topk_prf(preds, y, Averaging::samples);
  CHECK(s.skipped == 1);
  CHECK(s.precision == 1.0);
  const auto m = topk_prf(preds, y, Averaging::macro);
  CHECK(m.precision == doctest::Approx(1.0 / 3.0));
  CHECK(error_kind([&] { topk_prf(preds, LabelRows{{0, 0, 0}, {0, 0, 0}}, Averaging::samples); }) ==
        ErrorKind::degenerate_input);
}

TEST_CASE("binary_auc examples") {
  CHECK(binary_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<std::uint8_t>{0, 0, 1, 1}) == 0.75);
  CHECK(binary_auc(std::vector<double>{0.1, 0.2, 0.7, 0.9}, std::vector<std::uint8_t>{0, 0, 1, 1}) == 1.0);
  CHECK(binary_auc(std::vector<double>(6, 0.4), std::vector<std::uint8_t>{0, 1, 0, 1, 1, 0}) == 0.5);
  CHECK(error_kind([] { binary_auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}); }) ==
        ErrorKind::degenerate_labels);
}

TEST_CASE("multilabel_auc examples and degenerate input") {
  const ScoreRows s{{0.2, 0.9}};
  const LabelRows y{{1, 0}};
  CHECK(multilabel_auc(s, y, Averaging::micro).auc == 0.0);
  CHECK(multilabel_auc(s, y, Averaging::samples).auc == 0.0);
  CHECK(error_kind([&] { multilabel_auc(s, y, Averaging::macro); }) == ErrorKind::degenerate_input);
}

TEST_CASE("randomized oracle agreement at all averagings") {
  const auto out = testing::run_metric_oracle_suite(123, 40);
  CHECK_FALSE(out.topk_mismatch);
  CHECK(out.max_deviation <= 1e-12);
  CHECK(out.comparisons >= 40 * 11);
}

TEST_CASE("random 50x20 instance matches the pair-count oracle") {
  Rng rng(50);
  const auto inst = testing::random_instance(rng, 50, 20, 0.3, false);
  CHECK(std::abs(multilabel_auc(inst.scores, inst.labels, Averaging::micro).auc - testing::oracle_auc_micro(inst)) <=
        1e-12);
  CHECK(std::abs(multilabel_auc(inst.scores, inst.labels, Averaging::macro).auc -
                 *testing::oracle_auc_mean(inst, false)) <= 1e-12);
}

TEST_CASE("uniform-k samples precision equals micro precision exactly, and micro identity holds") {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(150), s = 3 + rng.below(40), k = 1 + rng.below(s);
    auto inst = testing::random_instance(rng, n, s, 0.2, t % 2 == 0);
    for (auto& row : inst.labels) row[rng.below(s)] = 1;
    const auto preds = testing::as_predictions(inst.scores, k);
    const auto mi = topk_prf(preds, inst.labels, Averaging::micro);
    const auto sa = topk_prf(preds, inst.labels, Averaging::samples);
    CHECK(sa.precision == mi.precision);
    double tp = 0, actual = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto c : preds[i].topk) tp += inst.labels[i][c];
      for (auto v : inst.labels[i]) actual += v;
    }
    CHECK(mi.precision * static_cast<double>(n * k) == doctest::Approx(tp).epsilon(1e-12));
    CHECK(mi.recall * actual == doctest::Approx(tp).epsilon(1e-12));
  }
}

TEST_CASE("AUC is invariant under strictly monotone score transforms") {
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    auto inst = testing::random_instance(rng, 40, 12, 0.3, true);
    for (auto& row : inst.labels) {
      row[0] = 1;
      row[1] = 0;
    }
    ScoreRows transformed = inst.scores;
    const double a = rng.uniform(0.5, 3.0), b = rng.uniform(-2, 2);
    for (auto& row : transformed) {
      for (auto& v : row) v = std::exp(a * v) + b + std::pow(v, 3);
    }
    for (auto avg : {Averaging::micro, Averaging::samples, Averaging::macro}) {
      CHECK(multilabel_auc(transformed, inst.labels, avg).auc == multilabel_auc(inst.scores, inst.labels, avg).auc);
    }
  }
}

TEST_CASE("all metric values lie in [0, 1]") {
  Rng rng(33);
  for (int t = 0; t < 30; ++t) {
    auto inst = testing::random_instance(rng, 30, 10, 0.3, false);
    for (auto& row : inst.labels) {
      row[0] = 1;
      row[1] = 0;
    }
    std::vector<LabeledRow> rows;
    for (std::size_t i = 0; i < inst.labels.size(); ++i) rows.push_back({"s" + std::to_string(i), inst.labels[i]});
    const auto report = evaluate(testing::as_predictions(inst.scores, 3), rows, 3);
    for (double v : report.metric_values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("evaluate: toy report, alignment errors") {
  const std::vector<LabeledRow> rows{{"a", kToyLabels[0]}, {"b", kToyLabels[1]}};
  const auto r = evaluate(toy_predictions(), rows, 2);
  CHECK(r.micro.precision == 0.5);
  CHECK(r.micro.f1 == doctest::Approx(4.0 / 7.0));
  CHECK(r.samples.recall == 0.75);
  CHECK(r.num_samples == 2);
  CHECK(MetricReport::metric_names().size() == r.metric_values().size());
  CHECK(MetricReport::metric_names().front() == "micro_auc");

  CHECK(error_kind([&] { evaluate({}, {}, 2); }) == ErrorKind::alignment);
  try {
    evaluate(toy_predictions(), {{"a", kToyLabels[0]}, {"zz", kToyLabels[1]}}, 2);
    FAIL("expected alignment error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::alignment);
    CHECK(std::string(e.what()).find("zz") != std::string::npos);
  }
}

TEST_CASE("report files and prediction CSV round-trip") {
  testing::TempDir dir("report");
  const std::vector<LabeledRow> rows{{"a", kToyLabels[0]}, {"b", kToyLabels[1]}};
  const auto r = evaluate(toy_predictions(), rows, 2);
  const auto paths = write_report(r, dir.path());
  REQUIRE(paths.size() == 2);
  const auto j = nlohmann::json::parse(read_text(dir / "report.json"));
  CHECK(j["micro"]["precision"].get<double>() == 0.5);
  CHECK(j["k"].get<int>() == 2);
  CHECK(read_text(dir / "report.txt").find("micro") != std::string::npos);

  Rng rng(2);
  std::vector<PredictionSet> preds;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> s(7);
    for (auto& v : s) v = rng.uniform() / 3.0;
    preds.push_back({"id" + std::to_string(i), s, top_k(s, 3)});
  }
  save_predictions(preds, dir / "p.csv");
  CHECK(load_predictions(dir / "p.csv") == preds);
  CHECK(error_kind([] { parse_predictions("a,b\n1,2\n"); }) == ErrorKind::format);
  CHECK(parse_predictions("surveyId,topk,scores\n").empty());
}
