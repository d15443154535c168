// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geosdm::evalkit {

using MultiHot = std::vector<std::uint8_t>;
using ScoreRows = std::vector<std::vector<double>>;
using LabelRows = std::vector<MultiHot>;

struct PredictionSet {
  std::string survey_id;
  std::vector<double> scores;
  std::vector<std::size_t> topk;  // score desc, index asc on ties
  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

enum class Averaging { micro, samples, macro };
std::string_view to_string(Averaging a);

/// k best indices ordered by (score desc, index asc). Throws Error(domain)
/// unless 1 <= k <= scores.size().
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t skipped = 0;  // samples averaging: rows with no positive label
};

/// Top-K precision / recall / F1 using each prediction's topk set.
/// Macro averages all classes with zero-division -> 0.
PrecisionRecallF1 topk_prf(const std::vector<PredictionSet>& predictions, const LabelRows& labels, Averaging averaging);

/// Mann-Whitney rank statistic with average ranks for ties.
/// Throws Error(degenerate_labels) without both label values.
double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct AucResult {
  double auc = 0.0;
  std::size_t skipped = 0;  // classes (macro) or samples (samples) without both label values
};

/// micro: flattened pairs; macro / samples: mean over valid columns / rows.
/// Throws Error(degenerate_input) when nothing is valid.
AucResult multilabel_auc(const ScoreRows& scores, const LabelRows& labels, Averaging averaging);

struct MetricBlock {
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  MetricBlock micro;
  MetricBlock samples;
  MetricBlock macro;
  std::size_t skipped_samples = 0;
  std::size_t skipped_classes = 0;
  std::size_t k = 0;
  std::size_t num_samples = 0;

  /// Column names "micro_auc", "micro_precision", ... in a fixed order.
  static std::vector<std::string> metric_names();
  std::vector<double> metric_values() const;
};

struct LabeledRow {
  std::string survey_id;
  MultiHot labels;
};

/// Recomputes Top-k from scores, then fills every metric slot. Throws
/// Error(alignment) naming the first survey id mismatch or for empty input.
MetricReport evaluate(const std::vector<PredictionSet>& predictions, const std::vector<LabeledRow>& labels,
                      std::size_t k);

}  // namespace geosdm::evalkit
