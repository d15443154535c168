// SPDX-License-Identifier: Apache-2.0
#include "geosdm/evalkit/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "geosdm/core/error.hpp"

namespace geosdm::evalkit {

std::string_view to_string(Averaging a) {
  switch (a) {
    case Averaging::micro: return "micro";
    case Averaging::samples: return "samples";
    case Averaging::macro: return "macro";
  }
  return "micro";
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  if (k < 1 || k > scores.size()) {
    throw Error(ErrorKind::domain, "k=" + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) + "]");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

namespace {

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

void check_rows(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::shape, std::string(what) + ": " + std::to_string(a) + " prediction rows vs " +
                                      std::to_string(b) + " label rows");
  }
}

}  // namespace

PrecisionRecallF1 topk_prf(const std::vector<PredictionSet>& predictions, const LabelRows& labels, Averaging averaging) {
  check_rows(predictions.size(), labels.size(), "topk_prf");
  const std::size_t n = predictions.size();
  const std::size_t s = n ? labels[0].size() : 0;

  std::vector<std::size_t> tp(n, 0), npos(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].size() != s) throw Error(ErrorKind::shape, "label rows differ in width");
    for (std::size_t c : predictions[i].topk) {
      if (c >= s) throw Error(ErrorKind::shape, "topk index " + std::to_string(c) + " >= " + std::to_string(s) + " classes");
      tp[i] += labels[i][c] ? 1 : 0;
    }
    npos[i] = static_cast<std::size_t>(std::count(labels[i].begin(), labels[i].end(), std::uint8_t{1}));
  }

  PrecisionRecallF1 out;
  switch (averaging) {
    case Averaging::micro: {
      std::size_t sum_tp = 0, sum_k = 0, sum_pos = 0;
      for (std::size_t i = 0; i < n; ++i) {
        sum_tp += tp[i];
        sum_k += predictions[i].topk.size();
        sum_pos += npos[i];
      }
      out.precision = sum_k ? static_cast<double>(sum_tp) / static_cast<double>(sum_k) : 0.0;
      out.recall = sum_pos ? static_cast<double>(sum_tp) / static_cast<double>(sum_pos) : 0.0;
      out.f1 = harmonic(out.precision, out.recall);
      break;
    }
    case Averaging::samples: {
      std::size_t used = 0, used_tp = 0, used_k = 0;
      bool uniform_k = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (npos[i] == 0) {
          ++out.skipped;
          continue;
        }
        const std::size_t ki = predictions[i].topk.size();
        uniform_k = uniform_k && ki == predictions.front().topk.size();
        const double p = ki > 0 ? static_cast<double>(tp[i]) / static_cast<double>(ki) : 0.0;
        const double r = static_cast<double>(tp[i]) / static_cast<double>(npos[i]);
        out.precision += p;
        out.recall += r;
        out.f1 += harmonic(p, r);
        used_tp += tp[i];
        used_k += ki;
        ++used;
      }
      if (used == 0) throw Error(ErrorKind::degenerate_input, "no sample has a positive label");
      // With a shared k the mean of TP_i / k is sum(TP_i) / (n k); evaluating
      // that form avoids accumulated rounding and matches micro P bitwise.
      out.precision = uniform_k ? (used_k ? static_cast<double>(used_tp) / static_cast<double>(used_k) : 0.0)
                                : out.precision / static_cast<double>(used);
      out.recall /= static_cast<double>(used);
      out.f1 /= static_cast<double>(used);
      break;
    }
    case Averaging::macro: {
      std::vector<std::size_t> ctp(s, 0), cfp(s, 0), cfn(s, 0);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint8_t> in_top(s, 0);
        for (std::size_t c : predictions[i].topk) in_top[c] = 1;
        for (std::size_t c = 0; c < s; ++c) {
          if (in_top[c] && labels[i][c]) ++ctp[c];
          else if (in_top[c]) ++cfp[c];
          else if (labels[i][c]) ++cfn[c];
        }
      }
      for (std::size_t c = 0; c < s; ++c) {
        const double p = ctp[c] + cfp[c] ? static_cast<double>(ctp[c]) / static_cast<double>(ctp[c] + cfp[c]) : 0.0;
        const double r = ctp[c] + cfn[c] ? static_cast<double>(ctp[c]) / static_cast<double>(ctp[c] + cfn[c]) : 0.0;
        out.precision += p;
        out.recall += r;
        out.f1 += harmonic(p, r);
      }
      if (s > 0) {
        out.precision /= static_cast<double>(s);
        out.recall /= static_cast<double>(s);
        out.f1 /= static_cast<double>(s);
      }
      break;
    }
  }
  return out;
}

namespace {

// Rank-sum AUC over (score, label) pairs; `valid` is false when one class is absent.
double rank_auc(std::vector<std::pair<double, std::uint8_t>>& items, bool& valid) {
  std::size_t npos = 0;
  for (const auto& it : items) npos += it.second ? 1 : 0;
  const std::size_t nneg = items.size() - npos;
  valid = npos > 0 && nneg > 0;
  if (!valid) return 0.0;
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < items.size() && items[j].first == items[i].first) {
      pos_in_group += items[j].second ? 1 : 0;
      ++j;
    }
    // Ranks i+1 .. j share their average.
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    pos_rank_sum += avg_rank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double p = static_cast<double>(npos);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(nneg));
}

}  // namespace

double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::shape, "binary_auc: scores and labels differ in length");
  std::vector<std::pair<double, std::uint8_t>> items;
  items.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] > 1) throw Error(ErrorKind::domain, "binary_auc: labels must be 0/1");
    items.emplace_back(scores[i], labels[i]);
  }
  bool valid = false;
  const double auc = rank_auc(items, valid);
  if (!valid) throw Error(ErrorKind::degenerate_labels, "binary_auc needs at least one positive and one negative");
  return auc;
}

AucResult multilabel_auc(const ScoreRows& scores, const LabelRows& labels, Averaging averaging) {
  check_rows(scores.size(), labels.size(), "multilabel_auc");
  const std::size_t n = scores.size();
  const std::size_t s = n ? scores[0].size() : 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i].size() != s || labels[i].size() != s) throw Error(ErrorKind::shape, "multilabel_auc: ragged rows");
  }

  AucResult out;
  std::vector<std::pair<double, std::uint8_t>> items;
  bool valid = false;
  switch (averaging) {
    case Averaging::micro: {
      items.reserve(n * s);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < s; ++c) items.emplace_back(scores[i][c], labels[i][c]);
      }
      out.auc = rank_auc(items, valid);
      if (!valid) throw Error(ErrorKind::degenerate_input, "micro AUC: labels are all one value");
      return out;
    }
    case Averaging::macro: {
      double sum = 0.0;
      std::size_t used = 0;
      for (std::size_t c = 0; c < s; ++c) {
        items.clear();
        for (std::size_t i = 0; i < n; ++i) items.emplace_back(scores[i][c], labels[i][c]);
        const double a = rank_auc(items, valid);
        if (valid) {
          sum += a;
          ++used;
        } else {
          ++out.skipped;
        }
      }
      if (used == 0) throw Error(ErrorKind::degenerate_input, "macro AUC: no class has both label values");
      out.auc = sum / static_cast<double>(used);
      return out;
    }
    case Averaging::samples: {
      double sum = 0.0;
      std::size_t used = 0;
      for (std::size_t i = 0; i < n; ++i) {
        items.clear();
        for (std::size_t c = 0; c < s; ++c) items.emplace_back(scores[i][c], labels[i][c]);
        const double a = rank_auc(items, valid);
        if (valid) {
          sum += a;
          ++used;
        } else {
          ++out.skipped;
        }
      }
      if (used == 0) throw Error(ErrorKind::degenerate_input, "samples AUC: no sample has both label values");
      out.auc = sum / static_cast<double>(used);
      return out;
    }
  }
  return out;
}

std::vector<std::string> MetricReport::metric_names() {
  std::vector<std::string> out;
  for (const char* avg : {"micro", "samples", "macro"}) {
    for (const char* m : {"auc", "precision", "recall", "f1"}) out.push_back(std::string(avg) + "_" + m);
  }
  return out;
}

std::vector<double> MetricReport::metric_values() const {
  std::vector<double> out;
  for (const MetricBlock* b : {&micro, &samples, &macro}) {
    out.insert(out.end(), {b->auc, b->precision, b->recall, b->f1});
  }
  return out;
}

MetricReport evaluate(const std::vector<PredictionSet>& predictions, const std::vector<LabeledRow>& labels,
                      std::size_t k) {
  if (predictions.empty() || labels.empty()) throw Error(ErrorKind::alignment, "empty prediction or label list");
  if (predictions.size() != labels.size()) {
    throw Error(ErrorKind::alignment, std::to_string(predictions.size()) + " predictions vs " +
                                          std::to_string(labels.size()) + " label rows");
  }
  std::vector<PredictionSet> ranked = predictions;
  ScoreRows scores;
  LabelRows rows;
  scores.reserve(ranked.size());
  rows.reserve(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].survey_id != labels[i].survey_id) {
      throw Error(ErrorKind::alignment, "row " + std::to_string(i) + ": prediction '" + ranked[i].survey_id +
                                            "' vs label '" + labels[i].survey_id + "'");
    }
    if (ranked[i].scores.size() != labels[i].labels.size()) {
      throw Error(ErrorKind::shape, "survey '" + ranked[i].survey_id + "': " + std::to_string(ranked[i].scores.size()) +
                                        " scores vs " + std::to_string(labels[i].labels.size()) + " labels");
    }
    ranked[i].topk = top_k(ranked[i].scores, k);
    scores.push_back(ranked[i].scores);
    rows.push_back(labels[i].labels);
  }

  MetricReport report;
  report.k = k;
  report.num_samples = ranked.size();
  auto fill = [&](MetricBlock& block, Averaging avg) {
    const auto prf = topk_prf(ranked, rows, avg);
    const auto auc = multilabel_auc(scores, rows, avg);
    block = {auc.auc, prf.precision, prf.recall, prf.f1};
    if (avg == Averaging::samples) report.skipped_samples = std::max(prf.skipped, auc.skipped);
    if (avg == Averaging::macro) report.skipped_classes = auc.skipped;
  };
  fill(report.micro, Averaging::micro);
  fill(report.samples, Averaging::samples);
  fill(report.macro, Averaging::macro);
  return report;
}

}  // namespace geosdm::evalkit
