// SPDX-License-Identifier: Apache-2.0
#include "geosdm/engine/loss.hpp"

#include <algorithm>
#include <cmath>

#include "geosdm/core/error.hpp"

namespace geosdm::engine {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::weighted_bce_logits: return "weighted_bce_logits";
    case LossKind::softmax_ce: return "softmax_ce";
    case LossKind::bce_logits_binary: return "bce_logits_binary";
  }
  return "weighted_bce_logits";
}

LossKind loss_kind_from_name(std::string_view name) {
  for (LossKind k : {LossKind::weighted_bce_logits, LossKind::softmax_ce, LossKind::bce_logits_binary}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::validation, "unknown loss '" + std::string(name) + "'");
}

LossSpec loss_spec_for(const config::ExperimentConfig& cfg) {
  const auto& name = cfg.optimizer.loss.name;
  LossSpec spec;
  spec.kind = loss_kind_from_name(name.empty() ? config::default_loss_for(cfg.task.type) : std::string_view(name));
  spec.pos_weight = cfg.optimizer.loss.pos_weight;
  return spec;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_pair(const Tensor& logits, const Tensor& labels) {
  if (logits.shape() != labels.shape()) {
    throw Error(ErrorKind::shape, "logits " + shape_str(logits.shape()) + " vs labels " + shape_str(labels.shape()));
  }
  if (logits.numel() == 0) throw Error(ErrorKind::shape, "empty logits");
  for (double y : labels.values()) {
    if (y != 0.0 && y != 1.0) throw Error(ErrorKind::domain, "label value outside {0, 1}");
  }
}

double bce_term(double z, double y, double w) {
  const double sp = softplus(-z);
  return w * y * sp + (1.0 - y) * (z + sp);
}

double bce_grad_term(double z, double y, double w) {
  const double s = sigmoid(z);
  return -w * y * (1.0 - s) + (1.0 - y) * s;
}

}  // namespace

double weighted_bce_logits(const Tensor& logits, const Tensor& labels, double pos_weight) {
  check_pair(logits, labels);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.numel(); ++i) sum += bce_term(logits[i], labels[i], pos_weight);
  return sum / static_cast<double>(logits.numel());
}

Tensor weighted_bce_logits_grad(const Tensor& logits, const Tensor& labels, double pos_weight) {
  check_pair(logits, labels);
  Tensor g(logits.shape());
  const double scale = 1.0 / static_cast<double>(logits.numel());
  for (std::size_t i = 0; i < logits.numel(); ++i) g[i] = bce_grad_term(logits[i], labels[i], pos_weight) * scale;
  return g;
}

namespace {

LossResult softmax_ce(const Tensor& logits, const Tensor& labels) {
  check_pair(logits, labels);
  if (logits.rank() != 2) throw Error(ErrorKind::shape, "softmax_ce expects (N, S) logits");
  const std::size_t n = logits.dim(0), s = logits.dim(1);
  LossResult out{0.0, Tensor(logits.shape())};
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = logits.row(i);
    const auto y = labels.row(i);
    double ones = 0.0;
    for (double v : y) ones += v;
    if (ones != 1.0) throw Error(ErrorKind::domain, "softmax_ce needs exactly one positive label per row");
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double lse = zmax + std::log(denom);
    auto g = out.grad.row(i);
    for (std::size_t c = 0; c < s; ++c) {
      const double p = std::exp(z[c] - lse);
      if (y[c] == 1.0) out.value += lse - z[c];
      g[c] = (p - y[c]) / static_cast<double>(n);
    }
  }
  out.value /= static_cast<double>(n);
  return out;
}

Tensor binary_targets(const Tensor& logits, const Tensor& labels) {
  if (logits.rank() != 2 || logits.dim(1) != 1) {
    throw Error(ErrorKind::shape, "bce_logits_binary expects (N, 1) logits, got " + shape_str(logits.shape()));
  }
  if (labels.rank() == 2 && labels.dim(0) == logits.dim(0) && labels.dim(1) == 2) {
    Tensor y({logits.dim(0), 1});
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = labels.at(i, 1);
    return y;
  }
  return labels;
}

}  // namespace

LossResult compute_loss(const LossSpec& spec, const Tensor& logits, const Tensor& labels) {
  switch (spec.kind) {
    case LossKind::weighted_bce_logits:
      return {weighted_bce_logits(logits, labels, spec.pos_weight),
              weighted_bce_logits_grad(logits, labels, spec.pos_weight)};
    case LossKind::softmax_ce: return softmax_ce(logits, labels);
    case LossKind::bce_logits_binary: {
      const Tensor y = binary_targets(logits, labels);
      return {weighted_bce_logits(logits, y, spec.pos_weight), weighted_bce_logits_grad(logits, y, spec.pos_weight)};
    }
  }
  throw Error(ErrorKind::validation, "unhandled loss kind");
}

Tensor link_scores(LossKind kind, const Tensor& logits) {
  switch (kind) {
    case LossKind::weighted_bce_logits: {
      Tensor out(logits.shape());
      for (std::size_t i = 0; i < logits.numel(); ++i) out[i] = sigmoid(logits[i]);
      return out;
    }
    case LossKind::softmax_ce: {
      Tensor out(logits.shape());
      for (std::size_t i = 0; i < logits.dim(0); ++i) {
        const auto z = logits.row(i);
        auto o = out.row(i);
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (std::size_t c = 0; c < z.size(); ++c) denom += (o[c] = std::exp(z[c] - zmax));
        for (double& v : o) v /= denom;
      }
      return out;
    }
    case LossKind::bce_logits_binary: {
      Tensor out({logits.dim(0), 2});
      for (std::size_t i = 0; i < logits.dim(0); ++i) {
        const double p = sigmoid(logits[i]);
        out.at(i, 0) = 1.0 - p;
        out.at(i, 1) = p;
      }
      return out;
    }
  }
  return logits;
}

}  // namespace geosdm::engine
