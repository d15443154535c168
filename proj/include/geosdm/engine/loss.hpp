// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

#include "geosdm/config/config.hpp"
#include "geosdm/core/tensor.hpp"

namespace geosdm::engine {

enum class LossKind { weighted_bce_logits, softmax_ce, bce_logits_binary };

std::string_view to_string(LossKind kind);
/// Throws Error(validation) for an unknown name.
LossKind loss_kind_from_name(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::weighted_bce_logits;
  double pos_weight = 10.0;
};

/// Loss matching the task type, pos_weight from the optimizer section.
LossSpec loss_spec_for(const config::ExperimentConfig& cfg);

/// log(1 + exp(x)) without overflow.
double softplus(double x);
double sigmoid(double x);

/// Mean over elements of w*y*softplus(-z) + (1-y)*(z + softplus(-z)).
/// Throws Error(shape) on mismatched shapes, Error(domain) for labels
/// outside {0, 1}.
double weighted_bce_logits(const Tensor& logits, const Tensor& labels, double pos_weight);
/// d loss / d logits for the value above.
Tensor weighted_bce_logits_grad(const Tensor& logits, const Tensor& labels, double pos_weight);

struct LossResult {
  double value = 0.0;
  Tensor grad;  // same shape as logits
};

/// Dispatch by kind.
///  weighted_bce_logits: logits and labels (N, S).
///  softmax_ce: logits (N, S), one-hot labels (N, S); mean over rows.
///  bce_logits_binary: logits (N, 1) for the positive class, labels (N, 2)
///  multi-hot (column 1 is the target) or (N, 1).
LossResult compute_loss(const LossSpec& spec, const Tensor& logits, const Tensor& labels);

/// Task link function: logistic per element, softmax per row, or the
/// two-column [1-p, p] expansion of a single binary logit.
Tensor link_scores(LossKind kind, const Tensor& logits);

}  // namespace geosdm::engine
