// SPDX-License-Identifier: Apache-2.0
#include "geosdm/modelkit/mme.hpp"

#include <algorithm>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::modelkit {

MultiModalModel::MultiModalModel(std::vector<Branch> branches, Sequential head)
    : branches_(std::move(branches)), head_(std::move(head)) {
  if (branches_.empty()) throw Error(ErrorKind::validation, "model needs at least one branch");
}

Tensor MultiModalModel::embed(const ModelInputs& inputs, ForwardContext& ctx) {
  std::vector<Tensor> parts;
  parts.reserve(branches_.size());
  widths_.clear();
  std::size_t n = 0;
  for (auto& b : branches_) {
    const auto it = inputs.find(b.modality);
    if (it == inputs.end()) throw Error(ErrorKind::missing_modality, "no input for modality '" + b.modality + "'");
    Tensor e = b.encoder.forward(it->second, ctx);
    if (e.rank() != 2) throw Error(ErrorKind::shape, "encoder '" + b.modality + "' must emit (N, D) features");
    if (!parts.empty() && e.dim(0) != n) {
      throw Error(ErrorKind::fusion_shape, "batch size of '" + b.modality + "' differs from '" + branches_[0].modality + "'");
    }
    n = e.dim(0);
    widths_.push_back(e.dim(1));
    parts.push_back(std::move(e));
  }
  std::size_t total = 0;
  for (auto w : widths_) total += w;
  Tensor fused({n, total});
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = fused.data() + i * total;
    for (std::size_t b = 0; b < parts.size(); ++b) {
      const auto src = parts[b].row(i);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return fused;
}

Tensor MultiModalModel::forward_head(const Tensor& fused, ForwardContext& ctx) { return head_.forward(fused, ctx); }

Tensor MultiModalModel::forward(const ModelInputs& inputs, ForwardContext& ctx) {
  return forward_head(embed(inputs, ctx), ctx);
}

void MultiModalModel::backward(const Tensor& grad_logits) {
  const Tensor g = head_.backward(grad_logits);
  const std::size_t n = g.dim(0);
  const std::size_t total = g.dim(1);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    const std::size_t w = widths_[b];
    Tensor part({n, w});
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(g.data() + i * total + offset, w, part.data() + i * w);
    }
    branches_[b].encoder.backward(part);
    offset += w;
  }
}

std::vector<ParamRef> MultiModalModel::parameters() {
  std::vector<ParamRef> out;
  for (auto& b : branches_) {
    auto p = b.encoder.parameters("branch." + b.modality + ".");
    out.insert(out.end(), p.begin(), p.end());
  }
  auto h = head_.parameters("head.");
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

void MultiModalModel::zero_grad() {
  for (auto& [_, p] : parameters()) p->grad.fill(0.0);
}

std::size_t MultiModalModel::parameter_count() {
  std::size_t n = 0;
  for (auto& [_, p] : parameters()) n += p->value.numel();
  return n;
}

std::size_t MultiModalModel::num_classes() const {
  for (std::size_t i = head_.size(); i-- > 0;) {
    if (const auto* lin = dynamic_cast<const Linear*>(&head_.layer(i))) return lin->out_features();
  }
  return branches_.back().encoder.output_dim();
}

std::vector<std::string> MultiModalModel::modalities() const {
  std::vector<std::string> out;
  for (const auto& b : branches_) out.push_back(b.modality);
  return out;
}

std::string MultiModalModel::architecture_digest() const {
  std::string desc;
  for (const auto& b : branches_) {
    desc += "branch " + b.modality + " " + b.encoder.name() + " in=" + std::to_string(b.encoder.input_channels()) +
            " {" + b.encoder.net().describe() + "}\n";
  }
  desc += "head {" + head_.describe() + "}\n";
  return sha256_hex(desc).substr(0, 16);
}

MultiModalModel build_mme(std::vector<Branch> encoders, const FusionSpec& fusion, std::uint64_t seed) {
  if (encoders.empty()) throw Error(ErrorKind::validation, "multimodal model needs at least one encoder");
  if (fusion.modality_dims.size() != encoders.size()) {
    throw Error(ErrorKind::fusion_shape, std::to_string(fusion.modality_dims.size()) + " fusion dims for " +
                                             std::to_string(encoders.size()) + " modalities");
  }
  std::string mismatch;
  std::size_t total = 0;
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    const std::size_t d = encoders[i].encoder.output_dim();
    if (d != fusion.modality_dims[i]) {
      mismatch += " " + encoders[i].modality + " (encoder " + std::to_string(d) + " vs fusion " +
                  std::to_string(fusion.modality_dims[i]) + ")";
    }
    total += d;
  }
  if (!mismatch.empty()) throw Error(ErrorKind::fusion_shape, "embedding widths disagree:" + mismatch);
  if (fusion.hidden_dim < 1 || fusion.num_classes < 1) {
    throw Error(ErrorKind::validation, "fusion hidden_dim and num_classes must be >= 1");
  }

  Rng rng(seed);
  Sequential head;
  head.add("dropout", std::make_unique<Dropout>(fusion.dropout_p));
  head.add("fc1", std::make_unique<Linear>(total, fusion.hidden_dim, rng));
  head.add("act", std::make_unique<Relu>());
  head.add("fc2", std::make_unique<Linear>(fusion.hidden_dim, fusion.num_classes, rng));
  return MultiModalModel(std::move(encoders), std::move(head));
}

MultiModalModel build_single(Branch classifier) {
  std::vector<Branch> one;
  one.push_back(std::move(classifier));
  return MultiModalModel(std::move(one), Sequential{});
}

}  // namespace geosdm::modelkit
