// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geosdm/modelkit/encoders.hpp"

namespace geosdm::modelkit {

/// Modality name -> batched input block, e.g. "patch" (N, C, H, W),
/// a cube modality (N, B, Q, Y), "location" (N, 2).
using ModelInputs = std::map<std::string, Tensor>;

struct FusionSpec {
  std::vector<std::size_t> modality_dims;
  double dropout_p = 0.1;
  std::size_t hidden_dim = 256;
  std::size_t num_classes = 1;
};

struct Branch {
  std::string modality;
  FeatureExtractor encoder;
};

/// Late fusion: per-modality embeddings are concatenated in branch order
/// and fed to the head. A single-modality classifier is one branch with an
/// empty head.
class MultiModalModel {
 public:
  MultiModalModel(std::vector<Branch> branches, Sequential head);

  Tensor forward(const ModelInputs& inputs, ForwardContext& ctx);
  /// Concatenated (N, sum of dims) embedding.
  Tensor embed(const ModelInputs& inputs, ForwardContext& ctx);
  Tensor forward_head(const Tensor& fused, ForwardContext& ctx);
  /// Backpropagates through the last forward().
  void backward(const Tensor& grad_logits);

  std::vector<ParamRef> parameters();
  void zero_grad();
  std::size_t parameter_count();
  std::size_t num_classes() const;
  std::vector<std::string> modalities() const;

  std::vector<Branch>& branches() noexcept { return branches_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  Sequential& head() noexcept { return head_; }

  /// Hash of layer structure and parameter shapes; equal digests mean a
  /// checkpoint's tensors fit this model.
  std::string architecture_digest() const;

 private:
  std::vector<Branch> branches_;
  Sequential head_;
  std::vector<std::size_t> widths_;  // per-branch widths of the last forward
};

/// dropout -> affine -> relu -> affine head over the concatenated
/// embedding. Throws Error(fusion_shape) when fusion.modality_dims
/// disagrees with the encoders' output widths.
MultiModalModel build_mme(std::vector<Branch> encoders, const FusionSpec& fusion, std::uint64_t seed = 0);

/// One branch whose encoder head already emits class logits.
MultiModalModel build_single(Branch classifier);

}  // namespace geosdm::modelkit
