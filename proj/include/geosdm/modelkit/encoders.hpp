// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "geosdm/modelkit/sequential.hpp"

namespace geosdm::modelkit {

struct EncoderSpec {
  std::string provider = "builtin";
  std::string name;
  std::size_t input_channels = 1;
  std::size_t embedding_dim = 64;
  bool pretrained = false;
  std::map<std::string, double> options;  // provider-specific hyperparameters
};

/// Trainable feature extractor: a layer stack plus the metadata model
/// surgery needs.
class FeatureExtractor {
 public:
  FeatureExtractor(std::string name, Sequential net, std::size_t input_channels, bool pretrained);

  Tensor forward(const Tensor& x, ForwardContext& ctx) { return net_.forward(x, ctx); }
  Tensor backward(const Tensor& grad_out) { return net_.backward(grad_out); }

  const std::string& name() const noexcept { return name_; }
  std::size_t input_channels() const noexcept { return input_channels_; }
  /// Width of the produced feature vector.
  std::size_t output_dim() const;
  bool pretrained() const noexcept { return pretrained_; }
  /// True when the stack ends in an affine map.
  bool has_head() const;

  Sequential& net() noexcept { return net_; }
  const Sequential& net() const noexcept { return net_; }
  std::vector<ParamRef> parameters(const std::string& prefix = "") { return net_.parameters(prefix); }
  std::size_t parameter_count();

  void set_input_channels(std::size_t c) { input_channels_ = c; }

 private:
  std::string name_;
  Sequential net_;
  std::size_t input_channels_;
  bool pretrained_;
};

/// (provider, name) -> builder. The builtin provider ships micro_conv2d,
/// micro_conv3d, micro_mlp and sinusoidal_location.
class EncoderRegistry {
 public:
  using Factory = std::function<FeatureExtractor(const EncoderSpec&, Rng&)>;

  EncoderRegistry();
  static EncoderRegistry& global();

  void add(const std::string& provider, const std::string& name, Factory factory);
  std::vector<std::string> entries() const;  // "provider/name"
  FeatureExtractor build(const EncoderSpec& spec, std::uint64_t seed) const;

 private:
  std::map<std::pair<std::string, std::string>, Factory> factories_;
};

/// Throws Error(registry) listing available entries for an unknown name.
FeatureExtractor build_encoder(const EncoderSpec& spec, std::uint64_t seed = 0);

}  // namespace geosdm::modelkit
