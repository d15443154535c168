// SPDX-License-Identifier: Apache-2.0
#include "geosdm/modelkit/encoders.hpp"

#include <cmath>

#include "geosdm/core/error.hpp"
#include "geosdm/modelkit/location.hpp"

namespace geosdm::modelkit {

FeatureExtractor::FeatureExtractor(std::string name, Sequential net, std::size_t input_channels, bool pretrained)
    : name_(std::move(name)), net_(std::move(net)), input_channels_(input_channels), pretrained_(pretrained) {}

std::size_t FeatureExtractor::output_dim() const {
  for (std::size_t i = net_.size(); i-- > 0;) {
    const Layer& l = net_.layer(i);
    if (const auto* lin = dynamic_cast<const Linear*>(&l)) return lin->out_features();
    if (const auto* conv = dynamic_cast<const Conv2d*>(&l)) return conv->out_channels();
    if (const auto* loc = dynamic_cast<const LocationEmbedding*>(&l)) return loc->encoder().embedding_dim();
  }
  return input_channels_;
}

bool FeatureExtractor::has_head() const {
  return !net_.empty() && dynamic_cast<const Linear*>(&net_.layer(net_.size() - 1)) != nullptr;
}

std::size_t FeatureExtractor::parameter_count() {
  std::size_t n = 0;
  for (auto& [_, p] : parameters()) n += p->value.numel();
  return n;
}

namespace {

std::size_t option(const EncoderSpec& spec, const std::string& key, std::size_t fallback) {
  const auto it = spec.options.find(key);
  if (it == spec.options.end()) return fallback;
  if (!(it->second >= 1.0) || it->second != std::floor(it->second)) {
    throw Error(ErrorKind::validation, spec.name + " option '" + key + "' must be a positive integer");
  }
  return static_cast<std::size_t>(it->second);
}

// Two 3x3 conv blocks, global average pooling, affine head.
FeatureExtractor conv_stack(const EncoderSpec& spec, Rng& rng, std::size_t stride) {
  const std::size_t width = option(spec, "width", 16);
  Sequential net;
  net.add("conv1", std::make_unique<Conv2d>(spec.input_channels, width, 3, stride, 1, rng));
  net.add("relu1", std::make_unique<Relu>());
  net.add("conv2", std::make_unique<Conv2d>(width, 2 * width, 3, stride, 1, rng));
  net.add("relu2", std::make_unique<Relu>());
  net.add("pool", std::make_unique<GlobalAvgPool>());
  net.add("fc", std::make_unique<Linear>(2 * width, spec.embedding_dim, rng));
  return FeatureExtractor(spec.name, std::move(net), spec.input_channels, spec.pretrained);
}

}  // namespace

EncoderRegistry::EncoderRegistry() {
  // Strided 2-D stack for (N, C, H, W) raster patches.
  add("builtin", "micro_conv2d", [](const EncoderSpec& s, Rng& rng) { return conv_stack(s, rng, 2); });
  // Cubes (N, B, Q, Y): bands as channels, convolution over the (step, year) plane.
  add("builtin", "micro_conv3d", [](const EncoderSpec& s, Rng& rng) { return conv_stack(s, rng, 1); });
  add("builtin", "micro_mlp", [](const EncoderSpec& s, Rng& rng) {
    const std::size_t hidden = option(s, "hidden", 64);
    Sequential net;
    net.add("flatten", std::make_unique<Flatten>());
    net.add("fc1", std::make_unique<Linear>(s.input_channels, hidden, rng));
    net.add("relu1", std::make_unique<Relu>());
    net.add("fc", std::make_unique<Linear>(hidden, s.embedding_dim, rng));
    return FeatureExtractor(s.name, std::move(net), s.input_channels, s.pretrained);
  });
  add("builtin", "sinusoidal_location", [](const EncoderSpec& s, Rng& rng) {
    if (s.input_channels != 2) throw Error(ErrorKind::validation, "sinusoidal_location takes 2 inputs (lon, lat)");
    Sequential net;
    net.add("location", std::make_unique<LocationEmbedding>(
                            sinusoidal_location_encoder(s.embedding_dim, option(s, "num_frequencies", 8), rng.next())));
    return FeatureExtractor(s.name, std::move(net), 2, true);
  });
}

EncoderRegistry& EncoderRegistry::global() {
  static EncoderRegistry registry;
  return registry;
}

void EncoderRegistry::add(const std::string& provider, const std::string& name, Factory factory) {
  factories_[{provider, name}] = std::move(factory);
}

std::vector<std::string> EncoderRegistry::entries() const {
  std::vector<std::string> out;
  for (const auto& [key, _] : factories_) out.push_back(key.first + "/" + key.second);
  return out;
}

FeatureExtractor EncoderRegistry::build(const EncoderSpec& spec, std::uint64_t seed) const {
  const auto it = factories_.find({spec.provider, spec.name});
  if (it == factories_.end()) {
    std::string list;
    for (const auto& e : entries()) list += (list.empty() ? "" : ", ") + e;
    throw Error(ErrorKind::registry, "unknown encoder '" + spec.provider + "/" + spec.name + "'; available: " + list);
  }
  if (spec.input_channels < 1 || spec.embedding_dim < 1) {
    throw Error(ErrorKind::validation, "encoder input_channels and embedding_dim must be >= 1");
  }
  Rng rng(seed);
  return it->second(spec, rng);
}

FeatureExtractor build_encoder(const EncoderSpec& spec, std::uint64_t seed) {
  return EncoderRegistry::global().build(spec, seed);
}

}  // namespace geosdm::modelkit
