// SPDX-License-Identifier: Apache-2.0
#include "geosdm/modelkit/surgery.hpp"

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

#include <spdlog/spdlog.h>

namespace geosdm::modelkit {

FeatureExtractor modify_first_layer(FeatureExtractor model, std::size_t new_channels, std::uint64_t seed) {
  if (new_channels < 1) throw Error(ErrorKind::validation, "new_channels must be >= 1");
  Sequential& net = model.net();
  const auto first = net.first_parameterized();
  auto* conv = first ? dynamic_cast<Conv2d*>(&net.layer(*first)) : nullptr;
  if (conv == nullptr) {
    throw Error(ErrorKind::unsupported_architecture,
                "'" + model.name() + "' has no leading spatial filter bank to adapt");
  }
  const std::size_t old_c = conv->in_channels();
  if (old_c == new_channels) return model;

  Rng rng(seed);
  auto fresh = std::make_unique<Conv2d>(new_channels, conv->out_channels(), conv->kernel(), conv->stride(),
                                        conv->padding(), rng);
  if (model.pretrained()) {
    const std::size_t k2 = conv->kernel() * conv->kernel();
    const double scale = static_cast<double>(old_c) / static_cast<double>(new_channels);
    const Tensor& w_old = conv->weight().value;
    Tensor& w_new = fresh->weight().value;
    for (std::size_t o = 0; o < conv->out_channels(); ++o) {
      for (std::size_t t = 0; t < k2; ++t) {
        double mean = 0.0;
        for (std::size_t c = 0; c < old_c; ++c) mean += w_old[(o * old_c + c) * k2 + t];
        mean /= static_cast<double>(old_c);
        for (std::size_t c = 0; c < new_channels; ++c) w_new[(o * new_channels + c) * k2 + t] = mean * scale;
      }
    }
    fresh->bias().value = conv->bias().value;
  }
  net.replace(*first, std::move(fresh));
  model.set_input_channels(new_channels);
  return model;
}

FeatureExtractor modify_last_layer(FeatureExtractor model, std::size_t new_dim, std::uint64_t seed) {
  if (new_dim < 1) throw Error(ErrorKind::validation, "new_dim must be >= 1");
  if (!model.has_head()) {
    throw Error(ErrorKind::no_head, "'" + model.name() + "' does not end in an affine map; use add_head");
  }
  Sequential& net = model.net();
  const std::size_t last = net.size() - 1;
  const auto& head = dynamic_cast<const Linear&>(net.layer(last));
  Rng rng(seed);
  net.replace(last, std::make_unique<Linear>(head.in_features(), new_dim, rng));
  return model;
}

FeatureExtractor strip_head(FeatureExtractor model) {
  if (!model.has_head()) {
    log().warn("'{}' is already headless; strip_head is a no-op", model.name());
    return model;
  }
  model.net().truncate(model.net().size() - 1);
  return model;
}

FeatureExtractor add_head(FeatureExtractor model, std::size_t out_dim, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = model.output_dim();
  auto taken = [&](const std::string& n) {
    for (std::size_t j = 0; j < model.net().size(); ++j) {
      if (model.net()[j].name == n) return true;
    }
    return false;
  };
  std::string name = "fc";
  for (int i = 1; taken(name); ++i) name = "fc" + std::to_string(i);
  model.net().add(name, std::make_unique<Linear>(in, out_dim, rng));
  return model;
}

}  // namespace geosdm::modelkit
