// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geosdm/modelkit/layers.hpp"

namespace geosdm::modelkit {

/// Ordered stack of named layers. Copies deep-clone every layer.
class Sequential {
 public:
  struct Entry {
    std::string name;
    std::unique_ptr<Layer> layer;
  };

  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  Sequential& add(std::string name, std::unique_ptr<Layer> layer);
  void replace(std::size_t index, std::unique_ptr<Layer> layer);
  /// Drops layers [index, size).
  void truncate(std::size_t index);

  std::size_t size() const noexcept { return layers_.size(); }
  bool empty() const noexcept { return layers_.empty(); }
  const Entry& operator[](std::size_t i) const { return layers_[i]; }
  Layer& layer(std::size_t i) { return *layers_[i].layer; }
  const Layer& layer(std::size_t i) const { return *layers_[i].layer; }

  /// Index of the first / last layer whose kind() is `kind`.
  std::optional<std::size_t> first_of(const std::string& kind) const;
  std::optional<std::size_t> last_parameterized() const;
  std::optional<std::size_t> first_parameterized() const;

  Tensor forward(const Tensor& x, ForwardContext& ctx);
  Tensor backward(const Tensor& grad_out);

  /// Parameters named "<prefix><layer>.<param>".
  std::vector<ParamRef> parameters(const std::string& prefix = "");
  std::string describe() const;

 private:
  std::vector<Entry> layers_;
};

}  // namespace geosdm::modelkit
