// SPDX-License-Identifier: Apache-2.0
#include "geosdm/modelkit/sequential.hpp"

#include "geosdm/core/error.hpp"

namespace geosdm::modelkit {

Sequential::Sequential(const Sequential& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& e : other.layers_) layers_.push_back({e.name, e.layer->clone()});
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Sequential& Sequential::add(std::string name, std::unique_ptr<Layer> layer) {
  for (const auto& e : layers_) {
    if (e.name == name) throw Error(ErrorKind::validation, "duplicate layer name '" + name + "'");
  }
  layers_.push_back({std::move(name), std::move(layer)});
  return *this;
}

void Sequential::replace(std::size_t index, std::unique_ptr<Layer> layer) { layers_.at(index).layer = std::move(layer); }

void Sequential::truncate(std::size_t index) {
  if (index < layers_.size()) layers_.erase(layers_.begin() + static_cast<std::ptrdiff_t>(index), layers_.end());
}

std::optional<std::size_t> Sequential::first_of(const std::string& kind) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].layer->kind() == kind) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Sequential::first_parameterized() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].layer->parameters().empty()) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Sequential::last_parameterized() const {
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (!layers_[i].layer->parameters().empty()) return i;
  }
  return std::nullopt;
}

Tensor Sequential::forward(const Tensor& x, ForwardContext& ctx) {
  Tensor h = x;
  for (auto& e : layers_) h = e.layer->forward(h, ctx);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i].layer->backward(g);
  return g;
}

std::vector<ParamRef> Sequential::parameters(const std::string& prefix) {
  std::vector<ParamRef> out;
  for (auto& e : layers_) {
    for (auto& [pname, p] : e.layer->parameters()) out.emplace_back(prefix + e.name + "." + pname, p);
  }
  return out;
}

std::string Sequential::describe() const {
  std::string out;
  for (const auto& e : layers_) out += e.name + ":" + e.layer->describe() + ";";
  return out;
}

}  // namespace geosdm::modelkit
