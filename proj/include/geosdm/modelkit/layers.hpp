// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "geosdm/core/rng.hpp"
#include "geosdm/core/tensor.hpp"

namespace geosdm::modelkit {

struct Parameter {
  Tensor value;
  Tensor grad;

  explicit Parameter(Shape shape) : value(shape), grad(std::move(shape)) {}
};

using ParamRef = std::pair<std::string, Parameter*>;

struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;  // dropout stream; required when training with dropout
};

/// A layer caches what its backward pass needs during forward; one
/// forward must precede each backward. Gradients accumulate into
/// Parameter::grad.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  /// Kind plus hyperparameters; feeds architecture digests.
  virtual std::string describe() const { return kind(); }
  virtual Tensor forward(const Tensor& x, ForwardContext& ctx) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<ParamRef> parameters() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// Fan-in uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void init_fan_in(Tensor& t, std::size_t fan_in, Rng& rng);

class Conv2d final : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride, std::size_t padding,
         Rng& rng);

  std::string kind() const override { return "conv2d"; }
  std::string describe() const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<ParamRef> parameters() override { return {{"weight", &weight_}, {"bias", &bias_}}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  std::size_t kernel() const noexcept { return k_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t padding() const noexcept { return pad_; }
  Parameter& weight() noexcept { return weight_; }  // (out, in, k, k)
  Parameter& bias() noexcept { return bias_; }
  const Parameter& weight() const noexcept { return weight_; }
  const Parameter& bias() const noexcept { return bias_; }

 private:
  // Flat input index of output row oy, kernel tap (ky, kx), output column 0.
  std::ptrdiff_t input_offset(std::size_t oy, std::size_t ky, std::size_t kx, std::size_t w) const;

  std::size_t in_, out_, k_, stride_, pad_;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

class Linear final : public Layer {
 public:
  Linear(std::size_t in_features, std::size_t out_features, Rng& rng);

  std::string kind() const override { return "linear"; }
  std::string describe() const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<ParamRef> parameters() override { return {{"weight", &weight_}, {"bias", &bias_}}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  Parameter& weight() noexcept { return weight_; }  // (out, in)
  Parameter& bias() noexcept { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }

 private:
  Tensor input_;
};

/// (N, C, H, W) -> (N, C) spatial mean.
class GlobalAvgPool final : public Layer {
 public:
  std::string kind() const override { return "global_avg_pool"; }
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

 private:
  Shape input_shape_;
};

/// (N, ...) -> (N, prod(...)).
class Flatten final : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape input_shape_;
};

/// Inverted dropout; identity outside training.
class Dropout final : public Layer {
 public:
  explicit Dropout(double p);

  std::string kind() const override { return "dropout"; }
  std::string describe() const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }

  double p() const noexcept { return p_; }

 private:
  double p_;
  std::vector<double> mask_;  // empty when the last forward was the identity
};

}  // namespace geosdm::modelkit
