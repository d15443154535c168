// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "geosdm/modelkit/layers.hpp"

namespace geosdm::modelkit {

/// Coordinate encoder slot; pretrained geospatial encoders plug in here.
/// Implementations must be deterministic and safe for concurrent encode().
class LocationEncoder {
 public:
  virtual ~LocationEncoder() = default;
  virtual std::size_t embedding_dim() const = 0;
  virtual std::vector<double> encode(double lon, double lat) const = 0;
  virtual std::string describe() const = 0;
};

/// Multi-scale sin/cos features of (lon, lat) in radians through a fixed
/// seeded affine map. Stands in for a frozen foundation model.
class SinusoidalLocationEncoder final : public LocationEncoder {
 public:
  SinusoidalLocationEncoder(std::size_t embedding_dim, std::size_t num_frequencies, std::uint64_t seed);

  std::size_t embedding_dim() const override { return dim_; }
  std::size_t num_frequencies() const noexcept { return freqs_; }
  /// [sin(2^j lon), cos(2^j lon), sin(2^j lat), cos(2^j lat)] for j < F.
  std::vector<double> features(double lon, double lat) const;
  std::vector<double> encode(double lon, double lat) const override;
  std::string describe() const override;

 private:
  std::size_t dim_;
  std::size_t freqs_;
  std::uint64_t seed_;
  Tensor weight_;  // (dim, 4F)
  Tensor bias_;    // (dim)
};

std::shared_ptr<const LocationEncoder> sinusoidal_location_encoder(std::size_t embedding_dim,
                                                                   std::size_t num_frequencies, std::uint64_t seed);

/// Frozen layer mapping (N, 2) lon/lat rows to (N, D) embeddings.
class LocationEmbedding final : public Layer {
 public:
  explicit LocationEmbedding(std::shared_ptr<const LocationEncoder> encoder);

  std::string kind() const override { return "location_embedding"; }
  std::string describe() const override { return "location_embedding(" + encoder_->describe() + ")"; }
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<LocationEmbedding>(*this); }

  const LocationEncoder& encoder() const noexcept { return *encoder_; }

 private:
  std::shared_ptr<const LocationEncoder> encoder_;
  Shape input_shape_;
};

}  // namespace geosdm::modelkit
