// SPDX-License-Identifier: Apache-2.0
#include "geosdm/modelkit/location.hpp"

#include <cmath>
#include <numbers>

#include "geosdm/core/error.hpp"

namespace geosdm::modelkit {

SinusoidalLocationEncoder::SinusoidalLocationEncoder(std::size_t embedding_dim, std::size_t num_frequencies,
                                                     std::uint64_t seed)
    : dim_(embedding_dim), freqs_(num_frequencies), seed_(seed) {
  if (dim_ < 1 || freqs_ < 1) throw Error(ErrorKind::validation, "location encoder dims must be >= 1");
  weight_ = Tensor({dim_, 4 * freqs_});
  bias_ = Tensor({dim_});
  Rng rng(seed);
  init_fan_in(weight_, 4 * freqs_, rng);
  init_fan_in(bias_, 4 * freqs_, rng);
}

std::vector<double> SinusoidalLocationEncoder::features(double lon, double lat) const {
  constexpr double deg = std::numbers::pi / 180.0;
  const double lam = lon * deg;
  const double phi = lat * deg;
  std::vector<double> f;
  f.reserve(4 * freqs_);
  double scale = 1.0;
  for (std::size_t j = 0; j < freqs_; ++j, scale *= 2.0) {
    f.push_back(std::sin(scale * lam));
    f.push_back(std::cos(scale * lam));
    f.push_back(std::sin(scale * phi));
    f.push_back(std::cos(scale * phi));
  }
  return f;
}

std::vector<double> SinusoidalLocationEncoder::encode(double lon, double lat) const {
  const auto f = features(lon, lat);
  std::vector<double> out(dim_);
  for (std::size_t o = 0; o < dim_; ++o) {
    double acc = bias_[o];
    for (std::size_t i = 0; i < f.size(); ++i) acc += weight_.at(o, i) * f[i];
    out[o] = acc;
  }
  return out;
}

std::string SinusoidalLocationEncoder::describe() const {
  return "sinusoidal(d=" + std::to_string(dim_) + ",f=" + std::to_string(freqs_) + ",seed=" + std::to_string(seed_) + ")";
}

std::shared_ptr<const LocationEncoder> sinusoidal_location_encoder(std::size_t embedding_dim,
                                                                   std::size_t num_frequencies, std::uint64_t seed) {
  return std::make_shared<SinusoidalLocationEncoder>(embedding_dim, num_frequencies, seed);
}

LocationEmbedding::LocationEmbedding(std::shared_ptr<const LocationEncoder> encoder) : encoder_(std::move(encoder)) {
  if (!encoder_) throw Error(ErrorKind::validation, "location embedding needs an encoder");
}

Tensor LocationEmbedding::forward(const Tensor& x, ForwardContext&) {
  if (x.rank() != 2 || x.dim(1) != 2) {
    throw Error(ErrorKind::shape, "location embedding expects (N, 2) lon/lat rows, got " + shape_str(x.shape()));
  }
  input_shape_ = x.shape();
  const std::size_t n = x.dim(0);
  const std::size_t d = encoder_->embedding_dim();
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = encoder_->encode(x.at(i, 0), x.at(i, 1));
    std::copy(e.begin(), e.end(), out.data() + i * d);
  }
  return out;
}

Tensor LocationEmbedding::backward(const Tensor&) { return Tensor(input_shape_); }

}  // namespace geosdm::modelkit
