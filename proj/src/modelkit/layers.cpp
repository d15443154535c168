// SPDX-License-Identifier: Apache-2.0
#include "geosdm/modelkit/layers.hpp"

#include <algorithm>
#include <cmath>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::modelkit {

void init_fan_in(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
}

namespace {

void expect_rank(const Tensor& x, std::size_t rank, const char* layer) {
  if (x.rank() != rank) {
    throw Error(ErrorKind::shape, std::string(layer) + " expects a rank-" + std::to_string(rank) + " input, got " +
                                      shape_str(x.shape()));
  }
}

// Output positions ox in [lo, hi) whose input column ox*s - p + k lies in [0, n).
std::pair<std::size_t, std::size_t> valid_range(std::size_t out_len, std::size_t n, std::size_t s, std::size_t p,
                                                std::size_t k) {
  const long long off = static_cast<long long>(k) - static_cast<long long>(p);
  long long lo = off >= 0 ? 0 : (-off + static_cast<long long>(s) - 1) / static_cast<long long>(s);
  long long hi_incl = (static_cast<long long>(n) - 1 - off);
  if (hi_incl < 0) return {0, 0};
  hi_incl /= static_cast<long long>(s);
  const long long hi = std::min<long long>(hi_incl + 1, static_cast<long long>(out_len));
  if (lo >= hi) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
               std::size_t padding, Rng& rng)
    : in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      weight_({out_channels, in_channels, kernel, kernel}),
      bias_({out_channels}) {
  if (in_ == 0 || out_ == 0 || k_ == 0 || stride_ == 0) throw Error(ErrorKind::validation, "conv2d dimensions must be >= 1");
  const std::size_t fan_in = in_ * k_ * k_;
  init_fan_in(weight_.value, fan_in, rng);
  init_fan_in(bias_.value, fan_in, rng);
}

std::ptrdiff_t Conv2d::input_offset(std::size_t oy, std::size_t ky, std::size_t kx, std::size_t w) const {
  const auto iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) - static_cast<std::ptrdiff_t>(pad_);
  return iy * static_cast<std::ptrdiff_t>(w) + static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad_);
}

std::string Conv2d::describe() const {
  return "conv2d(" + std::to_string(in_) + "," + std::to_string(out_) + ",k" + std::to_string(k_) + ",s" +
         std::to_string(stride_) + ",p" + std::to_string(pad_) + ")";
}

Tensor Conv2d::forward(const Tensor& x, ForwardContext&) {
  expect_rank(x, 4, "conv2d");
  if (x.dim(1) != in_) {
    throw Error(ErrorKind::shape, "conv2d expects " + std::to_string(in_) + " input channels, got " + shape_str(x.shape()));
  }
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  if (h + 2 * pad_ < k_ || w + 2 * pad_ < k_) throw Error(ErrorKind::shape, "conv2d input smaller than kernel");
  const std::size_t oh = (h + 2 * pad_ - k_) / stride_ + 1;
  const std::size_t ow = (w + 2 * pad_ - k_) / stride_ + 1;
  input_ = x;
  Tensor out({n, out_, oh, ow});
  const double* wt = weight_.value.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_; ++o) {
      double* dst = out.data() + (b * out_ + o) * oh * ow;
      std::fill(dst, dst + oh * ow, bias_.value[o]);
      for (std::size_t c = 0; c < in_; ++c) {
        const double* src = x.data() + (b * in_ + c) * h * w;
        for (std::size_t ky = 0; ky < k_; ++ky) {
          const auto [ylo, yhi] = valid_range(oh, h, stride_, pad_, ky);
          for (std::size_t kx = 0; kx < k_; ++kx) {
            const double wv = wt[((o * in_ + c) * k_ + ky) * k_ + kx];
            const auto [xlo, xhi] = valid_range(ow, w, stride_, pad_, kx);
            for (std::size_t oy = ylo; oy < yhi; ++oy) {
              const std::ptrdiff_t base = input_offset(oy, ky, kx, w);
              double* drow = dst + oy * ow;
              for (std::size_t ox = xlo; ox < xhi; ++ox) {
                drow[ox] += wv * src[base + static_cast<std::ptrdiff_t>(ox * stride_)];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& x = input_;
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = grad_out.dim(2), ow = grad_out.dim(3);
  Tensor grad_in(x.shape());
  const double* wt = weight_.value.data();
  double* gw = weight_.grad.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_; ++o) {
      const double* g = grad_out.data() + (b * out_ + o) * oh * ow;
      double gb = 0.0;
      for (std::size_t i = 0; i < oh * ow; ++i) gb += g[i];
      bias_.grad[o] += gb;
      for (std::size_t c = 0; c < in_; ++c) {
        const double* src = x.data() + (b * in_ + c) * h * w;
        double* gsrc = grad_in.data() + (b * in_ + c) * h * w;
        for (std::size_t ky = 0; ky < k_; ++ky) {
          const auto [ylo, yhi] = valid_range(oh, h, stride_, pad_, ky);
          for (std::size_t kx = 0; kx < k_; ++kx) {
            const std::size_t widx = ((o * in_ + c) * k_ + ky) * k_ + kx;
            const double wv = wt[widx];
            const auto [xlo, xhi] = valid_range(ow, w, stride_, pad_, kx);
            double acc = 0.0;
            for (std::size_t oy = ylo; oy < yhi; ++oy) {
              const std::ptrdiff_t base = input_offset(oy, ky, kx, w);
              const double* gr = g + oy * ow;
              for (std::size_t ox = xlo; ox < xhi; ++ox) {
                const std::ptrdiff_t i = base + static_cast<std::ptrdiff_t>(ox * stride_);
                acc += src[i] * gr[ox];
                gsrc[i] += wv * gr[ox];
              }
            }
            gw[widx] += acc;
          }
        }
      }
    }
  }
  return grad_in;
}

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng& rng)
    : in_(in_features), out_(out_features), weight_({out_features, in_features}), bias_({out_features}) {
  if (in_ == 0 || out_ == 0) throw Error(ErrorKind::validation, "linear dimensions must be >= 1");
  init_fan_in(weight_.value, in_, rng);
  init_fan_in(bias_.value, in_, rng);
}

std::string Linear::describe() const { return "linear(" + std::to_string(in_) + "," + std::to_string(out_) + ")"; }

Tensor Linear::forward(const Tensor& x, ForwardContext&) {
  expect_rank(x, 2, "linear");
  if (x.dim(1) != in_) {
    throw Error(ErrorKind::shape, "linear expects " + std::to_string(in_) + " features, got " + shape_str(x.shape()));
  }
  input_ = x;
  const std::size_t n = x.dim(0);
  Tensor out({n, out_});
  for (std::size_t b = 0; b < n; ++b) {
    const double* xr = x.data() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double* wr = weight_.value.data() + o * in_;
      double acc = bias_.value[o];
      for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
      out.at(b, o) = acc;
    }
  }
  return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const std::size_t n = input_.dim(0);
  Tensor grad_in({n, in_});
  for (std::size_t b = 0; b < n; ++b) {
    const double* xr = input_.data() + b * in_;
    double* gx = grad_in.data() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = grad_out.at(b, o);
      if (g == 0.0) continue;
      bias_.grad[o] += g;
      const double* wr = weight_.value.data() + o * in_;
      double* gw = weight_.grad.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        gw[i] += g * xr[i];
        gx[i] += g * wr[i];
      }
    }
  }
  return grad_in;
}

Tensor Relu::forward(const Tensor& x, ForwardContext&) {
  input_ = x;
  Tensor out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.numel(); ++i) {
    if (!(input_[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

Tensor GlobalAvgPool::forward(const Tensor& x, ForwardContext&) {
  expect_rank(x, 4, "global_avg_pool");
  input_shape_ = x.shape();
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor out({n, c});
  for (std::size_t i = 0; i < n * c; ++i) {
    const double* p = x.data() + i * hw;
    double acc = 0.0;
    for (std::size_t j = 0; j < hw; ++j) acc += p[j];
    out[i] = acc / static_cast<double>(hw);
  }
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  Tensor g(input_shape_);
  const std::size_t hw = input_shape_[2] * input_shape_[3];
  const double scale = 1.0 / static_cast<double>(hw);
  for (std::size_t i = 0; i < grad_out.numel(); ++i) std::fill_n(g.data() + i * hw, hw, grad_out[i] * scale);
  return g;
}

Tensor Flatten::forward(const Tensor& x, ForwardContext&) {
  if (x.rank() < 1) throw Error(ErrorKind::shape, "flatten needs a batch axis");
  input_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.numel() / std::max<std::size_t>(x.dim(0), 1)});
}

Tensor Flatten::backward(const Tensor& grad_out) { return grad_out.reshaped(input_shape_); }

Dropout::Dropout(double p) : p_(p) {
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::validation, "dropout probability must lie in [0, 1)");
}

std::string Dropout::describe() const { return "dropout(" + format_double(p_) + ")"; }

Tensor Dropout::forward(const Tensor& x, ForwardContext& ctx) {
  if (!ctx.training || p_ == 0.0) {
    mask_.clear();
    return x;
  }
  if (ctx.rng == nullptr) throw Error(ErrorKind::validation, "dropout in training mode needs an rng stream");
  const double keep = 1.0 / (1.0 - p_);
  mask_.resize(x.numel());
  Tensor out = x;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    mask_[i] = ctx.rng->uniform() >= p_ ? keep : 0.0;
    out[i] *= mask_[i];
  }
  return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  if (mask_.empty()) return grad_out;
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= mask_[i];
  return g;
}

}  // namespace geosdm::modelkit
