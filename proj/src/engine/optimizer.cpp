// SPDX-License-Identifier: Apache-2.0
#include "geosdm/engine/optimizer.hpp"

#include <cmath>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::engine {

bool AdamW::step(const std::vector<modelkit::ParamRef>& params, double lr) {
  for (const auto& [name, p] : params) {
    for (double g : p->grad.values()) {
      if (!std::isfinite(g)) {
        ++skipped_;
        log().warn("optimizer step {} skipped: non-finite gradient in {}", steps_ + 1, name);
        return false;
      }
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  for (const auto& [name, p] : params) {
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_.emplace(name, Moments{Tensor(p->value.shape()), Tensor(p->value.shape())}).first;
    } else if (it->second.m.shape() != p->value.shape()) {
      throw Error(ErrorKind::shape, "optimizer state for " + name + " has shape " + shape_str(it->second.m.shape()));
    }
    auto& m = it->second.m;
    auto& v = it->second.v;
    auto w = p->value.values();
    const auto g = p->grad.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= lr * cfg_.weight_decay * w[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
  return true;
}

void AdamW::restore(std::map<std::string, Moments> moments, std::int64_t steps) {
  moments_ = std::move(moments);
  steps_ = steps;
}

}  // namespace geosdm::engine
