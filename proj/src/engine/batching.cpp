// SPDX-License-Identifier: Apache-2.0
#include "geosdm/engine/batching.hpp"

#include <algorithm>
#include <numeric>

#include "geosdm/core/error.hpp"
#include "geosdm/core/rng.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::engine {

std::vector<std::vector<std::size_t>> plan_batches(std::size_t n, std::size_t batch_size, bool shuffle,
                                                   std::uint64_t seed, std::uint64_t epoch) {
  if (n == 0) throw Error(ErrorKind::data, "cannot batch an empty source");
  if (batch_size == 0) throw Error(ErrorKind::validation, "batch_size must be >= 1");
  if (batch_size > n) {
    log().warn("batch_size {} exceeds source length {}; using one batch of {}", batch_size, n, n);
    batch_size = n;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(derive_seed(seed, streams::shuffle, epoch));
    rng.shuffle(std::span<std::size_t>(order));
  }
  std::vector<std::vector<std::size_t>> plan;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    plan.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return plan;
}

Batch collate(const geodata::SampleSource& source, std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error(ErrorKind::data, "empty batch");
  Batch batch;
  batch.indices.assign(indices.begin(), indices.end());
  const std::size_t n = indices.size();

  std::vector<geodata::MultiModalSample> samples;
  samples.reserve(n);
  for (std::size_t idx : indices) samples.push_back(source.get(idx));
  const auto& first = samples.front();

  Tensor location({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    batch.survey_ids.push_back(samples[i].survey_id);
    location.at(i, 0) = samples[i].lon;
    location.at(i, 1) = samples[i].lat;
  }
  batch.inputs.emplace("location", std::move(location));

  auto stack = [&](const std::string& key, const Shape& item_shape, auto&& values_of) {
    Shape shape{n};
    shape.insert(shape.end(), item_shape.begin(), item_shape.end());
    Tensor out(shape);
    const std::size_t stride = shape_numel(item_shape);
    for (std::size_t i = 0; i < n; ++i) {
      const auto vals = values_of(samples[i]);
      if (vals.size() != stride) {
        throw Error(ErrorKind::shape, "sample '" + samples[i].survey_id + "' has a differently sized " + key);
      }
      std::copy(vals.begin(), vals.end(), out.data() + i * stride);
    }
    batch.inputs.emplace(key, std::move(out));
  };

  if (!first.patch.empty()) {
    stack("patch", first.patch.shape(), [](const geodata::MultiModalSample& s) { return s.patch.values(); });
  }
  for (const auto& [name, cube] : first.cubes) {
    const Shape item{cube.shape.bands, cube.shape.steps, cube.shape.years};
    stack(name, item, [&name](const geodata::MultiModalSample& s) -> std::span<const float> {
      const auto it = s.cubes.find(name);
      if (it == s.cubes.end()) throw Error(ErrorKind::missing_modality, "sample '" + s.survey_id + "' lacks " + name);
      return it->second.values;
    });
  }
  if (!first.label.empty()) {
    stack("labels", {first.label.size()}, [](const geodata::MultiModalSample& s) -> std::span<const double> { return s.label; });
    batch.labels = std::move(batch.inputs.at("labels"));
    batch.inputs.erase("labels");
  }
  return batch;
}

BatchStream::BatchStream(const geodata::SampleSource& source, std::vector<std::vector<std::size_t>> plan,
                         std::size_t workers, std::size_t prefetch)
    : source_(source), plan_(std::move(plan)), prefetch_(std::max<std::size_t>(prefetch, 1)) {
  if (workers > 1) {
    for (std::size_t w = 0; w < workers; ++w) threads_.emplace_back([this] { work(); });
  }
}

BatchStream::~BatchStream() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void BatchStream::work() {
  while (true) {
    std::size_t job = 0;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stop_ || next_to_build_ >= plan_.size() || next_to_build_ < next_to_take_ + prefetch_; });
      if (stop_ || next_to_build_ >= plan_.size()) return;
      job = next_to_build_++;
    }
    try {
      Batch b = collate(source_, plan_[job]);
      std::lock_guard lock(mu_);
      ready_.emplace(job, std::move(b));
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!failure_) failure_ = std::current_exception();
    }
    cv_.notify_all();
  }
}

std::optional<Batch> BatchStream::next() {
  if (next_to_take_ >= plan_.size()) return std::nullopt;
  if (threads_.empty()) return collate(source_, plan_[next_to_take_++]);
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return failure_ || ready_.count(next_to_take_) > 0; });
  if (failure_) std::rethrow_exception(failure_);
  auto node = ready_.extract(next_to_take_);
  ++next_to_take_;
  lock.unlock();
  cv_.notify_all();
  return std::move(node.mapped());
}

std::unique_ptr<BatchStream> make_batches(const geodata::SampleSource& source, std::size_t batch_size, bool shuffle,
                                          std::uint64_t seed, std::uint64_t epoch, std::size_t workers) {
  return std::make_unique<BatchStream>(source, plan_batches(source.size(), batch_size, shuffle, seed, epoch), workers);
}

}  // namespace geosdm::engine
