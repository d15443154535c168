// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "geosdm/core/tensor.hpp"
#include "geosdm/geodata/dataset.hpp"
#include "geosdm/modelkit/mme.hpp"

namespace geosdm::engine {

/// Index partition of [0, n) into ceil(n / batch_size) batches. With
/// shuffle the order is a permutation seeded by (seed, epoch). A
/// batch_size above n yields one smaller batch and a warning.
std::vector<std::vector<std::size_t>> plan_batches(std::size_t n, std::size_t batch_size, bool shuffle,
                                                   std::uint64_t seed, std::uint64_t epoch);

struct Batch {
  std::vector<std::size_t> indices;
  std::vector<std::string> survey_ids;
  modelkit::ModelInputs inputs;  // "patch", cube modalities, "location"
  Tensor labels;                 // (N, S); empty for unlabeled sources
};

/// Stacks samples into model inputs. Every sample must carry the same
/// modalities and shapes.
Batch collate(const geodata::SampleSource& source, std::span<const std::size_t> indices);

/// Delivers batches in plan order. With workers > 1, a pool assembles
/// upcoming batches ahead of the consumer; the order never depends on the
/// worker count.
class BatchStream {
 public:
  BatchStream(const geodata::SampleSource& source, std::vector<std::vector<std::size_t>> plan, std::size_t workers,
              std::size_t prefetch = 4);
  ~BatchStream();
  BatchStream(const BatchStream&) = delete;
  BatchStream& operator=(const BatchStream&) = delete;

  const std::vector<std::vector<std::size_t>>& plan() const noexcept { return plan_; }
  std::size_t size() const noexcept { return plan_.size(); }

  /// Next batch, or nullopt at the end. Rethrows a worker's exception.
  std::optional<Batch> next();

 private:
  void work();

  const geodata::SampleSource& source_;
  std::vector<std::vector<std::size_t>> plan_;
  std::size_t prefetch_;
  std::size_t next_to_take_ = 0;  // consumer cursor
  std::size_t next_to_build_ = 0;
  std::map<std::size_t, Batch> ready_;
  std::exception_ptr failure_;
  bool stop_ = false;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::thread> threads_;
};

std::unique_ptr<BatchStream> make_batches(const geodata::SampleSource& source, std::size_t batch_size, bool shuffle,
                                          std::uint64_t seed, std::uint64_t epoch, std::size_t workers);

}  // namespace geosdm::engine
