// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geosdm {

enum class ErrorKind {
  parse,
  validation,
  format,
  data,
  io,
  unsupported_crs,
  projection_domain,
  out_of_extent,
  truncation,
  coverage,
  missing_modality,
  degenerate_split,
  registry,
  unsupported_architecture,
  no_head,
  fusion_shape,
  shape,
  domain,
  degenerate_labels,
  degenerate_input,
  alignment,
  checkpoint_mismatch,
  non_finite,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for every module; `kind()` tells callers and tests
/// which contract was violated. The message is prefixed with the kind name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace geosdm
