// SPDX-License-Identifier: Apache-2.0
#include "geosdm/core/error.hpp"

namespace geosdm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::format: return "format error";
    case ErrorKind::data: return "data error";
    case ErrorKind::io: return "io error";
    case ErrorKind::unsupported_crs: return "unsupported CRS";
    case ErrorKind::projection_domain: return "projection domain error";
    case ErrorKind::out_of_extent: return "out of extent";
    case ErrorKind::truncation: return "truncation error";
    case ErrorKind::coverage: return "coverage error";
    case ErrorKind::missing_modality: return "missing modality";
    case ErrorKind::degenerate_split: return "degenerate split";
    case ErrorKind::registry: return "registry error";
    case ErrorKind::unsupported_architecture: return "unsupported architecture";
    case ErrorKind::no_head: return "no head";
    case ErrorKind::fusion_shape: return "fusion shape error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::degenerate_labels: return "degenerate labels";
    case ErrorKind::degenerate_input: return "degenerate input";
    case ErrorKind::alignment: return "alignment error";
    case ErrorKind::checkpoint_mismatch: return "checkpoint mismatch";
    case ErrorKind::non_finite: return "non-finite value";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(message) {}

}  // namespace geosdm
