// SPDX-License-Identifier: Apache-2.0
#include "geosdm/geodata/crs.hpp"

#include <cmath>
#include <numbers>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"

namespace geosdm::geodata {

namespace {

ProjectedPoint web_mercator(double lon, double lat) {
  if (!(std::abs(lat) < kWebMercatorMaxLat)) {
    throw Error(ErrorKind::projection_domain,
                "EPSG:3857 requires |lat| < " + format_double(kWebMercatorMaxLat) + ", got " + format_double(lat));
  }
  constexpr double deg = std::numbers::pi / 180.0;
  return {kWebMercatorRadius * lon * deg,
          kWebMercatorRadius * std::log(std::tan(std::numbers::pi / 4.0 + lat * deg / 2.0))};
}

}  // namespace

CrsRegistry::CrsRegistry() {
  transforms_["EPSG:4326"] = [](double lon, double lat) { return ProjectedPoint{lon, lat}; };
  transforms_["EPSG:3857"] = web_mercator;
}

CrsRegistry& CrsRegistry::global() {
  static CrsRegistry registry;
  return registry;
}

void CrsRegistry::add(const std::string& crs, PointTransform transform) { transforms_[crs] = std::move(transform); }

bool CrsRegistry::contains(const std::string& crs) const { return transforms_.contains(crs); }

std::vector<std::string> CrsRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : transforms_) out.push_back(name);
  return out;
}

ProjectedPoint CrsRegistry::transform(double lon, double lat, const std::string& crs) const {
  const auto it = transforms_.find(crs);
  if (it == transforms_.end()) {
    std::string known;
    for (const auto& [name, _] : transforms_) known += (known.empty() ? "" : ", ") + name;
    throw Error(ErrorKind::unsupported_crs, "'" + crs + "' (registered: " + known + ")");
  }
  return it->second(lon, lat);
}

ProjectedPoint transform_point(double lon, double lat, const std::string& crs) {
  return CrsRegistry::global().transform(lon, lat, crs);
}

}  // namespace geosdm::geodata
