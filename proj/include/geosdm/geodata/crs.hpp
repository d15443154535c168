// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace geosdm::geodata {

inline constexpr double kWebMercatorRadius = 6378137.0;
inline constexpr double kWebMercatorMaxLat = 85.06;

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Maps WGS84 (lon, lat) degrees into a CRS's native units.
using PointTransform = std::function<ProjectedPoint(double lon, double lat)>;

/// Points are moved into each raster's CRS; rasters are never reprojected.
/// Registration is not synchronized: register custom transforms before
/// any concurrent lookups.
class CrsRegistry {
 public:
  /// Registry preloaded with EPSG:4326 and EPSG:3857.
  CrsRegistry();

  static CrsRegistry& global();

  void add(const std::string& crs, PointTransform transform);
  bool contains(const std::string& crs) const;
  std::vector<std::string> names() const;
  ProjectedPoint transform(double lon, double lat, const std::string& crs) const;

 private:
  std::map<std::string, PointTransform> transforms_;
};

ProjectedPoint transform_point(double lon, double lat, const std::string& crs);

}  // namespace geosdm::geodata
