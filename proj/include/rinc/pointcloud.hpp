#ifndef RINC_POINTCLOUD_HPP
#define RINC_POINTCLOUD_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace rinc {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

struct PointCloud {
  std::vector<Point3> points;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace rinc

#endif  // RINC_POINTCLOUD_HPP
