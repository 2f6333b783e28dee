#ifndef RINC_POINTCLOUD_IO_HPP
#define RINC_POINTCLOUD_IO_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rinc/error.hpp"
#include "rinc/pointcloud.hpp"

namespace rinc {

/// Reads a KITTI velodyne scan: packed little-endian float32 records of
/// (x, y, z, intensity), no header. Intensity is discarded.
inline PointCloud read_kitti_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path);
  }
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() % 16 != 0) {
    throw FormatError(path + ": length " + std::to_string(buf.size()) +
                      " is not a multiple of 16 bytes");
  }

  const size_t n = buf.size() / 16;
  PointCloud cloud;
  cloud.points.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    float rec[4];
    std::memcpy(rec, buf.data() + 16 * i, 16);
    if constexpr (std::endian::native == std::endian::big) {
      for (float& f : rec) {
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&f, &bits, 4);
      }
    }
    Point3 p{rec[0], rec[1], rec[2]};
    if (!p.finite()) {
      throw FormatError(path + ": non-finite coordinate in record " + std::to_string(i));
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

/// Writes one "x y z" line per point, fixed-point with 6 decimals (keeps the
/// read_xyz round trip under 1e-5 per coordinate).
inline void write_xyz(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  char line[160];
  for (const Point3& p : cloud.points) {
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f\n", p.x, p.y, p.z);
    out << line;
  }
  if (!out.good()) {
    throw IoError("write failed for " + path);
  }
}

/// Reads the .xyz text format written by write_xyz. Blank lines are skipped.
inline PointCloud read_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open " + path);
  }
  PointCloud cloud;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream ss(line);
    Point3 p;
    std::string extra;
    if (!(ss >> p.x >> p.y >> p.z) || (ss >> extra)) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": expected 3 numbers, got \"" + line + "\"");
    }
    if (!p.finite()) {
      throw FormatError(path + ": line " + std::to_string(line_no) + ": non-finite coordinate");
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace rinc

#endif  // RINC_POINTCLOUD_IO_HPP
