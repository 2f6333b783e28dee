#ifndef RINC_PROJECTION_HPP
#define RINC_PROJECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rinc/error.hpp"
#include "rinc/io_util.hpp"
#include "rinc/pointcloud.hpp"

namespace rinc {

/// Geometry of the panoramic range image. phi bounds are the elevation
/// extrema of the mapped field of view; rho_null marks empty pixels and
/// must lie outside the valid (positive) depth range.
struct ProjectionParams {
  uint32_t width = 1024;
  uint32_t height = 64;
  double phi_up = 0.0;
  double phi_down = 0.0;
  double rho_null = -1.0;

  void validate() const {
    if (width < 1 || height < 1) {
      throw ConfigError("range image dimensions must be positive");
    }
    if (!(phi_up > phi_down)) {
      throw ConfigError("phi_up must exceed phi_down");
    }
    if (!std::isfinite(rho_null) || rho_null > 0.0) {
      throw ConfigError("rho_null must be non-positive and finite");
    }
  }

  double phi_span() const { return phi_up + std::abs(phi_down); }

  bool operator==(const ProjectionParams&) const = default;
};

struct SphericalPoint {
  double rho = 0.0;    // meters
  double phi = 0.0;    // elevation, radians
  double theta = 0.0;  // azimuth, radians in (-pi, pi]
};

struct PixelCoord {
  uint32_t u = 0;
  uint32_t v = 0;
};

struct RangeImage {
  ProjectionParams params;
  std::vector<double> pixels;  // row-major, v * width + u

  RangeImage() = default;
  explicit RangeImage(const ProjectionParams& p)
      : params(p), pixels(static_cast<size_t>(p.width) * p.height, p.rho_null) {}

  double& at(uint32_t u, uint32_t v) { return pixels[static_cast<size_t>(v) * params.width + u]; }
  double at(uint32_t u, uint32_t v) const {
    return pixels[static_cast<size_t>(v) * params.width + u];
  }
  bool is_null(uint32_t u, uint32_t v) const { return at(u, v) == params.rho_null; }

  size_t occupied_count() const {
    size_t n = 0;
    for (double p : pixels) n += (p != params.rho_null);
    return n;
  }
};

struct MaskImage {
  ProjectionParams params;
  std::vector<uint8_t> bits;  // row-major, 0 or 1

  uint8_t at(uint32_t u, uint32_t v) const {
    return bits[static_cast<size_t>(v) * params.width + u];
  }
  size_t ones_count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
  }
};

/// Range image restricted to assigned pixels; unassigned positions carry an
/// explicit do-not-care flag. Addressable both by (u, v) and by
/// (patch, in-patch coordinate) once the patch factor is fixed.
struct DepthImage {
  ProjectionParams params;
  uint32_t patch_factor = 16;
  std::vector<double> pixels;
  std::vector<uint8_t> valid;

  double at(uint32_t u, uint32_t v) const {
    return pixels[static_cast<size_t>(v) * params.width + u];
  }
  bool is_valid(uint32_t u, uint32_t v) const {
    return valid[static_cast<size_t>(v) * params.width + u] != 0;
  }

  uint32_t patch_width() const { return params.width / patch_factor; }
  uint32_t patch_height() const { return params.height / patch_factor; }

  /// (patch index, in-patch coords) for an absolute pixel.
  void patch_coords(uint32_t u, uint32_t v, uint32_t& i, uint32_t& iu, uint32_t& iv) const {
    const uint32_t pw = patch_width(), ph = patch_height();
    i = (v / ph) * patch_factor + (u / pw);
    iu = u % pw;
    iv = v % ph;
  }

  /// Inverse of patch_coords.
  void absolute_coords(uint32_t i, uint32_t iu, uint32_t iv, uint32_t& u, uint32_t& v) const {
    u = (i % patch_factor) * patch_width() + iu;
    v = (i / patch_factor) * patch_height() + iv;
  }
};

struct MaskSample {
  uint32_t u = 0;
  uint32_t v = 0;
  uint8_t bit = 0;
};

struct DepthSample {
  uint32_t patch = 0;
  uint32_t iu = 0;
  uint32_t iv = 0;
  double depth = 0.0;
};

struct MaskDataset {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<MaskSample> samples;
};

struct DepthDataset {
  uint32_t width = 0;
  uint32_t height = 0;
  uint32_t patch_factor = 0;
  std::vector<DepthSample> samples;
};

/// Cartesian to spherical. theta uses the two-argument arctangent, so the
/// full (-pi, pi] azimuth range is covered.
inline SphericalPoint cart_to_sph(const Point3& p) {
  const double rho = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  if (rho == 0.0) {
    throw InvalidInput("cannot project the coordinate origin");
  }
  return SphericalPoint{rho, std::asin(p.z / rho), std::atan2(p.y, p.x)};
}

/// Spherical angles to pixel indices. Azimuth increases right to left across
/// the image (u = 0 at theta = +pi), matching the inverse map below; the
/// floor outputs at the exact extrema (theta = -pi, phi = phi_down) are
/// clamped back into the grid.
inline PixelCoord sph_to_pixel(const SphericalPoint& s, const ProjectionParams& params) {
  const double w = params.width, h = params.height;
  double fu = std::floor(w / 2.0 * (1.0 - s.theta / std::numbers::pi));
  double fv = std::floor(h * (1.0 - (s.phi + std::abs(params.phi_down)) / params.phi_span()));
  fu = std::clamp(fu, 0.0, w - 1.0);
  fv = std::clamp(fv, 0.0, h - 1.0);
  return PixelCoord{static_cast<uint32_t>(fu), static_cast<uint32_t>(fv)};
}

/// Pixel indices back to spherical angles (no half-pixel centering).
inline SphericalPoint pixel_to_sph(uint32_t u, uint32_t v, double rho_hat,
                                   const ProjectionParams& params) {
  const double phi =
      (1.0 - static_cast<double>(v) / params.height) * params.phi_span() - std::abs(params.phi_down);
  const double theta = -(2.0 * static_cast<double>(u) / params.width - 1.0) * std::numbers::pi;
  return SphericalPoint{rho_hat, phi, theta};
}

/// Elevation extrema of a cloud, used when params are derived per input.
inline std::pair<double, double> phi_bounds(const PointCloud& cloud) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Point3& p : cloud.points) {
    const double phi = cart_to_sph(p).phi;
    lo = std::min(lo, phi);
    hi = std::max(hi, phi);
  }
  if (!(hi > lo)) {
    // Planar cloud; open up a sliver so the v map stays well defined.
    hi = lo + 1e-3;
  }
  return {hi, lo};
}

/// Projects a cloud onto the range image grid. When several points fall in
/// one pixel the smallest rho wins (nearest return).
inline RangeImage project(const PointCloud& cloud, const ProjectionParams& params) {
  params.validate();
  RangeImage ri(params);
  for (const Point3& p : cloud.points) {
    const SphericalPoint s = cart_to_sph(p);
    const PixelCoord px = sph_to_pixel(s, params);
    double& cell = ri.at(px.u, px.v);
    if (cell == params.rho_null || s.rho < cell) {
      cell = s.rho;
    }
  }
  return ri;
}

/// Splits a range image into occupancy mask and masked depth image.
inline std::pair<MaskImage, DepthImage> split(const RangeImage& ri, uint32_t patch_factor) {
  const ProjectionParams& p = ri.params;
  if (patch_factor == 0 || p.width % patch_factor != 0 || p.height % patch_factor != 0) {
    throw ConfigError("patch factor " + std::to_string(patch_factor) + " does not divide " +
                      std::to_string(p.width) + "x" + std::to_string(p.height));
  }
  MaskImage mask{p, std::vector<uint8_t>(ri.pixels.size(), 0)};
  DepthImage depth;
  depth.params = p;
  depth.patch_factor = patch_factor;
  depth.pixels.assign(ri.pixels.size(), 0.0);
  depth.valid.assign(ri.pixels.size(), 0);
  for (size_t k = 0; k < ri.pixels.size(); ++k) {
    if (ri.pixels[k] != p.rho_null) {
      mask.bits[k] = 1;
      depth.pixels[k] = ri.pixels[k];
      depth.valid[k] = 1;
    }
  }
  return {std::move(mask), std::move(depth)};
}

/// Builds the two training datasets. The mask dataset enumerates every pixel
/// in row-major order; the depth dataset enumerates assigned pixels in
/// (patch, in-patch row, in-patch column) order.
inline std::pair<MaskDataset, DepthDataset> make_datasets(const MaskImage& mask,
                                                          const DepthImage& depth) {
  if (!(mask.params == depth.params)) {
    throw ConfigError("mask and depth images disagree on projection params");
  }
  const uint32_t w = mask.params.width, h = mask.params.height;

  MaskDataset md{w, h, {}};
  md.samples.reserve(static_cast<size_t>(w) * h);
  for (uint32_t v = 0; v < h; ++v) {
    for (uint32_t u = 0; u < w; ++u) {
      md.samples.push_back(MaskSample{u, v, mask.at(u, v)});
    }
  }

  const uint32_t np = depth.patch_factor;
  DepthDataset dd{w, h, np, {}};
  const uint32_t pw = depth.patch_width(), ph = depth.patch_height();
  for (uint32_t i = 0; i < np * np; ++i) {
    for (uint32_t iv = 0; iv < ph; ++iv) {
      for (uint32_t iu = 0; iu < pw; ++iu) {
        uint32_t u, v;
        depth.absolute_coords(i, iu, iv, u, v);
        if (depth.is_valid(u, v)) {
          dd.samples.push_back(DepthSample{i, iu, iv, depth.at(u, v)});
        }
      }
    }
  }
  return {std::move(md), std::move(dd)};
}

/// Back-projects every assigned pixel to a 3D point, row-major scan order.
inline PointCloud unproject(const RangeImage& ri) {
  PointCloud cloud;
  cloud.points.reserve(ri.occupied_count());
  for (uint32_t v = 0; v < ri.params.height; ++v) {
    for (uint32_t u = 0; u < ri.params.width; ++u) {
      const double rho = ri.at(u, v);
      if (rho == ri.params.rho_null) continue;
      const SphericalPoint s = pixel_to_sph(u, v, rho, ri.params);
      const double cos_phi = std::cos(s.phi);
      cloud.points.push_back(Point3{s.rho * cos_phi * std::cos(s.theta),
                                    s.rho * cos_phi * std::sin(s.theta),
                                    s.rho * std::sin(s.phi)});
    }
  }
  return cloud;
}

// --- binary range image dump -------------------------------------------------
// 24-byte header (W:u32, H:u32, phi_up:f32, phi_down:f32, rho_null:f32, Np:u32)
// followed by W*H little-endian float32 pixels, row-major.

inline std::vector<uint8_t> range_image_to_bytes(const RangeImage& ri, uint32_t patch_factor) {
  std::vector<uint8_t> out;
  out.reserve(24 + ri.pixels.size() * 4);
  put_u32(out, ri.params.width);
  put_u32(out, ri.params.height);
  put_f32(out, static_cast<float>(ri.params.phi_up));
  put_f32(out, static_cast<float>(ri.params.phi_down));
  put_f32(out, static_cast<float>(ri.params.rho_null));
  put_u32(out, patch_factor);
  for (double p : ri.pixels) put_f32(out, static_cast<float>(p));
  return out;
}

inline std::pair<RangeImage, uint32_t> range_image_from_bytes(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  ProjectionParams params;
  params.width = r.u32();
  params.height = r.u32();
  params.phi_up = r.f32();
  params.phi_down = r.f32();
  params.rho_null = r.f32();
  const uint32_t np = r.u32();
  params.validate();
  RangeImage ri(params);
  for (double& p : ri.pixels) p = r.f32();
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes after range image payload");
  }
  return {std::move(ri), np};
}

inline void save_range_image(const RangeImage& ri, uint32_t patch_factor,
                             const std::string& path) {
  const std::vector<uint8_t> bytes = range_image_to_bytes(ri, patch_factor);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) {
    throw IoError("write failed for " + path);
  }
}

inline std::pair<RangeImage, uint32_t> load_range_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path);
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return range_image_from_bytes(bytes);
}

}  // namespace rinc

#endif  // RINC_PROJECTION_HPP
