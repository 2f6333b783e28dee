#ifndef RINC_METRICS_HPP
#define RINC_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "rinc/error.hpp"
#include "rinc/pointcloud.hpp"

namespace rinc {

/// Static kd-tree for exact nearest-neighbor queries. Splits on the widest
/// axis at the median; queries prune subtrees by the squared distance to the
/// splitting plane, so results match a brute-force scan exactly.
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud) : points_(cloud.points) {
    if (points_.empty()) {
      throw InvalidInput("KdTree: empty point set");
    }
    index_.resize(points_.size());
    for (size_t i = 0; i < index_.size(); ++i) index_[i] = static_cast<uint32_t>(i);
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, points_.size());
  }

  double nearest_dist2(const Point3& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
  }

 private:
  static constexpr size_t kLeafSize = 8;

  struct Node {
    double split = 0.0;
    int32_t axis = -1;  // -1 marks a leaf
    int32_t left = -1;
    int32_t right = -1;
    uint32_t begin = 0;
    uint32_t end = 0;
  };

  static double coord(const Point3& p, int axis) {
    return axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
  }

  int32_t build(size_t begin, size_t end) {
    Node node;
    node.begin = static_cast<uint32_t>(begin);
    node.end = static_cast<uint32_t>(end);
    if (end - begin > kLeafSize) {
      std::array<double, 3> lo{}, hi{};
      lo.fill(std::numeric_limits<double>::infinity());
      hi.fill(-std::numeric_limits<double>::infinity());
      for (size_t i = begin; i < end; ++i) {
        const Point3& p = points_[index_[i]];
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], coord(p, a));
          hi[a] = std::max(hi[a], coord(p, a));
        }
      }
      int axis = 0;
      for (int a = 1; a < 3; ++a) {
        if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
      }
      if (hi[axis] > lo[axis]) {
        const size_t mid = begin + (end - begin) / 2;
        std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                         [&](uint32_t a, uint32_t b) {
                           return coord(points_[a], axis) < coord(points_[b], axis);
                         });
        node.axis = axis;
        node.split = coord(points_[index_[mid]], axis);
        const int32_t id = push(node);
        const int32_t left = build(begin, mid);
        const int32_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
      }
      // All points coincide along every axis; fall through to a leaf.
    }
    return push(node);
  }

  int32_t push(const Node& node) {
    nodes_.push_back(node);
    return static_cast<int32_t>(nodes_.size()) - 1;
  }

  void search(int32_t id, const Point3& q, double& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (uint32_t i = node.begin; i < node.end; ++i) {
        const Point3& p = points_[index_[i]];
        const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      return;
    }
    const double d = coord(q, node.axis) - node.split;
    const int32_t near = d < 0.0 ? node.left : node.right;
    const int32_t far = d < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (d * d < best) {
      search(far, q, best);
    }
  }

  std::vector<Point3> points_;
  std::vector<uint32_t> index_;
  std::vector<Node> nodes_;
  int32_t root_ = -1;
};

/// Symmetric Chamfer distance: the average of the two directed mean
/// nearest-neighbor distances, halved.
inline double chamfer(const PointCloud& p, const PointCloud& q) {
  if (p.empty() || q.empty()) {
    throw InvalidInput("chamfer: undefined for empty clouds");
  }
  const KdTree tree_q(q);
  double sum_p = 0.0;
  for (const Point3& pt : p.points) sum_p += std::sqrt(tree_q.nearest_dist2(pt));
  const KdTree tree_p(p);
  double sum_q = 0.0;
  for (const Point3& pt : q.points) sum_q += std::sqrt(tree_p.nearest_dist2(pt));
  return 0.5 * (sum_p / static_cast<double>(p.size()) + sum_q / static_cast<double>(q.size()));
}

/// Bits per point, normalized by the original input cloud size.
inline double bpp(size_t stream_bits, size_t original_count) {
  if (original_count == 0) {
    throw InvalidInput("bpp: original cloud is empty");
  }
  return static_cast<double>(stream_bits) / static_cast<double>(original_count);
}

/// Fraction of input points surviving the projection round trip.
inline double retention_ratio(const PointCloud& original, const PointCloud& reconstructed) {
  if (original.empty()) {
    throw InvalidInput("retention_ratio: original cloud is empty");
  }
  return static_cast<double>(reconstructed.size()) / static_cast<double>(original.size());
}

struct RdPoint {
  double bpp = 0.0;
  double cd = 0.0;
};

struct RdCurve {
  std::vector<RdPoint> points;  // strictly increasing bpp

  void validate() const {
    if (points.size() < 4) {
      throw InvalidInput("RdCurve: need at least 4 points for BD fitting");
    }
    for (size_t i = 0; i < points.size(); ++i) {
      if (!(points[i].bpp > 0.0) || points[i].cd < 0.0) {
        throw InvalidInput("RdCurve: bpp must be positive and cd nonnegative");
      }
      if (i > 0 && !(points[i].bpp > points[i - 1].bpp)) {
        throw InvalidInput("RdCurve: bpp must be strictly increasing");
      }
    }
  }
};

namespace detail {

/// Least-squares cubic fit y(x). Returns coefficients a0..a3.
inline std::array<double, 4> fit_cubic(const std::vector<double>& xs,
                                       const std::vector<double>& ys) {
  std::array<double, 7> moments{};  // sum of x^0 .. x^6
  std::array<double, 4> rhs{};
  for (size_t i = 0; i < xs.size(); ++i) {
    double xp = 1.0;
    for (int k = 0; k <= 6; ++k) {
      moments[k] += xp;
      if (k <= 3) rhs[k] += xp * ys[i];
      xp *= xs[i];
    }
  }
  double a[4][5];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) a[r][c] = moments[r + c];
    a[r][4] = rhs[r];
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-30) {
      throw InvalidInput("bd_cd: degenerate rate points, cubic fit is singular");
    }
    std::swap(a[col], a[pivot]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 5; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::array<double, 4> coef{};
  for (int r = 3; r >= 0; --r) {
    double v = a[r][4];
    for (int c = r + 1; c < 4; ++c) v -= a[r][c] * coef[c];
    coef[r] = v / a[r][r];
  }
  return coef;
}

inline double integrate_cubic(const std::array<double, 4>& c, double lo, double hi) {
  auto antiderivative = [&](double x) {
    return c[0] * x + c[1] * x * x / 2.0 + c[2] * x * x * x / 3.0 + c[3] * x * x * x * x / 4.0;
  };
  return antiderivative(hi) - antiderivative(lo);
}

}  // namespace detail

/// Bjontegaard-style average CD difference over the overlapping log-rate
/// interval. Positive when the reference curve has lower CD than the test
/// curve across the range.
inline double bd_cd(const RdCurve& reference, const RdCurve& test) {
  reference.validate();
  test.validate();

  auto log_xs = [](const RdCurve& c) {
    std::vector<double> xs;
    xs.reserve(c.points.size());
    for (const RdPoint& p : c.points) xs.push_back(std::log10(p.bpp));
    return xs;
  };
  const std::vector<double> xr = log_xs(reference), xt = log_xs(test);
  const double lo = std::max(xr.front(), xt.front());
  const double hi = std::min(xr.back(), xt.back());
  if (!(lo < hi)) {
    throw InvalidInput("bd_cd: curves do not overlap in log-bpp range");
  }

  // Center for conditioning; cubics are closed under the shift.
  const double center = (lo + hi) / 2.0;
  auto fit = [&](const std::vector<double>& xs, const RdCurve& c) {
    std::vector<double> xs_c(xs.size()), ys(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
      xs_c[i] = xs[i] - center;
      ys[i] = c.points[i].cd;
    }
    return detail::fit_cubic(xs_c, ys);
  };
  const std::array<double, 4> cr = fit(xr, reference);
  const std::array<double, 4> ct = fit(xt, test);
  std::array<double, 4> diff{};
  for (int k = 0; k < 4; ++k) diff[k] = ct[k] - cr[k];
  return detail::integrate_cubic(diff, lo - center, hi - center) / (hi - lo);
}

}  // namespace rinc

#endif  // RINC_METRICS_HPP
