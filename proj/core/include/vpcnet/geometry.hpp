#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "vpcnet/random.hpp"

namespace vpcnet {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
  Vec3 normalized() const { return *this / norm(); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity() {
    Mat3 r;
    r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return r;
  }
  double& operator()(int r, int c) { return m[3 * r + c]; }
  double operator()(int r, int c) const { return m[3 * r + c]; }

  Mat3 transpose() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
  }
  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }
  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }
};

struct Aabb {
  Vec3 min{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3 max{-std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  void expand(const Vec3& p) {
    min = {std::min(min.x, p.x), std::min(min.y, p.y), std::min(min.z, p.z)};
    max = {std::max(max.x, p.x), std::max(max.y, p.y), std::max(max.z, p.z)};
  }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
  Vec3 extent() const { return max - min; }
  double longest_side() const {
    Vec3 e = extent();
    return std::max(e.x, std::max(e.y, e.z));
  }
  double diagonal() const { return extent().norm(); }
};

enum class PointTag : std::uint8_t { kFromInput = 0, kGenerated = 1 };

struct PointCloud {
  std::vector<Vec3> points;
  // Optional provenance; either empty or one tag per point.
  std::vector<PointTag> tags;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  Vec3 centroid() const;
  Aabb bounds() const;
};

class TriangleMesh {
 public:
  // Drops triangles whose area is below 1e-12 of the total surface area.
  // Throws std::invalid_argument on out-of-range vertex indices.
  static TriangleMesh create(std::vector<Vec3> vertices,
                             std::vector<std::array<std::uint32_t, 3>> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<std::uint32_t, 3>>& triangles() const {
    return triangles_;
  }
  const std::vector<double>& triangle_areas() const { return areas_; }
  double total_area() const { return total_area_; }
  Aabb bounds() const { return bounds_; }

 private:
  TriangleMesh() = default;
  std::vector<Vec3> vertices_;
  std::vector<std::array<std::uint32_t, 3>> triangles_;
  std::vector<double> areas_;
  double total_area_ = 0.0;
  Aabb bounds_;
};

// Exact nearest neighbour queries over an immutable point set (kd-tree,
// leaf size 16). Distance ties resolve to the lowest point index, matching
// a first-minimum linear scan.
class SpatialIndex {
 public:
  explicit SpatialIndex(std::vector<Vec3> points);

  struct Hit {
    std::size_t index;
    double squared_distance;
  };
  Hit nearest(const Vec3& query) const;

  const std::vector<Vec3>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    // leaf: [begin, end) into order_; internal: split plane + children
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
    int axis = -1;
    double split = 0.0;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& query, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

// Area-proportional surface sampling with barycentric placement.
PointCloud sample_mesh_uniform(const TriangleMesh& mesh, std::size_t count,
                               DeterministicRng& rng);

// Farthest point sampling. The seed is the point farthest from the centroid;
// all argmax ties resolve to the lowest index. Output order is selection order.
std::vector<std::size_t> farthest_point_sample_indices(
    const std::vector<Vec3>& points, std::size_t count);
PointCloud farthest_point_sample(const PointCloud& cloud, std::size_t count);

struct SimilarityTransform {
  Vec3 center;
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return (p - center) * scale; }
  Vec3 invert(const Vec3& p) const { return p / scale + center; }
};

// Centers on the reference centroid and scales by the reciprocal of the
// reference's longest bbox side. Throws on zero extent.
SimilarityTransform normalization_transform(const PointCloud& reference);
PointCloud apply_transform(const PointCloud& cloud,
                           const SimilarityTransform& t);
PointCloud normalize_to_unit_box(const PointCloud& cloud,
                                 const PointCloud& reference);

}  // namespace vpcnet
