#include "vpcnet/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace vpcnet {

Vec3 PointCloud::centroid() const {
  if (points.empty()) throw std::invalid_argument("centroid of empty cloud");
  Vec3 c;
  for (const Vec3& p : points) c += p;
  return c / static_cast<double>(points.size());
}

Aabb PointCloud::bounds() const {
  Aabb b;
  for (const Vec3& p : points) b.expand(p);
  return b;
}

namespace {
double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}
}  // namespace

TriangleMesh TriangleMesh::create(
    std::vector<Vec3> vertices,
    std::vector<std::array<std::uint32_t, 3>> triangles) {
  for (const auto& t : triangles) {
    for (std::uint32_t idx : t) {
      if (idx >= vertices.size())
        throw std::invalid_argument("triangle index out of range");
    }
  }
  double total = 0.0;
  std::vector<double> areas(triangles.size());
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const auto& t = triangles[i];
    areas[i] = triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    total += areas[i];
  }

  TriangleMesh mesh;
  mesh.vertices_ = std::move(vertices);
  const double floor = 1e-12 * total;
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    if (areas[i] < floor) continue;
    mesh.triangles_.push_back(triangles[i]);
    mesh.areas_.push_back(areas[i]);
    mesh.total_area_ += areas[i];
  }
  for (const Vec3& v : mesh.vertices_) mesh.bounds_.expand(v);
  return mesh;
}

SpatialIndex::SpatialIndex(std::vector<Vec3> points)
    : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("empty spatial index");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(points_.size() / 8 + 1);
  root_ = build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  constexpr std::uint32_t kLeafSize = 16;
  Node node;
  node.begin = begin;
  node.end = end;
  if (end - begin <= kLeafSize) {
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.expand(points_[order_[i]]);
  Vec3 ext = box.extent();
  int axis = 0;
  if (ext.y > ext[axis]) axis = 1;
  if (ext.z > ext[axis]) axis = 2;

  std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  node.axis = axis;
  node.split = points_[order_[mid]][axis];

  std::size_t self = nodes_.size();
  nodes_.push_back(node);
  std::int32_t left = build(begin, mid);
  std::int32_t right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return static_cast<std::int32_t>(self);
}

void SpatialIndex::search(std::int32_t ni, const Vec3& query, Hit& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(ni)];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      std::uint32_t idx = order_[i];
      double d2 = (points_[idx] - query).squared_norm();
      if (d2 < best.squared_distance ||
          (d2 == best.squared_distance && idx < best.index)) {
        best.squared_distance = d2;
        best.index = idx;
      }
    }
    return;
  }
  double delta = query[node.axis] - node.split;
  std::int32_t near = delta < 0 ? node.left : node.right;
  std::int32_t far = delta < 0 ? node.right : node.left;
  search(near, query, best);
  // <= keeps equidistant candidates reachable so index ties stay exact
  if (delta * delta <= best.squared_distance) search(far, query, best);
}

SpatialIndex::Hit SpatialIndex::nearest(const Vec3& query) const {
  Hit best{std::numeric_limits<std::size_t>::max(),
           std::numeric_limits<double>::infinity()};
  search(root_, query, best);
  return best;
}

PointCloud sample_mesh_uniform(const TriangleMesh& mesh, std::size_t count,
                               DeterministicRng& rng) {
  if (mesh.triangles().empty())
    throw std::invalid_argument("cannot sample mesh with no triangles");
  const auto& areas = mesh.triangle_areas();
  std::vector<double> cumulative(areas.size());
  std::partial_sum(areas.begin(), areas.end(), cumulative.begin());
  const double total = cumulative.back();

  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double u = rng.uniform() * total;
    std::size_t ti = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin());
    if (ti >= areas.size()) ti = areas.size() - 1;

    const auto& t = mesh.triangles()[ti];
    const Vec3& a = mesh.vertices()[t[0]];
    const Vec3& b = mesh.vertices()[t[1]];
    const Vec3& c = mesh.vertices()[t[2]];
    double r1 = rng.uniform();
    double r2 = rng.uniform();
    if (r1 + r2 > 1.0) {
      r1 = 1.0 - r1;
      r2 = 1.0 - r2;
    }
    cloud.points.push_back(a + (b - a) * r1 + (c - a) * r2);
  }
  return cloud;
}

std::vector<std::size_t> farthest_point_sample_indices(
    const std::vector<Vec3>& points, std::size_t count) {
  const std::size_t n = points.size();
  if (count > n)
    throw std::invalid_argument("farthest point sample larger than input");
  std::vector<std::size_t> selected;
  if (count == 0) return selected;
  selected.reserve(count);

  Vec3 centroid;
  for (const Vec3& p : points) centroid += p;
  centroid = centroid / static_cast<double>(n);

  std::size_t seed = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = (points[i] - centroid).squared_norm();
    if (d2 > best) {
      best = d2;
      seed = i;
    }
  }
  selected.push_back(seed);

  std::vector<double> min_dist(n);
  for (std::size_t i = 0; i < n; ++i)
    min_dist[i] = (points[i] - points[seed]).squared_norm();

  while (selected.size() < count) {
    std::size_t next = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_dist[i] > far) {
        far = min_dist[i];
        next = i;
      }
    }
    selected.push_back(next);
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = (points[i] - points[next]).squared_norm();
      if (d2 < min_dist[i]) min_dist[i] = d2;
    }
  }
  return selected;
}

PointCloud farthest_point_sample(const PointCloud& cloud, std::size_t count) {
  std::vector<std::size_t> idx =
      farthest_point_sample_indices(cloud.points, count);
  PointCloud out;
  out.points.reserve(idx.size());
  const bool tagged = cloud.tags.size() == cloud.points.size();
  if (tagged) out.tags.reserve(idx.size());
  for (std::size_t i : idx) {
    out.points.push_back(cloud.points[i]);
    if (tagged) out.tags.push_back(cloud.tags[i]);
  }
  return out;
}

SimilarityTransform normalization_transform(const PointCloud& reference) {
  if (reference.empty())
    throw std::invalid_argument("normalization reference is empty");
  SimilarityTransform t;
  t.center = reference.centroid();
  double side = reference.bounds().longest_side();
  if (side <= 0.0)
    throw std::invalid_argument("normalization reference has zero extent");
  t.scale = 1.0 / side;
  return t;
}

PointCloud apply_transform(const PointCloud& cloud,
                           const SimilarityTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.size());
  out.tags = cloud.tags;
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
  return out;
}

PointCloud normalize_to_unit_box(const PointCloud& cloud,
                                 const PointCloud& reference) {
  return apply_transform(cloud, normalization_transform(reference));
}

}  // namespace vpcnet
