#include "vpcnet/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace vpcnet {

CameraPose CameraPose::look_at(const Vec3& position, const Vec3& target,
                               const Vec3& up_hint) {
  Vec3 forward = target - position;
  if (forward.norm() < 1e-12)
    throw std::invalid_argument("look_at: camera position equals target");
  forward = forward.normalized();

  Vec3 up = up_hint;
  if (forward.cross(up).norm() < 1e-9) up = {0.0, 1.0, 0.0};
  if (forward.cross(up).norm() < 1e-9) up = {1.0, 0.0, 0.0};

  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);

  CameraPose pose;
  pose.position = position;
  for (int c = 0; c < 3; ++c) {
    pose.world_to_camera(0, c) = right[c];
    pose.world_to_camera(1, c) = down[c];
    pose.world_to_camera(2, c) = forward[c];
  }
  return pose;
}

Vec3 CameraPose::to_camera(const Vec3& world) const {
  return world_to_camera * (world - position);
}

Vec3 CameraPose::to_world(const Vec3& camera) const {
  return world_to_camera.transpose() * camera + position;
}

std::size_t DepthImage::hit_count() const {
  std::size_t n = 0;
  for (double d : depth)
    if (std::isfinite(d)) ++n;
  return n;
}

namespace {

// Ray-triangle intersection; dir is unnormalized with camera-z component 1,
// so the returned t is the camera-z depth directly.
bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                  const Vec3& b, const Vec3& c, double& t_out) {
  constexpr double kBary = 1e-10;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return false;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < -kBary || u > 1.0 + kBary) return false;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < -kBary || u + v > 1.0 + kBary) return false;
  const double t = e2.dot(q) * inv;
  if (t <= 1e-9) return false;
  t_out = t;
  return true;
}

}  // namespace

DepthImage render_depth(const TriangleMesh& mesh, const CameraPose& pose,
                        const CameraIntrinsics& intr) {
  if (mesh.triangles().empty())
    throw std::invalid_argument("render_depth: mesh has no triangles");
  if (intr.width == 0 || intr.height == 0 || !(intr.focal_px > 0.0))
    throw std::invalid_argument("render_depth: invalid intrinsics");
  if (mesh.bounds().contains(pose.position))
    std::cerr << "warning: camera position is inside the mesh bounds\n";

  DepthImage img;
  img.width = intr.width;
  img.height = intr.height;
  img.depth.assign(intr.width * intr.height,
                   std::numeric_limits<double>::infinity());

  // Precompute world-space ray directions per pixel column/row factor.
  const Mat3 cam_to_world = pose.world_to_camera.transpose();
  const double f = intr.focal_px;

  const auto& verts = mesh.vertices();
  for (const auto& tri : mesh.triangles()) {
    const Vec3& a = verts[tri[0]];
    const Vec3& b = verts[tri[1]];
    const Vec3& c = verts[tri[2]];

    // Conservative pixel rectangle from projected vertices; a vertex at or
    // behind the camera falls back to the full image.
    std::size_t x0 = 0, x1 = intr.width - 1, y0 = 0, y1 = intr.height - 1;
    bool bounded = true;
    double px_min = 1e300, px_max = -1e300, py_min = 1e300, py_max = -1e300;
    for (const Vec3* v : {&a, &b, &c}) {
      const Vec3 cam = pose.to_camera(*v);
      if (cam.z < 1e-9) {
        bounded = false;
        break;
      }
      const double px = f * cam.x / cam.z + intr.cx() - 0.5;
      const double py = f * cam.y / cam.z + intr.cy() - 0.5;
      px_min = std::min(px_min, px);
      px_max = std::max(px_max, px);
      py_min = std::min(py_min, py);
      py_max = std::max(py_max, py);
    }
    if (bounded) {
      if (px_max < -1.0 || py_max < -1.0 ||
          px_min > static_cast<double>(intr.width) ||
          py_min > static_cast<double>(intr.height))
        continue;
      x0 = static_cast<std::size_t>(std::max(0.0, std::floor(px_min) - 1.0));
      y0 = static_cast<std::size_t>(std::max(0.0, std::floor(py_min) - 1.0));
      x1 = std::min(intr.width - 1,
                    static_cast<std::size_t>(std::max(0.0, std::ceil(px_max) + 1.0)));
      y1 = std::min(intr.height - 1,
                    static_cast<std::size_t>(std::max(0.0, std::ceil(py_max) + 1.0)));
    }

    for (std::size_t y = y0; y <= y1; ++y) {
      const double v_ndc =
          (static_cast<double>(y) + 0.5 - intr.cy()) / f;
      for (std::size_t x = x0; x <= x1; ++x) {
        const double u_ndc =
            (static_cast<double>(x) + 0.5 - intr.cx()) / f;
        const Vec3 dir = cam_to_world * Vec3{u_ndc, v_ndc, 1.0};
        double t;
        if (ray_triangle(pose.position, dir, a, b, c, t)) {
          double& slot = img.depth[y * intr.width + x];
          if (t < slot) slot = t;
        }
      }
    }
  }
  return img;
}

PointCloud backproject(const DepthImage& img, const CameraPose& pose,
                       const CameraIntrinsics& intr) {
  if (img.width != intr.width || img.height != intr.height)
    throw std::invalid_argument("backproject: image size mismatch");
  PointCloud cloud;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double t = img.at(x, y);
      if (!std::isfinite(t)) continue;
      const double u = (static_cast<double>(x) + 0.5 - intr.cx()) / intr.focal_px;
      const double v = (static_cast<double>(y) + 0.5 - intr.cy()) / intr.focal_px;
      cloud.points.push_back(pose.to_world({u * t, v * t, t}));
    }
  }
  if (cloud.empty())
    throw std::runtime_error("backproject: depth image has no hits");
  cloud.tags.assign(cloud.size(), PointTag::kFromInput);
  return cloud;
}

Vec3 uniform_unit_vector(DeterministicRng& rng) {
  const double z = 1.0 - 2.0 * rng.uniform();
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

TriangleMesh normalize_mesh_to_unit_box(const TriangleMesh& mesh) {
  PointCloud vertex_cloud;
  vertex_cloud.points = mesh.vertices();
  const SimilarityTransform t = normalization_transform(vertex_cloud);
  std::vector<Vec3> vertices;
  vertices.reserve(mesh.vertices().size());
  for (const Vec3& v : mesh.vertices()) vertices.push_back(t.apply(v));
  return TriangleMesh::create(std::move(vertices), mesh.triangles());
}

std::uint64_t instance_seed(std::uint64_t dataset_seed, std::string_view id) {
  std::uint64_t h = 1469598103934665603ull;  // fnv1a-64
  for (unsigned char ch : id) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return mix_seed(dataset_seed, h);
}

PointCloud dataset_complete_cloud(const TriangleMesh& mesh, std::size_t count,
                                  std::uint64_t seed) {
  DeterministicRng rng(mix_seed(seed, 0));
  PointCloud cloud = sample_mesh_uniform(mesh, count, rng);
  cloud.tags.assign(cloud.size(), PointTag::kGenerated);
  return cloud;
}

GeneratedInstance make_pair(const TriangleMesh& mesh,
                            const DatagenConfig& config, std::uint64_t seed) {
  GeneratedInstance out;
  out.complete = dataset_complete_cloud(mesh, config.complete_points, seed);

  const Aabb bounds = mesh.bounds();
  const Vec3 center = (bounds.min + bounds.max) * 0.5;
  const double radius = 2.0 * bounds.diagonal();
  if (!(radius > 0.0))
    throw std::invalid_argument("make_pair: mesh has degenerate bounds");

  out.partials.reserve(config.views);
  for (std::size_t k = 0; k < config.views; ++k) {
    DeterministicRng view_rng(mix_seed(seed, 1 + k));
    bool placed = false;
    for (std::size_t attempt = 0; attempt < config.max_view_retries; ++attempt) {
      const Vec3 dir = uniform_unit_vector(view_rng);
      const CameraPose pose = CameraPose::look_at(center + dir * radius, center);
      const DepthImage depth = render_depth(mesh, pose, config.intrinsics);
      if (depth.hit_count() == 0) continue;
      out.partials.push_back(backproject(depth, pose, config.intrinsics));
      placed = true;
      break;
    }
    if (!placed)
      throw std::runtime_error("make_pair: view " + std::to_string(k) +
                               " saw no surface after " +
                               std::to_string(config.max_view_retries) +
                               " attempts");
  }
  return out;
}

PointCloud crop_to_visible_ratio(const PointCloud& cloud, double ratio,
                                 DeterministicRng& rng) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw std::invalid_argument("crop_to_visible_ratio: ratio must be in (0, 1]");
  if (cloud.empty())
    throw std::invalid_argument("crop_to_visible_ratio: empty cloud");
  const std::size_t n = cloud.size();
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(n)));

  const Vec3 dir = uniform_unit_vector(rng);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double pa = cloud.points[a].dot(dir);
    const double pb = cloud.points[b].dot(dir);
    if (pa != pb) return pa > pb;
    return a < b;
  });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  PointCloud out;
  out.points.reserve(keep);
  const bool tagged = cloud.tags.size() == n;
  if (tagged) out.tags.reserve(keep);
  for (std::size_t i : order) {
    out.points.push_back(cloud.points[i]);
    if (tagged) out.tags.push_back(cloud.tags[i]);
  }
  return out;
}

}  // namespace vpcnet
