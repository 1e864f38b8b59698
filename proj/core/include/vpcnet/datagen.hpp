#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "vpcnet/geometry.hpp"
#include "vpcnet/random.hpp"

namespace vpcnet {

struct CameraIntrinsics {
  std::size_t width = 160;
  std::size_t height = 120;
  double focal_px = 150.0;
  // principal point at the image center
  double cx() const { return static_cast<double>(width) / 2.0; }
  double cy() const { return static_cast<double>(height) / 2.0; }
};

// World-to-camera frame with rows (right, down, forward); +z looks at the
// target, image y grows downward.
struct CameraPose {
  Vec3 position;
  Mat3 world_to_camera = Mat3::identity();

  static CameraPose look_at(const Vec3& position, const Vec3& target,
                            const Vec3& up_hint = {0.0, 0.0, 1.0});
  Vec3 to_camera(const Vec3& world) const;
  Vec3 to_world(const Vec3& camera) const;
};

struct DepthImage {
  std::size_t width = 0;
  std::size_t height = 0;
  // camera-z depth per pixel, +inf where no surface was hit
  std::vector<double> depth;

  double at(std::size_t x, std::size_t y) const { return depth[y * width + x]; }
  std::size_t hit_count() const;
};

// Pinhole depth render with a camera-z depth buffer; rays pass through pixel
// centers (+0.5 offsets). Warns on stderr when the camera sits inside the
// mesh bounds.
DepthImage render_depth(const TriangleMesh& mesh, const CameraPose& pose,
                        const CameraIntrinsics& intrinsics);

// One point per finite-depth pixel, row-major order. Throws when the image
// contains no hits.
PointCloud backproject(const DepthImage& depth, const CameraPose& pose,
                       const CameraIntrinsics& intrinsics);

Vec3 uniform_unit_vector(DeterministicRng& rng);

struct DatagenConfig {
  std::size_t complete_points = 16384;
  std::size_t views = 8;
  CameraIntrinsics intrinsics;
  std::size_t max_view_retries = 10;
};

struct GeneratedInstance {
  PointCloud complete;
  std::vector<PointCloud> partials;
};

// Centers the mesh and scales its longest bbox side to 1, the frame every
// dataset is stored in.
TriangleMesh normalize_mesh_to_unit_box(const TriangleMesh& mesh);

// Per-instance seed for a named mesh under a dataset seed; the id is the
// mesh filename stem.
std::uint64_t instance_seed(std::uint64_t dataset_seed, std::string_view id);

// Stream index for visibility crops. A fresh rng on this stream draws the
// same direction for every ratio, so crops at different ratios nest.
inline constexpr std::uint64_t kCropStream = 0x63726f70;

// Complete cloud for an instance; the seed stream matches make_pair so a
// dataset's ground truth can be re-derived from (mesh, seed).
PointCloud dataset_complete_cloud(const TriangleMesh& mesh, std::size_t count,
                                  std::uint64_t seed);

// Samples the complete cloud, then renders each view from a random position
// on a sphere of radius 2x the bbox diagonal. Views with no visible surface
// are redrawn up to max_view_retries times before failing.
GeneratedInstance make_pair(const TriangleMesh& mesh, const DatagenConfig& config,
                            std::uint64_t seed);

// Keeps the ceil(ratio * n) points furthest along a random direction; output
// preserves the original point order. ratio must lie in (0, 1].
PointCloud crop_to_visible_ratio(const PointCloud& cloud, double ratio,
                                 DeterministicRng& rng);

}  // namespace vpcnet
