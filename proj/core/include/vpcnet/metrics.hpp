#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vpcnet/geometry.hpp"
#include "vpcnet/tensor.hpp"

namespace vpcnet {

// Symmetric squared-distance chamfer: mean over a of the squared distance to
// the nearest point of b, plus the same with roles swapped.
double chamfer(const PointCloud& a, const PointCloud& b);

// Differentiable chamfer over n x 3 tensors.
Tensor chamfer_loss(const Tensor& a, const Tensor& b);

Tensor tensor_from_cloud(const PointCloud& cloud);
PointCloud cloud_from_tensor(const Tensor& t, PointTag tag = PointTag::kGenerated);

struct Matching {
  std::vector<std::size_t> assignment;  // index into a -> index into b
  double total_cost = 0.0;              // sum of Euclidean distances
  double mean_cost = 0.0;
};

// Exact minimum-cost bijection via shortest augmenting paths, O(n^3).
// Sizes must agree and n must not exceed 512.
Matching emd_exact(const PointCloud& a, const PointCloud& b);

struct AuctionConfig {
  // Certified bound: mean cost is within (1 + relative_gap) of optimal.
  double relative_gap = 0.01;
  std::size_t max_rounds = 64;
};

Matching emd_approx(const PointCloud& a, const PointCloud& b,
                    const AuctionConfig& config = {});

enum class EmdSolver { kExact, kAuction };

// Differentiable mean matching distance against a fixed target. The matching
// is computed from the current values of `a` and held constant in backward.
Tensor emd_loss(const Tensor& a, const PointCloud& b, EmdSolver solver,
                const AuctionConfig& config = {});

// Voxel-occupancy surface area proxy: distinct occupied cells x voxel^2,
// with the grid anchored at the min corner of `complete`'s bounds.
// Reported ratio is proxy(partial) / proxy(complete).
double overlap_ratio(const PointCloud& partial, const PointCloud& complete,
                     double voxel);
double default_overlap_voxel(const PointCloud& complete);

struct MetricReport {
  std::string instance_id;
  double cd = 0.0;
  double emd = 0.0;
  double overlap = 0.0;
  // nan when the instance was not registered
  double rot_err_deg = std::nan("");
  double trans_err = std::nan("");

  static const char* csv_header();
  std::string csv_row() const;
};

}  // namespace vpcnet
