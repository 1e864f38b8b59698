#pragma once

#include <array>
#include <string>
#include <vector>

#include "vpcnet/geometry.hpp"

namespace vpcnet {

struct RigidTransform {
  Mat3 rotation = Mat3::identity();
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  PointCloud apply(const PointCloud& cloud) const;
  // Unit quaternion with w >= 0 so antipodal representations agree.
  std::array<double, 4> quaternion_wxyz() const;
};

std::array<double, 4> quaternion_wxyz(const Mat3& rotation);
Mat3 rotation_from_quaternion(double w, double x, double y, double z);
Mat3 rotation_about_axis(const Vec3& axis, double angle_rad);

struct IcpOptions {
  std::size_t max_iterations = 100;
  // Minimum improvement in mean squared correspondence distance.
  double tolerance = 1e-7;
  std::size_t low_confidence_below = 30;
};

struct IcpResult {
  RigidTransform transform;  // maps source into the target frame
  double mean_squared_error = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool low_confidence = false;
};

// Point-to-point ICP: alternate nearest-neighbour correspondence against the
// target with an SVD least-squares rigid fit on the original source
// coordinates. The correspondence MSE is non-increasing across iterations.
IcpResult icp(const PointCloud& source, const PointCloud& target,
              const IcpOptions& options = {});

// Doubled-angle quaternion form: 2*acos(clamp(2<q1,q2>^2 - 1)), in degrees.
// Reports twice the geodesic angle by construction.
double rotation_error_deg(const Mat3& r1, const Mat3& r2);
// Standard geodesic angle, in degrees.
double rotation_geodesic_deg(const Mat3& r1, const Mat3& r2);
double translation_error(const Vec3& t1, const Vec3& t2);

enum class RotationMetric { kDoubled, kGeodesic };

struct RegistrationCase {
  std::string id;
  PointCloud source;
  PointCloud target;
  RigidTransform ground_truth;  // source -> target
};

struct RegistrationRow {
  std::string id;
  double rot_err = 0.0;
  double trans_err = 0.0;
  bool low_confidence = false;
};

struct RegistrationSummary {
  std::vector<RegistrationRow> rows;
  double mean_rot_err = 0.0;
  double mean_trans_err = 0.0;
};

// Runs ICP per case in order; rows line up with the input cases.
RegistrationSummary registration_experiment(
    const std::vector<RegistrationCase>& cases, const IcpOptions& options = {},
    RotationMetric metric = RotationMetric::kDoubled);

}  // namespace vpcnet
