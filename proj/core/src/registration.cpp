#include "vpcnet/registration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace vpcnet {

PointCloud RigidTransform::apply(const PointCloud& cloud) const {
  PointCloud out;
  out.points.reserve(cloud.size());
  out.tags = cloud.tags;
  for (const Vec3& p : cloud.points) out.points.push_back(apply(p));
  return out;
}

std::array<double, 4> quaternion_wxyz(const Mat3& m) {
  double w, x, y, z;
  const double trace = m(0, 0) + m(1, 1) + m(2, 2);
  if (trace > 0.0) {
    const double s = std::sqrt(trace + 1.0) * 2.0;
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  double norm = std::sqrt(w * w + x * x + y * y + z * z);
  w /= norm;
  x /= norm;
  y /= norm;
  z /= norm;
  if (w < 0.0) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  return {w, x, y, z};
}

std::array<double, 4> RigidTransform::quaternion_wxyz() const {
  return vpcnet::quaternion_wxyz(rotation);
}

Mat3 rotation_from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0.0))
    throw std::invalid_argument("rotation_from_quaternion: zero quaternion");
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Mat3 m;
  m(0, 0) = 1 - 2 * (y * y + z * z);
  m(0, 1) = 2 * (x * y - w * z);
  m(0, 2) = 2 * (x * z + w * y);
  m(1, 0) = 2 * (x * y + w * z);
  m(1, 1) = 1 - 2 * (x * x + z * z);
  m(1, 2) = 2 * (y * z - w * x);
  m(2, 0) = 2 * (x * z - w * y);
  m(2, 1) = 2 * (y * z + w * x);
  m(2, 2) = 1 - 2 * (x * x + y * y);
  return m;
}

Mat3 rotation_about_axis(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (!(n > 0.0))
    throw std::invalid_argument("rotation_about_axis: zero axis");
  const double half = angle_rad / 2.0;
  const double s = std::sin(half) / n;
  return rotation_from_quaternion(std::cos(half), axis.x * s, axis.y * s,
                                  axis.z * s);
}

namespace {

struct RigidFit {
  Mat3 rotation;
  Vec3 translation;
};

// Least-squares rigid fit mapping source[i] onto target[corr[i]].
RigidFit fit_rigid(const std::vector<Vec3>& source,
                   const std::vector<Vec3>& target,
                   const std::vector<std::size_t>& corr) {
  const std::size_t n = source.size();
  Vec3 sc, tc;
  for (std::size_t i = 0; i < n; ++i) {
    sc += source[i];
    tc += target[corr[i]];
  }
  sc = sc / static_cast<double>(n);
  tc = tc / static_cast<double>(n);

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 s = source[i] - sc;
    const Vec3 t = target[corr[i]] - tc;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) h(a, b) += s[a] * t[b];
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(1) > 1e-13 * std::max(sv(0), 1e-300)))
    throw std::runtime_error(
        "icp: degenerate correspondence set (rank-deficient)");

  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d r = v * u.transpose();
  if (r.determinant() < 0.0) {
    v.col(2) *= -1.0;
    r = v * u.transpose();
  }

  RigidFit fit;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) fit.rotation(a, b) = r(a, b);
  fit.translation = tc - fit.rotation * sc;
  return fit;
}

}  // namespace

IcpResult icp(const PointCloud& source, const PointCloud& target,
              const IcpOptions& options) {
  if (source.size() < 3 || target.size() < 3)
    throw std::invalid_argument("icp: need at least 3 points per cloud");

  SpatialIndex index(target.points);
  IcpResult result;
  result.low_confidence = source.size() < options.low_confidence_below;

  std::vector<std::size_t> corr(source.size());
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    double mse = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      const auto hit = index.nearest(result.transform.apply(source.points[i]));
      corr[i] = hit.index;
      mse += hit.squared_distance;
    }
    mse /= static_cast<double>(source.size());
    result.mean_squared_error = mse;
    result.iterations = iter;

    if (previous - mse < options.tolerance) {
      result.converged = true;
      break;
    }
    previous = mse;

    const RigidFit fit = fit_rigid(source.points, target.points, corr);
    result.transform.rotation = fit.rotation;
    result.transform.translation = fit.translation;
  }
  return result;
}

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double clamped_double_dot(const Mat3& r1, const Mat3& r2) {
  const auto q1 = quaternion_wxyz(r1);
  const auto q2 = quaternion_wxyz(r2);
  double dot = 0.0;
  for (int i = 0; i < 4; ++i) dot += q1[i] * q2[i];
  return std::clamp(2.0 * dot * dot - 1.0, -1.0, 1.0);
}
}  // namespace

double rotation_error_deg(const Mat3& r1, const Mat3& r2) {
  return 2.0 * std::acos(clamped_double_dot(r1, r2)) * kRadToDeg;
}

double rotation_geodesic_deg(const Mat3& r1, const Mat3& r2) {
  return std::acos(clamped_double_dot(r1, r2)) * kRadToDeg;
}

double translation_error(const Vec3& t1, const Vec3& t2) {
  return (t1 - t2).norm();
}

RegistrationSummary registration_experiment(
    const std::vector<RegistrationCase>& cases, const IcpOptions& options,
    RotationMetric metric) {
  if (cases.empty())
    throw std::invalid_argument("registration_experiment: no cases");

  RegistrationSummary summary;
  summary.rows.resize(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const RegistrationCase& c = cases[i];
    const IcpResult res = icp(c.source, c.target, options);
    RegistrationRow& row = summary.rows[i];
    row.id = c.id;
    row.rot_err = metric == RotationMetric::kDoubled
                      ? rotation_error_deg(c.ground_truth.rotation,
                                           res.transform.rotation)
                      : rotation_geodesic_deg(c.ground_truth.rotation,
                                              res.transform.rotation);
    row.trans_err = translation_error(c.ground_truth.translation,
                                      res.transform.translation);
    row.low_confidence = res.low_confidence;
  }
  for (const RegistrationRow& row : summary.rows) {
    summary.mean_rot_err += row.rot_err;
    summary.mean_trans_err += row.trans_err;
  }
  summary.mean_rot_err /= static_cast<double>(summary.rows.size());
  summary.mean_trans_err /= static_cast<double>(summary.rows.size());
  return summary;
}

}  // namespace vpcnet
