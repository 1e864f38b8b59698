#include "vpcnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace vpcnet {

namespace {

std::vector<Vec3> rows_as_points(std::span<const double> data, std::size_t n) {
  std::vector<Vec3> pts(n);
  for (std::size_t i = 0; i < n; ++i)
    pts[i] = {data[3 * i], data[3 * i + 1], data[3 * i + 2]};
  return pts;
}

void require_points_tensor(const Tensor& t, const char* what) {
  if (!t.defined() || t.rank() != 2 || t.shape()[1] != 3 || t.shape()[0] == 0)
    throw std::invalid_argument(std::string(what) +
                                ": expected a nonempty n x 3 tensor");
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("chamfer: empty cloud");
  SpatialIndex ia(a.points);
  SpatialIndex ib(b.points);
  double fwd = 0.0;
  for (const Vec3& p : a.points) fwd += ib.nearest(p).squared_distance;
  fwd /= static_cast<double>(a.size());
  double bwd = 0.0;
  for (const Vec3& p : b.points) bwd += ia.nearest(p).squared_distance;
  bwd /= static_cast<double>(b.size());
  return fwd + bwd;
}

Tensor tensor_from_cloud(const PointCloud& cloud) {
  if (cloud.empty()) throw std::invalid_argument("tensor_from_cloud: empty");
  std::vector<double> data;
  data.reserve(cloud.size() * 3);
  for (const Vec3& p : cloud.points) {
    data.push_back(p.x);
    data.push_back(p.y);
    data.push_back(p.z);
  }
  return Tensor::from_data({cloud.size(), 3}, std::move(data));
}

PointCloud cloud_from_tensor(const Tensor& t, PointTag tag) {
  require_points_tensor(t, "cloud_from_tensor");
  PointCloud cloud;
  const std::size_t n = t.shape()[0];
  cloud.points = rows_as_points(t.data(), n);
  cloud.tags.assign(n, tag);
  return cloud;
}

Tensor chamfer_loss(const Tensor& a, const Tensor& b) {
  require_points_tensor(a, "chamfer_loss");
  require_points_tensor(b, "chamfer_loss");
  const std::size_t n = a.shape()[0];
  const std::size_t m = b.shape()[0];
  std::vector<Vec3> pa = rows_as_points(a.data(), n);
  std::vector<Vec3> pb = rows_as_points(b.data(), m);

  SpatialIndex ia(pa);
  SpatialIndex ib(pb);
  auto nn_ab = std::make_shared<std::vector<std::size_t>>(n);
  auto nn_ba = std::make_shared<std::vector<std::size_t>>(m);
  double fwd = 0.0, bwd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto hit = ib.nearest(pa[i]);
    (*nn_ab)[i] = hit.index;
    fwd += hit.squared_distance;
  }
  for (std::size_t j = 0; j < m; ++j) {
    auto hit = ia.nearest(pb[j]);
    (*nn_ba)[j] = hit.index;
    bwd += hit.squared_distance;
  }
  const double value =
      fwd / static_cast<double>(n) + bwd / static_cast<double>(m);

  return detail::make_custom_op(
      "chamfer_loss", {1}, {value}, {a, b},
      [n, m, nn_ab, nn_ba](const detail::BackwardContext& ctx) {
        const double g = ctx.out_grad()[0];
        auto da = ctx.parent_data(0);
        auto db = ctx.parent_data(1);
        const double wa = 2.0 * g / static_cast<double>(n);
        const double wb = 2.0 * g / static_cast<double>(m);
        if (ctx.parent_tracked(0)) {
          auto ga = ctx.parent_grad(0);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (*nn_ab)[i];
            for (int k = 0; k < 3; ++k)
              ga[3 * i + k] += wa * (da[3 * i + k] - db[3 * j + k]);
          }
          for (std::size_t j = 0; j < m; ++j) {
            const std::size_t i = (*nn_ba)[j];
            for (int k = 0; k < 3; ++k)
              ga[3 * i + k] += wb * (da[3 * i + k] - db[3 * j + k]);
          }
        }
        if (ctx.parent_tracked(1)) {
          auto gb = ctx.parent_grad(1);
          for (std::size_t j = 0; j < m; ++j) {
            const std::size_t i = (*nn_ba)[j];
            for (int k = 0; k < 3; ++k)
              gb[3 * j + k] += wb * (db[3 * j + k] - da[3 * i + k]);
          }
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (*nn_ab)[i];
            for (int k = 0; k < 3; ++k)
              gb[3 * j + k] += wa * (db[3 * j + k] - da[3 * i + k]);
          }
        }
      });
}

namespace {

std::vector<double> cost_matrix(const PointCloud& a, const PointCloud& b) {
  const std::size_t n = a.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double c = (a.points[i] - b.points[j]).norm();
      // An infinite entry would stall the matching search, so fail loudly.
      if (!std::isfinite(c))
        throw std::runtime_error("emd: non-finite point distance");
      cost[i * n + j] = c;
    }
  return cost;
}

Matching finish_matching(const PointCloud& a, const PointCloud& b,
                         std::vector<std::size_t> assignment) {
  Matching m;
  m.total_cost = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    m.total_cost += (a.points[i] - b.points[assignment[i]]).norm();
  m.mean_cost = m.total_cost / static_cast<double>(assignment.size());
  m.assignment = std::move(assignment);
  return m;
}

}  // namespace

Matching emd_exact(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("emd_exact: cloud sizes differ");
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("emd_exact: empty clouds");
  if (n > 512)
    throw std::invalid_argument(
        "emd_exact: exact matching is limited to 512 points");

  const std::vector<double> cost = cost_matrix(a, b);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Shortest augmenting path with potentials; column 0 is a virtual slot.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return finish_matching(a, b, std::move(assignment));
}

Matching emd_approx(const PointCloud& a, const PointCloud& b,
                    const AuctionConfig& config) {
  if (a.size() != b.size())
    throw std::invalid_argument("emd_approx: cloud sizes differ");
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("emd_approx: empty clouds");
  if (config.relative_gap <= 0.0)
    throw std::invalid_argument("emd_approx: relative gap must be positive");

  // Dense matrix up to a memory cap, otherwise recompute per bid.
  const bool dense = n <= 4096;
  std::vector<double> cost;
  if (dense) cost = cost_matrix(a, b);
  auto cost_at = [&](std::size_t i, std::size_t j) {
    return dense ? cost[i * n + j] : (a.points[i] - b.points[j]).norm();
  };

  double max_cost = 0.0;
  if (dense) {
    for (double c : cost) max_cost = std::max(max_cost, c);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double c = cost_at(i, j);
        if (!std::isfinite(c))
          throw std::runtime_error("emd: non-finite point distance");
        max_cost = std::max(max_cost, c);
      }
  }

  const double delta = config.relative_gap;
  const double eps_floor = std::max(max_cost * 1e-14, 1e-300);
  double eps = std::max(max_cost / 4.0, eps_floor);

  std::vector<double> price(n, 0.0);
  std::vector<std::ptrdiff_t> owner(n, -1);       // object -> person
  std::vector<std::ptrdiff_t> assigned(n, -1);    // person -> object

  for (std::size_t round = 0; round < config.max_rounds; ++round) {
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assigned.begin(), assigned.end(), -1);
    std::vector<std::size_t> queue(n);
    for (std::size_t i = 0; i < n; ++i) queue[i] = n - 1 - i;

    while (!queue.empty()) {
      const std::size_t person = queue.back();
      queue.pop_back();

      double best = -std::numeric_limits<double>::infinity();
      double second = -std::numeric_limits<double>::infinity();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double value = -cost_at(person, j) - price[j];
        if (value > best) {
          second = best;
          best = value;
          best_j = j;
        } else if (value > second) {
          second = value;
        }
      }
      if (!std::isfinite(second)) second = best;

      price[best_j] += (best - second) + eps;
      if (owner[best_j] >= 0) {
        assigned[owner[best_j]] = -1;
        queue.push_back(static_cast<std::size_t>(owner[best_j]));
      }
      owner[best_j] = static_cast<std::ptrdiff_t>(person);
      assigned[person] = static_cast<std::ptrdiff_t>(best_j);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      total += cost_at(i, static_cast<std::size_t>(assigned[i]));

    // The assignment is within n*eps of optimal; certify the relative bound
    // against the implied lower bound before accepting.
    const double certified =
        delta * total / (static_cast<double>(n) * (1.0 + delta));
    if (eps <= certified || eps <= eps_floor) {
      std::vector<std::size_t> assignment(n);
      for (std::size_t i = 0; i < n; ++i)
        assignment[i] = static_cast<std::size_t>(assigned[i]);
      return finish_matching(a, b, std::move(assignment));
    }
    eps = std::max(eps / 5.0, eps_floor);
  }
  throw std::runtime_error("emd_approx: auction did not converge");
}

Tensor emd_loss(const Tensor& a, const PointCloud& b, EmdSolver solver,
                const AuctionConfig& config) {
  require_points_tensor(a, "emd_loss");
  const std::size_t n = a.shape()[0];
  if (n != b.size())
    throw std::invalid_argument("emd_loss: prediction and target sizes differ");

  PointCloud pa;
  pa.points = rows_as_points(a.data(), n);
  Matching match = solver == EmdSolver::kExact ? emd_exact(pa, b)
                                               : emd_approx(pa, b, config);

  auto assignment =
      std::make_shared<std::vector<std::size_t>>(std::move(match.assignment));
  auto target = std::make_shared<std::vector<Vec3>>(b.points);
  return detail::make_custom_op(
      "emd_loss", {1}, {match.mean_cost}, {a},
      [n, assignment, target](const detail::BackwardContext& ctx) {
        if (!ctx.parent_tracked(0)) return;
        const double g = ctx.out_grad()[0] / static_cast<double>(n);
        auto da = ctx.parent_data(0);
        auto ga = ctx.parent_grad(0);
        for (std::size_t i = 0; i < n; ++i) {
          const Vec3& t = (*target)[(*assignment)[i]];
          const Vec3 diff{da[3 * i] - t.x, da[3 * i + 1] - t.y,
                          da[3 * i + 2] - t.z};
          const double dist = diff.norm();
          if (dist < 1e-18) continue;
          const double w = g / dist;
          ga[3 * i] += w * diff.x;
          ga[3 * i + 1] += w * diff.y;
          ga[3 * i + 2] += w * diff.z;
        }
      });
}

namespace {

struct CellHash {
  std::size_t operator()(const std::array<std::int64_t, 3>& c) const {
    std::uint64_t h = mix_seed(static_cast<std::uint64_t>(c[0]), 11);
    h = mix_seed(h ^ static_cast<std::uint64_t>(c[1]), 13);
    h = mix_seed(h ^ static_cast<std::uint64_t>(c[2]), 17);
    return static_cast<std::size_t>(h);
  }
};

std::size_t occupied_cells(const PointCloud& cloud, const Vec3& anchor,
                           double voxel) {
  std::unordered_set<std::array<std::int64_t, 3>, CellHash> cells;
  cells.reserve(cloud.size());
  for (const Vec3& p : cloud.points) {
    cells.insert({static_cast<std::int64_t>(std::floor((p.x - anchor.x) / voxel)),
                  static_cast<std::int64_t>(std::floor((p.y - anchor.y) / voxel)),
                  static_cast<std::int64_t>(std::floor((p.z - anchor.z) / voxel))});
  }
  return cells.size();
}

}  // namespace

double overlap_ratio(const PointCloud& partial, const PointCloud& complete,
                     double voxel) {
  if (partial.empty() || complete.empty())
    throw std::invalid_argument("overlap_ratio: empty cloud");
  if (!(voxel > 0.0))
    throw std::invalid_argument("overlap_ratio: voxel size must be positive");
  const Vec3 anchor = complete.bounds().min;
  const double sp = static_cast<double>(occupied_cells(partial, anchor, voxel));
  const double sc = static_cast<double>(occupied_cells(complete, anchor, voxel));
  return sp / sc;
}

double default_overlap_voxel(const PointCloud& complete) {
  const double diag = complete.bounds().diagonal();
  if (!(diag > 0.0))
    throw std::invalid_argument("default_overlap_voxel: degenerate bounds");
  return diag / 32.0;
}

const char* MetricReport::csv_header() {
  return "instance_id,cd,emd,overlap_ratio,rot_err_deg,trans_err";
}

std::string MetricReport::csv_row() const {
  return instance_id + "," + format_value(cd) + "," + format_value(emd) + "," +
         format_value(overlap) + "," + format_value(rot_err_deg) + "," +
         format_value(trans_err);
}

}  // namespace vpcnet
