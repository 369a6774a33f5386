#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "phtmpc/geometry/robot_model.hpp"
#include "phtmpc/geometry/voxel_grid.hpp"
#include "phtmpc/mapping/object_library.hpp"
#include "phtmpc/sim/world.hpp"

namespace oracle {

using phtmpc::Index3;
using phtmpc::Mat3;
using phtmpc::MatX;
using phtmpc::Vec3;
using phtmpc::VecX;

inline VecX central_gradient(const std::function<double(const VecX&)>& f, const VecX& q, double h = 1e-6) {
  VecX g(q.size());
  for (int i = 0; i < q.size(); ++i) {
    VecX a = q, b = q;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

// Central differences of a frame pose: rows 0-2 linear, rows 3-5 the world
// angular velocity recovered from R(q+h) R(q-h)^T.
inline MatX frame_jacobian_fd(const phtmpc::RobotModel& m, const VecX& q, int frame, double h = 1e-6) {
  MatX j(6, q.size());
  for (int i = 0; i < q.size(); ++i) {
    VecX a = q, b = q;
    a(i) += h;
    b(i) -= h;
    const auto pa = phtmpc::Kinematics(m, a).frame_pose(frame);
    const auto pb = phtmpc::Kinematics(m, b).frame_pose(frame);
    j.block<3, 1>(0, i) = (pa.position - pb.position) / (2.0 * h);
    const Mat3 dr = pa.orientation * pb.orientation.transpose();
    j.block<3, 1>(3, i) = phtmpc::so3_log(dr) / (2.0 * h);
  }
  return j;
}

inline double rel_err(const MatX& a, const MatX& b, double floor = 1e-3) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

inline VecX random_config(std::mt19937_64& rng, const phtmpc::RobotModel& m, double base_extent) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  VecX q(m.dof());
  q(0) = base_extent * (2.0 * U(rng) - 1.0);
  q(1) = base_extent * (2.0 * U(rng) - 1.0);
  q(2) = std::numbers::pi * (2.0 * U(rng) - 1.0);
  for (int i = 3; i < m.dof(); ++i) {
    const double lo = std::max(m.q_lower(i), -3.0), hi = std::min(m.q_upper(i), 3.0);
    q(i) = lo + (hi - lo) * (0.05 + 0.9 * U(rng));
  }
  return q;
}

// Lattice keys of every submap node within theta_zero, read straight off the grid.
inline std::vector<Index3> zero_band_keys(const phtmpc::ObjectEntry& o, double theta_zero) {
  std::vector<Index3> keys;
  const auto& g = o.submap;
  const auto& d = g.dims();
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        if (std::abs(g.at(i, j, k)) > theta_zero + 1e-9) continue;
        const Vec3 p = g.node_position(i, j, k) / g.voxel_size();
        keys.push_back({static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())),
                        static_cast<int>(std::lround(p.z()))});
      }
  return keys;
}

// Exhaustive pairwise nearest-key distance, truncated, at every node of `like`.
inline phtmpc::VoxelGrid brute_force_edf(const std::vector<Index3>& keys, const phtmpc::VoxelGrid& like,
                                         double cutoff) {
  phtmpc::VoxelGrid out = like;
  const double h = like.voxel_size();
  const auto& d = like.dims();
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        const Vec3 p = like.node_position(i, j, k) / h;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& key : keys) {
          const double dx = p.x() - key[0], dy = p.y() - key[1], dz = p.z() - key[2];
          best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        out.at(i, j, k) = std::min(h * std::sqrt(best), cutoff);
      }
  return out;
}

// Points sampled on the visible faces of a box (all but the bottom).
inline std::vector<Vec3> box_surface_points(const phtmpc::BoxObject& b, double spacing) {
  std::vector<Vec3> pts;
  const Vec3 half = 0.5 * b.size;
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  auto emit = [&](const Vec3& local) {
    pts.emplace_back(b.x + c * local.x() - s * local.y(), b.y + s * local.x() + c * local.y(),
                     b.z_min() + half.z() + local.z());
  };
  const int nx = std::max(2, static_cast<int>(std::ceil(b.size.x() / spacing)) + 1);
  const int ny = std::max(2, static_cast<int>(std::ceil(b.size.y() / spacing)) + 1);
  const int nz = std::max(2, static_cast<int>(std::ceil(b.size.z() / spacing)) + 1);
  auto lin = [](int i, int n, double half_extent) { return -half_extent + 2.0 * half_extent * i / (n - 1); };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) emit(Vec3(lin(i, nx, half.x()), lin(j, ny, half.y()), half.z()));
  for (int i = 0; i < nx; ++i)
    for (int k = 0; k < nz; ++k) {
      emit(Vec3(lin(i, nx, half.x()), half.y(), lin(k, nz, half.z())));
      emit(Vec3(lin(i, nx, half.x()), -half.y(), lin(k, nz, half.z())));
    }
  for (int j = 0; j < ny; ++j)
    for (int k = 0; k < nz; ++k) {
      emit(Vec3(half.x(), lin(j, ny, half.y()), lin(k, nz, half.z())));
      emit(Vec3(-half.x(), lin(j, ny, half.y()), lin(k, nz, half.z())));
    }
  return pts;
}

}  // namespace oracle
