#include "phtmpc/mapping/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

namespace phtmpc {

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(static_cast<size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[static_cast<size_t>(a)] = b;
  }
};

std::int64_t cell_key(int x, int y, int z) {
  return (static_cast<std::int64_t>(x) & 0x1FFFFF) | ((static_cast<std::int64_t>(y) & 0x1FFFFF) << 21) |
         ((static_cast<std::int64_t>(z) & 0x1FFFFF) << 42);
}

}  // namespace

ObservationSegment make_segment(std::vector<Vec3> points) {
  ObservationSegment seg;
  seg.points = std::move(points);
  if (seg.points.empty()) return seg;
  seg.lower = seg.upper = seg.points.front();
  Vec3 sum = Vec3::Zero();
  for (const auto& p : seg.points) {
    sum += p;
    seg.lower = seg.lower.cwiseMin(p);
    seg.upper = seg.upper.cwiseMax(p);
  }
  seg.centroid = sum / static_cast<double>(seg.points.size());
  return seg;
}

std::vector<ObservationSegment> segment_cloud(const std::vector<Vec3>& points, const SegmentationConfig& cfg) {
  std::vector<Vec3> kept;
  kept.reserve(points.size());
  for (const auto& p : points) {
    if (p.z() > cfg.ground_height) kept.push_back(p);
  }
  const int n = static_cast<int>(kept.size());
  if (n == 0) return {};

  const double r = cfg.cluster_radius;
  const double r2 = r * r;
  std::unordered_map<std::int64_t, std::vector<int>> cells;
  std::vector<std::array<int, 3>> cell_of(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& p = kept[static_cast<size_t>(i)];
    std::array<int, 3> c{static_cast<int>(std::floor(p.x() / r)), static_cast<int>(std::floor(p.y() / r)),
                         static_cast<int>(std::floor(p.z() / r))};
    cell_of[static_cast<size_t>(i)] = c;
    cells[cell_key(c[0], c[1], c[2])].push_back(i);
  }

  DisjointSet ds(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = cell_of[static_cast<size_t>(i)];
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          auto it = cells.find(cell_key(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == cells.end()) continue;
          for (int j : it->second) {
            if (j <= i) continue;
            if ((kept[static_cast<size_t>(i)] - kept[static_cast<size_t>(j)]).squaredNorm() <= r2) ds.unite(i, j);
          }
        }
      }
    }
  }

  // Roots are the smallest index of each cluster, so iterating i in order
  // yields clusters sorted by first index.
  std::vector<int> slot(static_cast<size_t>(n), -1);
  std::vector<std::vector<Vec3>> clusters;
  for (int i = 0; i < n; ++i) {
    const int root = ds.find(i);
    if (slot[static_cast<size_t>(root)] < 0) {
      slot[static_cast<size_t>(root)] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<size_t>(slot[static_cast<size_t>(root)])].push_back(kept[static_cast<size_t>(i)]);
  }
  std::vector<ObservationSegment> out;
  for (auto& c : clusters) {
    if (static_cast<int>(c.size()) >= cfg.min_points) out.push_back(make_segment(std::move(c)));
  }
  return out;
}

}  // namespace phtmpc
