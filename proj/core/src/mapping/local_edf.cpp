#include "phtmpc/mapping/local_edf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phtmpc/mapping/edt.hpp"

namespace phtmpc {

std::vector<Index3> surface_keys(const ObjectEntry& object, double theta_zero) {
  std::vector<Index3> keys;
  const double h = object.submap.voxel_size();
  const Index3 origin = lattice_index(object.submap.origin(), h);
  const double band = theta_zero + 1e-9 * h;
  for (size_t i = 0; i < object.submap.size(); ++i) {
    if (std::abs(object.submap[i]) > band) continue;
    const Index3 c = object.submap.unravel(i);
    keys.push_back({origin[0] + c[0], origin[1] + c[1], origin[2] + c[2]});
  }
  return keys;
}

VoxelGrid edf_from_keys(const std::vector<Index3>& keys, const Region& region, double voxel_size,
                        double theta_cutoff) {
  VoxelGrid out = make_aligned_grid(region, voxel_size, theta_cutoff);
  if (keys.empty()) return out;
  const Index3 lo = lattice_index(out.origin(), voxel_size);
  const int pad = static_cast<int>(std::ceil(theta_cutoff / voxel_size)) + 1;
  const auto& d = out.dims();
  // Pad each side only as far as keys actually reach beyond the region;
  // keys farther than `pad` cells cannot affect the truncated field.
  Index3 kmin = keys.front(), kmax = keys.front();
  for (const auto& k : keys) {
    for (int a = 0; a < 3; ++a) {
      kmin[a] = std::min(kmin[a], k[a]);
      kmax[a] = std::max(kmax[a], k[a]);
    }
  }
  Index3 plo{}, pdims{};
  for (int a = 0; a < 3; ++a) {
    plo[a] = std::clamp(lo[a] - kmin[a], 0, pad);
    const int phi = std::clamp(kmax[a] - (lo[a] + d[a] - 1), 0, pad);
    pdims[a] = d[a] + plo[a] + phi;
  }
  VoxelGrid padded(Vec3::Zero(), voxel_size, pdims, 0.0);
  std::vector<std::uint8_t> mask(padded.size(), 0);
  bool any = false;
  for (const auto& k : keys) {
    const int i = k[0] - lo[0] + plo[0], j = k[1] - lo[1] + plo[1], l = k[2] - lo[2] + plo[2];
    if (!padded.in_range(i, j, l)) continue;
    mask[padded.linear(i, j, l)] = 1;
    any = true;
  }
  if (!any) return out;
  distance_field(mask, padded, theta_cutoff);
  for (int k = 0; k < d[2]; ++k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        out.at(i, j, k) = std::min(padded.at(i + plo[0], j + plo[1], k + plo[2]), theta_cutoff);
      }
    }
  }
  return out;
}

VoxelGrid build_local_edf(const ObjectLibrary& library, const Region& region, double theta_zero,
                          double theta_cutoff, double voxel_size) {
  if ((region.max - region.min).minCoeff() <= 0.0) throw std::invalid_argument("build_local_edf: empty extent");
  std::vector<Index3> keys;
  for (const auto& o : library.objects) {
    const auto k = surface_keys(o, theta_zero);
    keys.insert(keys.end(), k.begin(), k.end());
  }
  return edf_from_keys(keys, region, voxel_size, theta_cutoff);
}

VoxelGrid build_local_edf(const ObjectLibrary& library, const Vec3& center, const Vec3& half_extent,
                          double theta_zero, double theta_cutoff, double voxel_size) {
  return build_local_edf(library, Region{center - half_extent, center + half_extent}, theta_zero, theta_cutoff,
                         voxel_size);
}

void VoxelBaselineMap::update(const std::vector<ObservationSegment>& segments, double time) {
  for (const auto& seg : segments) {
    if (!has_data_) {
      cumulative_ = make_object(0, seg, cfg_, time);
      has_data_ = true;
    } else {
      cumulative_ = integrate_segment(cumulative_, seg, cfg_);
      cumulative_.last_seen = time;
      ++cumulative_.observations;
    }
  }
}

ObjectLibrary VoxelBaselineMap::as_library() const {
  ObjectLibrary lib;
  if (has_data_) lib.objects.push_back(cumulative_);
  return lib;
}

}  // namespace phtmpc
