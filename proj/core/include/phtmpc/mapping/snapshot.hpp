#pragma once

#include <cstdint>
#include <memory>
#include <mutex>

#include "phtmpc/geometry/voxel_grid.hpp"
#include "phtmpc/mapping/object_library.hpp"

namespace phtmpc {

struct MapSnapshot {
  std::uint64_t version = 0;
  double time = 0.0;
  std::shared_ptr<const ObjectLibrary> library;
  VoxelGrid edf;
  double theta_cutoff = 1.5;

  /// FNV-1a over the EDF payload and object ids, for immutability checks.
  std::uint64_t content_hash() const;
};

using SnapshotPtr = std::shared_ptr<const MapSnapshot>;

/// Single-slot latest-value channel. Writers replace the slot; readers get
/// the newest published value and never wait on the writer's work.
template <typename T>
class LatestValue {
 public:
  void publish(std::shared_ptr<const T> value) {
    std::lock_guard<std::mutex> lock(mutex_);
    value_ = std::move(value);
  }
  std::shared_ptr<const T> latest() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return value_;
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const T> value_;
};

}  // namespace phtmpc
