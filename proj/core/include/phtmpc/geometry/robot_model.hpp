#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phtmpc/geometry/pose.hpp"
#include "phtmpc/geometry/types.hpp"

namespace phtmpc {

class UnknownFrame : public std::out_of_range {
 public:
  explicit UnknownFrame(const std::string& name) : std::out_of_range("unknown frame: " + name) {}
};

/// Revolute arm joint. `origin` is expressed in the parent link frame and
/// `axis` is a unit vector in the same frame.
struct ArmJoint {
  std::string name;
  Vec3 origin = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
};

/// Frame rigidly attached to a link (link 0 is the base).
struct NamedFrame {
  std::string name;
  int link = 0;
  Pose3 offset;
};

struct CollisionSphere {
  std::string frame;
  Vec3 offset = Vec3::Zero();
  double radius = 0.1;
};

/// Mobile manipulator: omnidirectional planar base (x, y, yaw) followed by a
/// serial chain of revolute joints. Generalized coordinates and velocities
/// share the same layout [x, y, yaw, arm...]; base velocities are world-frame.
struct RobotModel {
  static constexpr int kBaseDof = 3;

  std::vector<ArmJoint> joints;
  std::vector<NamedFrame> frames;
  std::vector<CollisionSphere> spheres;

  VecX q_lower;
  VecX q_upper;
  VecX v_max;
  VecX a_max;
  VecX home;

  /// Base circumscribed radius in the x-y plane (max over base spheres).
  double base_radius() const;

  int dof() const { return kBaseDof + static_cast<int>(joints.size()); }
  int frame_index(std::string_view name) const;
  int sphere_link(int sphere) const;
  bool has_frame(std::string_view name) const;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  /// Desk-scale 6-DoF reference platform: planar base plus a 3R arm moving in
  /// the vertical plane that contains the base heading.
  static RobotModel reference();
};

/// World poses of every link for one configuration. Cheap to query repeatedly.
class Kinematics {
 public:
  Kinematics(const RobotModel& model, const VecX& q);

  const RobotModel& model() const { return *model_; }
  const Pose3& link_pose(int link) const { return links_[static_cast<size_t>(link)]; }

  Pose3 frame_pose(int frame) const;
  Pose3 frame_pose(std::string_view name) const { return frame_pose(model_->frame_index(name)); }

  /// 6 x n Jacobian [linear; angular], both in world coordinates.
  Mat6X frame_jacobian(int frame) const;

  Vec3 sphere_center(int sphere) const;
  Mat3X sphere_jacobian(int sphere) const;

  /// Linear-velocity Jacobian of a world point rigidly attached to `link`.
  Mat3X point_jacobian(int link, const Vec3& world_point) const;

 private:
  const RobotModel* model_;
  std::vector<Pose3> links_;
};

/// x = [q; v]. Base entries of v are world-frame rates.
struct RobotState {
  VecX q;
  VecX v;
};

Pose3 forward_kinematics(const RobotModel& model, const VecX& q, std::string_view frame);
Mat6X frame_jacobian(const RobotModel& model, const VecX& q, std::string_view frame);

}  // namespace phtmpc
