#include "phtmpc/geometry/robot_model.hpp"

#include <cmath>
#include <limits>

namespace phtmpc {

int RobotModel::frame_index(std::string_view name) const {
  for (size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].name == name) return static_cast<int>(i);
  }
  throw UnknownFrame(std::string(name));
}

bool RobotModel::has_frame(std::string_view name) const {
  for (const auto& f : frames) {
    if (f.name == name) return true;
  }
  return false;
}

int RobotModel::sphere_link(int sphere) const {
  return frames[static_cast<size_t>(frame_index(spheres[static_cast<size_t>(sphere)].frame))].link;
}

double RobotModel::base_radius() const {
  double r = 0.0;
  for (size_t i = 0; i < spheres.size(); ++i) {
    if (sphere_link(static_cast<int>(i)) != 0) continue;
    const auto& f = frames[static_cast<size_t>(frame_index(spheres[i].frame))];
    const Vec3 c = f.offset.transform(spheres[i].offset);
    r = std::max(r, c.head<2>().norm() + spheres[i].radius);
  }
  return r;
}

void RobotModel::validate() const {
  const int n = dof();
  auto check_size = [n](const VecX& v, const char* what) {
    if (v.size() != n) throw std::invalid_argument(std::string("robot model: ") + what + " has wrong size");
  };
  check_size(q_lower, "q_lower");
  check_size(q_upper, "q_upper");
  check_size(v_max, "v_max");
  check_size(a_max, "a_max");
  check_size(home, "home");
  for (int i = 0; i < n; ++i) {
    if (!(q_lower(i) <= q_upper(i))) throw std::invalid_argument("robot model: q_lower > q_upper");
    if (!(v_max(i) > 0.0) || !(a_max(i) > 0.0)) {
      throw std::invalid_argument("robot model: velocity/acceleration limits must be positive");
    }
  }
  for (const auto& j : joints) {
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("robot model: joint axis of " + j.name + " is not unit length");
    }
  }
  int base_spheres = 0;
  int arm_spheres = 0;
  for (const auto& f : frames) {
    if (f.link < 0 || f.link > static_cast<int>(joints.size())) {
      throw std::invalid_argument("robot model: frame " + f.name + " references a missing link");
    }
  }
  for (const auto& s : spheres) {
    if (!has_frame(s.frame)) {
      throw std::invalid_argument("robot model: collision sphere parent frame '" + s.frame + "' does not exist");
    }
    if (!(s.radius > 0.0)) throw std::invalid_argument("robot model: sphere radius must be positive");
    if (frames[static_cast<size_t>(frame_index(s.frame))].link == 0) {
      ++base_spheres;
    } else {
      ++arm_spheres;
    }
  }
  if (base_spheres < 1 || arm_spheres < 2) {
    throw std::invalid_argument("robot model: need at least one base sphere and two arm spheres");
  }
  if (!has_frame("base") || !has_frame("ee")) {
    throw std::invalid_argument("robot model: frames 'base' and 'ee' are required");
  }
}

RobotModel RobotModel::reference() {
  RobotModel m;
  const Vec3 lift_axis(0.0, -1.0, 0.0);  // positive angles raise the arm
  m.joints = {
      {"shoulder", Vec3(0.10, 0.0, 0.40), lift_axis},
      {"elbow", Vec3(0.40, 0.0, 0.0), lift_axis},
      {"wrist", Vec3(0.35, 0.0, 0.0), lift_axis},
  };
  m.frames = {
      {"base", 0, Pose3::identity()},
      {"upper_arm", 1, Pose3::identity()},
      {"forearm", 2, Pose3::identity()},
      {"wrist", 3, Pose3::identity()},
      {"ee", 3, Pose3{Vec3(0.15, 0.0, 0.0), Mat3::Identity()}},
  };
  m.spheres = {
      {"base", Vec3(0.12, 0.0, 0.20), 0.22},
      {"base", Vec3(-0.12, 0.0, 0.20), 0.22},
      {"upper_arm", Vec3(0.20, 0.0, 0.0), 0.07},
      {"forearm", Vec3(0.175, 0.0, 0.0), 0.06},
      {"ee", Vec3::Zero(), 0.06},
  };
  const double inf = std::numeric_limits<double>::infinity();
  m.q_lower.resize(6);
  m.q_upper.resize(6);
  m.v_max.resize(6);
  m.a_max.resize(6);
  m.home.resize(6);
  m.q_lower << -inf, -inf, -inf, -0.5, -2.6, -2.0;
  m.q_upper << inf, inf, inf, 2.0, 2.6, 2.0;
  m.v_max << 1.2, 1.2, 1.5, 1.5, 1.5, 2.0;
  m.a_max << 2.0, 2.0, 3.0, 3.0, 3.0, 4.0;
  m.home << 0.0, 0.0, 0.0, 1.4, -2.4, 0.6;
  return m;
}

Kinematics::Kinematics(const RobotModel& model, const VecX& q) : model_(&model) {
  if (q.size() != model.dof() || !q.allFinite()) {
    throw std::invalid_argument("kinematics: configuration has wrong size or is not finite");
  }
  links_.reserve(model.joints.size() + 1);
  links_.push_back(Pose3::planar(q(0), q(1), q(2)));
  for (size_t j = 0; j < model.joints.size(); ++j) {
    const auto& joint = model.joints[j];
    const Pose3& parent = links_.back();
    const double angle = q(RobotModel::kBaseDof + static_cast<int>(j));
    links_.push_back(Pose3{parent.transform(joint.origin), parent.orientation * so3_exp(joint.axis * angle)});
  }
}

Pose3 Kinematics::frame_pose(int frame) const {
  const auto& f = model_->frames.at(static_cast<size_t>(frame));
  return links_[static_cast<size_t>(f.link)] * f.offset;
}

Mat3X Kinematics::point_jacobian(int link, const Vec3& world_point) const {
  const int n = model_->dof();
  Mat3X j = Mat3X::Zero(3, n);
  j(0, 0) = 1.0;
  j(1, 1) = 1.0;
  const Vec3 from_base = world_point - links_[0].position;
  j.col(2) = Vec3::UnitZ().cross(from_base);
  for (int k = 1; k <= link; ++k) {
    const Pose3& lk = links_[static_cast<size_t>(k)];
    const Vec3 axis = lk.orientation * model_->joints[static_cast<size_t>(k - 1)].axis;
    j.col(RobotModel::kBaseDof + k - 1) = axis.cross(world_point - lk.position);
  }
  return j;
}

Mat6X Kinematics::frame_jacobian(int frame) const {
  const auto& f = model_->frames.at(static_cast<size_t>(frame));
  const Vec3 p = frame_pose(frame).position;
  Mat6X j = Mat6X::Zero(6, model_->dof());
  j.topRows<3>() = point_jacobian(f.link, p);
  j(5, 2) = 1.0;
  for (int k = 1; k <= f.link; ++k) {
    const Pose3& lk = links_[static_cast<size_t>(k)];
    j.block<3, 1>(3, RobotModel::kBaseDof + k - 1) = lk.orientation * model_->joints[static_cast<size_t>(k - 1)].axis;
  }
  return j;
}

Vec3 Kinematics::sphere_center(int sphere) const {
  const auto& s = model_->spheres.at(static_cast<size_t>(sphere));
  return frame_pose(model_->frame_index(s.frame)).transform(s.offset);
}

Mat3X Kinematics::sphere_jacobian(int sphere) const {
  return point_jacobian(model_->sphere_link(sphere), sphere_center(sphere));
}

Pose3 forward_kinematics(const RobotModel& model, const VecX& q, std::string_view frame) {
  const int id = model.frame_index(frame);
  return Kinematics(model, q).frame_pose(id);
}

Mat6X frame_jacobian(const RobotModel& model, const VecX& q, std::string_view frame) {
  const int id = model.frame_index(frame);
  return Kinematics(model, q).frame_jacobian(id);
}

}  // namespace phtmpc
