#include "mgmw/skeleton.hpp"

#include "mgmw/errors.hpp"

#include <cmath>
#include <string>

namespace mgmw {
namespace {

constexpr double kColinearTolerance = 1e-9;

bool all_colinear(const std::vector<int>& kids, const std::vector<Eigen::Vector3d>& offsets) {
  const Eigen::Vector3d& first = offsets[kids.front()];
  for (int c : kids) {
    if (first.cross(offsets[c]).norm() > kColinearTolerance) return false;
  }
  return true;
}

std::vector<std::vector<int>> children_of(const std::vector<int>& parents) {
  std::vector<std::vector<int>> kids(parents.size());
  for (std::size_t j = 1; j < parents.size(); ++j) kids[parents[j]].push_back(static_cast<int>(j));
  return kids;
}

// Two axes orthogonal to `u`, with the second equal to u x first.
std::pair<Eigen::Vector3d, Eigen::Vector3d> swing_axes(const Eigen::Vector3d& u) {
  Eigen::Index helper = 0;
  u.cwiseAbs().minCoeff(&helper);
  const Eigen::Vector3d e1 = u.cross(Eigen::Vector3d::Unit(helper)).normalized();
  return {e1, u.cross(e1).normalized()};
}

void check_tree(const SkeletonSpec& spec) {
  const auto joints = spec.parents.size();
  if (joints < 2) throw Error("skeleton needs at least two joints");
  if (spec.offsets.size() != joints || spec.lengths.size() != joints || spec.spinal.size() != joints) {
    throw DimensionError("skeleton per-joint arrays disagree in size");
  }
  if (spec.parents[0] != -1) throw Error("joint 0 must be the root (parent -1)");
  for (std::size_t j = 1; j < joints; ++j) {
    const int p = spec.parents[j];
    if (p < 0 || static_cast<std::size_t>(p) >= j) {
      throw Error("joint " + std::to_string(j) + " must have a parent with a smaller index");
    }
    if (!(spec.lengths[j] > 0.0) || !std::isfinite(spec.lengths[j])) {
      throw Error("bone length of joint " + std::to_string(j) + " must be positive");
    }
    if (std::abs(spec.offsets[j].norm() - 1.0) > 1e-9) {
      throw Error("offset of joint " + std::to_string(j) + " must be a unit vector");
    }
  }
}

}  // namespace

int implied_angle_dofs(const std::vector<int>& parents,
                       const std::vector<Eigen::Vector3d>& offsets) {
  const auto kids = children_of(parents);
  int total = 0;
  for (const auto& k : kids) {
    if (k.empty()) continue;
    total += all_colinear(k, offsets) ? 2 : 3;
  }
  return total;
}

Skeleton::Skeleton(SkeletonSpec spec) : spec_(std::move(spec)) {
  check_tree(spec_);
  children_ = children_of(spec_.parents);
  const int joints = joint_count();
  dof_begin_.assign(joints, 0);
  dof_count_.assign(joints, 0);
  for (int j = 0; j < joints; ++j) {
    dof_begin_[j] = static_cast<int>(dof_axes_.size());
    const auto& kids = children_[j];
    if (kids.empty()) continue;
    if (all_colinear(kids, spec_.offsets)) {
      auto [e1, e2] = swing_axes(spec_.offsets[kids.front()]);
      dof_axes_.push_back(e1);
      dof_axes_.push_back(e2);
      dof_count_[j] = 2;
    } else {
      dof_axes_.push_back(Eigen::Vector3d::UnitX());
      dof_axes_.push_back(Eigen::Vector3d::UnitY());
      dof_axes_.push_back(Eigen::Vector3d::UnitZ());
      dof_count_[j] = 3;
    }
    for (int k = 0; k < dof_count_[j]; ++k) dof_joint_.push_back(j);
  }
  const auto dofs = dof_axes_.size();
  if (spec_.limits_min.size() != dofs || spec_.limits_max.size() != dofs) {
    throw DimensionError("skeleton implies " + std::to_string(dofs) +
                         " angle dofs but limits have " + std::to_string(spec_.limits_min.size()) +
                         "/" + std::to_string(spec_.limits_max.size()) + " entries");
  }
  for (std::size_t d = 0; d < dofs; ++d) {
    if (!(spec_.limits_min[d] < spec_.limits_max[d])) {
      throw Error("joint limits of dof " + std::to_string(d) + " must satisfy min < max");
    }
  }
}

Eigen::Matrix3d Skeleton::local_rotation(int joint, const double* angles) const {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  const int begin = dof_begin_[joint];
  for (int k = 0; k < dof_count_[joint]; ++k) {
    r = r * Eigen::AngleAxisd(angles[begin + k], dof_axes_[begin + k]).toRotationMatrix();
  }
  return r;
}

Skeleton Skeleton::humanoid() {
  const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d down = -up;
  const Eigen::Vector3d left = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d right = -left;
  SkeletonSpec s;
  auto add = [&](int parent, Eigen::Vector3d dir, double len, bool spinal) {
    s.parents.push_back(parent);
    s.offsets.push_back(dir);
    s.lengths.push_back(len);
    s.spinal.push_back(spinal);
  };
  add(-1, Eigen::Vector3d::Zero(), 0.0, true);  // 0 pelvis
  add(0, up, 0.25, true);                       // 1 spine
  add(1, up, 0.25, true);                       // 2 chest
  add(2, up, 0.15, true);                       // 3 neck
  add(3, up, 0.12, true);                       // 4 head
  add(2, left, 0.18, false);                    // 5 left shoulder
  add(5, left, 0.28, false);                    // 6 left elbow
  add(6, left, 0.25, false);                    // 7 left wrist
  add(2, right, 0.18, false);                   // 8 right shoulder
  add(8, right, 0.28, false);                   // 9 right elbow
  add(9, right, 0.25, false);                   // 10 right wrist
  add(0, left, 0.10, false);                    // 11 left hip
  add(11, down, 0.42, false);                   // 12 left knee
  add(12, down, 0.40, false);                   // 13 left ankle
  add(0, right, 0.10, false);                   // 14 right hip
  add(14, down, 0.42, false);                   // 15 right knee
  add(15, down, 0.40, false);                   // 16 right ankle

  auto limits = [&](std::initializer_list<std::pair<double, double>> ranges) {
    for (auto [lo, hi] : ranges) {
      s.limits_min.push_back(lo);
      s.limits_max.push_back(hi);
    }
  };
  limits({{-0.5, 0.5}, {-0.8, 0.8}, {-0.5, 0.5}});   // pelvis
  limits({{-0.4, 0.4}, {-0.4, 0.4}});                // spine
  limits({{-0.4, 0.4}, {-0.5, 0.5}, {-0.4, 0.4}});   // chest
  limits({{-0.5, 0.5}, {-0.5, 0.5}});                // neck
  limits({{-1.2, 1.2}, {-1.0, 1.0}});                // left shoulder
  limits({{-0.3, 1.4}, {-1.0, 1.0}});                // left elbow
  limits({{-1.2, 1.2}, {-1.0, 1.0}});                // right shoulder
  limits({{-1.4, 0.3}, {-1.0, 1.0}});                // right elbow
  limits({{-1.0, 1.0}, {-0.6, 0.6}});                // left hip
  limits({{-0.1, 1.3}, {-0.3, 0.3}});                // left knee
  limits({{-1.0, 1.0}, {-0.6, 0.6}});                // right hip
  limits({{-0.1, 1.3}, {-0.3, 0.3}});                // right knee
  return Skeleton(std::move(s));
}

}  // namespace mgmw
