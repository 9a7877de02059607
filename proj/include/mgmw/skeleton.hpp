#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mgmw {

/// Serialized form of a skeleton. Per-joint arrays are indexed by joint; the
/// root (joint 0) carries a zero offset and zero length. Limits are indexed
/// by angle degree of freedom.
struct SkeletonSpec {
  std::vector<int> parents;
  std::vector<Eigen::Vector3d> offsets;
  std::vector<double> lengths;
  std::vector<double> limits_min;
  std::vector<double> limits_max;
  std::vector<bool> spinal;

  bool operator==(const SkeletonSpec&) const = default;
};

/// Kinematic tree with fixed bone lengths and box joint limits.
///
/// Joints are stored in topological order: joint 0 is the root and every
/// other joint's parent has a smaller index. The root is pinned at the
/// origin. Rotational degrees of freedom are derived from the tree:
///
///  - a joint whose child bones span more than one direction is a ball joint
///    with three intrinsic Euler angles about local X, then Y, then Z;
///  - a joint whose children all lie on one line gets two swing angles about
///    axes orthogonal to that line (twist about the bone cannot be observed
///    from joint positions and is omitted);
///  - leaf joints carry no angles.
///
/// Each joint's local rotation is the ordered product of its axis rotations;
/// a child's position is its parent's position plus the parent's global
/// rotation applied to length * offset.
class Skeleton {
 public:
  explicit Skeleton(SkeletonSpec spec);

  /// 17-joint humanoid used for synthetic data.
  static Skeleton humanoid();

  const SkeletonSpec& spec() const { return spec_; }

  int joint_count() const { return static_cast<int>(spec_.parents.size()); }
  int bone_count() const { return joint_count() - 1; }
  int angle_dof_count() const { return static_cast<int>(dof_axes_.size()); }
  int position_dof_count() const { return 3 * joint_count(); }

  int parent(int joint) const { return spec_.parents[joint]; }
  const std::vector<int>& children(int joint) const { return children_[joint]; }
  const Eigen::Vector3d& offset(int joint) const { return spec_.offsets[joint]; }
  double length(int joint) const { return spec_.lengths[joint]; }
  bool spinal(int joint) const { return spec_.spinal[joint]; }

  /// Child joint of bone `bone` (bones are numbered by child joint - 1).
  static int bone_joint(int bone) { return bone + 1; }

  int dof_begin(int joint) const { return dof_begin_[joint]; }
  int dof_count(int joint) const { return dof_count_[joint]; }
  int dof_joint(int dof) const { return dof_joint_[dof]; }
  const Eigen::Vector3d& dof_axis(int dof) const { return dof_axes_[dof]; }
  double limit_min(int dof) const { return spec_.limits_min[dof]; }
  double limit_max(int dof) const { return spec_.limits_max[dof]; }

  /// Local rotation of `joint` given the full angle vector of one frame.
  Eigen::Matrix3d local_rotation(int joint, const double* angles) const;

  bool operator==(const Skeleton& other) const { return spec_ == other.spec_; }

 private:
  SkeletonSpec spec_;
  std::vector<std::vector<int>> children_;
  std::vector<int> dof_begin_;
  std::vector<int> dof_count_;
  std::vector<int> dof_joint_;
  std::vector<Eigen::Vector3d> dof_axes_;
};

/// Number of angle degrees of freedom the tree implies for a joint layout,
/// before limits are known. Used when building a spec programmatically.
int implied_angle_dofs(const std::vector<int>& parents,
                       const std::vector<Eigen::Vector3d>& offsets);

}  // namespace mgmw
