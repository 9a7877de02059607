#pragma once

#include "mgmw/motion.hpp"
#include "mgmw/skeleton.hpp"

#include <vector>

namespace mgmw {

/// Joint positions of every frame. Each output frame reproduces the
/// skeleton's reference bone lengths by construction.
Motion forward_kinematics(const Skeleton& skeleton, const Motion& angles);

/// Single-frame forward kinematics into `positions` (3 * joint_count).
void forward_kinematics_frame(const Skeleton& skeleton, const double* angles,
                              double* positions);

struct IkOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-13;
  double initial_damping = 1e-3;
  /// Stop once an accepted step lowers the squared residual by less than
  /// this fraction.
  double cost_tolerance = 1e-12;
};

/// Per-frame diagnostics of an inverse-kinematics fit.
struct IkReport {
  /// n x joint_count: distance between observed and fitted joint positions.
  Eigen::MatrixXd joint_residual;
  std::vector<double> frame_residual;  // max over joints
  std::vector<bool> converged;
  std::vector<bool> degenerate;  // a zero-length observed bone in the frame

  double max_residual() const;
};

struct IkResult {
  Motion angles;
  IkReport report;
};

/// Damped least-squares fit of joint angles to observed positions, one frame
/// at a time. Frame t starts from `reference` frame t when given, otherwise
/// from the previous frame's solution (zeros for the first frame), and every
/// angle is wrapped to the branch nearest its starting value. Positions are
/// taken relative to the observed root. Never throws on unreachable poses;
/// the residual report carries the misfit.
IkResult inverse_kinematics(const Skeleton& skeleton, const Motion& positions,
                            const Motion* reference = nullptr,
                            const IkOptions& options = {});

/// a_t = (x_{t+1} - 2 x_t + x_{t-1}) * rate^2 for interior frames; the first
/// and last frame copy their interior neighbour. Requires n >= 3.
Frames second_derivative(const Frames& frames, double frame_rate = 1.0);
Frames second_derivative(const Motion& motion);

/// n x bone_count Euclidean bone lengths of a position motion.
Frames bone_lengths(const Skeleton& skeleton, const Motion& positions);

struct ManifoldTolerances {
  double bone = 1e-3;   // relative
  double angle = 1e-6;  // radians
};

struct ManifoldViolation {
  enum class Kind { kBoneLength, kJointLimit };
  Eigen::Index frame;
  Kind kind;
  int index;  // bone index or angle dof
  double excess;
};

struct OnManifoldVerdict {
  bool on_manifold = true;
  std::vector<ManifoldViolation> violations;

  explicit operator bool() const { return on_manifold; }
};

/// Bone lengths within `tol.bone` of the reference and every angle within
/// its limits widened by `tol.angle`, in every frame. Position motions are
/// passed through inverse_kinematics (seeded with `reference_angles` when
/// given) to obtain angles.
OnManifoldVerdict check_on_manifold(const Skeleton& skeleton, const Motion& motion,
                                    const ManifoldTolerances& tol = {},
                                    const Motion* reference_angles = nullptr);

/// Throws DimensionError unless the motion's width matches the skeleton under
/// its representation.
void require_matches(const Skeleton& skeleton, const Motion& motion);

}  // namespace mgmw
