#include "mgmw/kinematics.hpp"

#include "mgmw/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mgmw {
namespace {

constexpr double kDegenerateBone = 1e-12;

struct Pose {
  std::vector<Eigen::Matrix3d> global;
  std::vector<Eigen::Vector3d> position;
};

void pose_frame(const Skeleton& skeleton, const double* angles, Pose& pose) {
  const int joints = skeleton.joint_count();
  pose.global.resize(joints);
  pose.position.resize(joints);
  pose.global[0] = skeleton.local_rotation(0, angles);
  pose.position[0].setZero();
  for (int j = 1; j < joints; ++j) {
    const int p = skeleton.parent(j);
    pose.position[j] = pose.position[p] + pose.global[p] * (skeleton.length(j) * skeleton.offset(j));
    pose.global[j] = pose.global[p] * skeleton.local_rotation(j, angles);
  }
}

// subtree[j] lists every strict descendant of j.
std::vector<std::vector<int>> descendants(const Skeleton& skeleton) {
  const int joints = skeleton.joint_count();
  std::vector<std::vector<int>> subtree(joints);
  for (int d = 1; d < joints; ++d) {
    for (int a = skeleton.parent(d); a >= 0; a = skeleton.parent(a)) subtree[a].push_back(d);
  }
  return subtree;
}

class FrameSolver {
 public:
  FrameSolver(const Skeleton& skeleton, const IkOptions& options)
      : skeleton_(skeleton), options_(options), subtree_(descendants(skeleton)),
        rows_(skeleton.position_dof_count()), cols_(skeleton.angle_dof_count()),
        jac_(rows_, cols_) {}

  // Fits angles in place; returns whether a tolerance (not the iteration cap)
  // ended the search.
  bool solve(const Eigen::VectorXd& target, Eigen::VectorXd& theta) {
    Eigen::VectorXd r = residual(theta, target);
    double cost = r.squaredNorm();
    double damping = options_.initial_damping;
    for (int it = 0; it < options_.max_iterations; ++it) {
      if (cost < 1e-30) return true;
      jacobian(theta);
      const Eigen::MatrixXd normal = jac_.transpose() * jac_;
      const Eigen::VectorXd grad = jac_.transpose() * r;
      if (grad.lpNorm<Eigen::Infinity>() < 1e-16) return true;
      Eigen::VectorXd step;
      bool accepted = false;
      while (damping < 1e12) {
        Eigen::MatrixXd lhs = normal;
        lhs.diagonal().array() += damping;
        step = lhs.ldlt().solve(-grad);
        Eigen::VectorXd trial = theta + step;
        Eigen::VectorXd rt = residual(trial, target);
        const double ct = rt.squaredNorm();
        if (ct < cost) {
          const bool stalled = cost - ct <= options_.cost_tolerance * cost;
          theta = std::move(trial);
          r = std::move(rt);
          cost = ct;
          if (stalled) return true;
          damping = std::max(damping * 0.3, 1e-15);
          accepted = true;
          break;
        }
        damping *= 4.0;
      }
      if (!accepted) return true;  // no descent direction left
      if (step.lpNorm<Eigen::Infinity>() < options_.step_tolerance) return true;
    }
    return false;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& theta, const Eigen::VectorXd& target) {
    pose_frame(skeleton_, theta.data(), pose_);
    Eigen::VectorXd r(rows_);
    for (int j = 0; j < skeleton_.joint_count(); ++j) {
      r.segment<3>(3 * j) = pose_.position[j] - target.segment<3>(3 * j);
    }
    return r;
  }

 private:
  void jacobian(const Eigen::VectorXd& theta) {
    pose_frame(skeleton_, theta.data(), pose_);
    jac_.setZero();
    for (int j = 0; j < skeleton_.joint_count(); ++j) {
      const int begin = skeleton_.dof_begin(j);
      const int count = skeleton_.dof_count(j);
      if (count == 0) continue;
      Eigen::Matrix3d frame = j == 0 ? Eigen::Matrix3d::Identity() : pose_.global[skeleton_.parent(j)];
      for (int k = 0; k < count; ++k) {
        const int dof = begin + k;
        const Eigen::Vector3d axis = frame * skeleton_.dof_axis(dof);
        for (int d : subtree_[j]) {
          jac_.block<3, 1>(3 * d, dof) = axis.cross(pose_.position[d] - pose_.position[j]);
        }
        frame = frame * Eigen::AngleAxisd(theta[dof], skeleton_.dof_axis(dof)).toRotationMatrix();
      }
    }
  }

  const Skeleton& skeleton_;
  IkOptions options_;
  std::vector<std::vector<int>> subtree_;
  Eigen::Index rows_;
  Eigen::Index cols_;
  Eigen::MatrixXd jac_;
  Pose pose_;
};

void check_limits(const Skeleton& skeleton, const Frames& angles, double tol,
                  OnManifoldVerdict& verdict) {
  for (Eigen::Index t = 0; t < angles.rows(); ++t) {
    for (int d = 0; d < skeleton.angle_dof_count(); ++d) {
      const double v = angles(t, d);
      const double below = skeleton.limit_min(d) - tol - v;
      const double above = v - skeleton.limit_max(d) - tol;
      if (below > 0.0 || above > 0.0) {
        verdict.on_manifold = false;
        verdict.violations.push_back({t, ManifoldViolation::Kind::kJointLimit, d, std::max(below, above)});
      }
    }
  }
}

}  // namespace

void require_matches(const Skeleton& skeleton, const Motion& motion) {
  const int expected = motion.representation == Representation::kAngle
                           ? skeleton.angle_dof_count()
                           : skeleton.position_dof_count();
  if (motion.dof_count() != expected) {
    throw DimensionError("motion has " + std::to_string(motion.dof_count()) + " dofs, skeleton expects " +
                         std::to_string(expected) + " in " +
                         std::string(to_string(motion.representation)) + " space");
  }
}

void forward_kinematics_frame(const Skeleton& skeleton, const double* angles, double* positions) {
  Pose pose;
  pose_frame(skeleton, angles, pose);
  for (int j = 0; j < skeleton.joint_count(); ++j) {
    Eigen::Map<Eigen::Vector3d>(positions + 3 * j) = pose.position[j];
  }
}

Motion forward_kinematics(const Skeleton& skeleton, const Motion& angles) {
  if (angles.representation != Representation::kAngle) {
    throw DimensionError("forward_kinematics expects an angle-space motion");
  }
  require_matches(skeleton, angles);
  Motion out{Representation::kPosition, Frames(angles.frame_count(), skeleton.position_dof_count()),
             angles.frame_rate};
  Pose pose;
  for (Eigen::Index t = 0; t < angles.frame_count(); ++t) {
    pose_frame(skeleton, angles.frames.row(t).data(), pose);
    for (int j = 0; j < skeleton.joint_count(); ++j) {
      out.frames.row(t).segment<3>(3 * j) = pose.position[j].transpose();
    }
  }
  return out;
}

double IkReport::max_residual() const {
  return frame_residual.empty() ? 0.0 : *std::max_element(frame_residual.begin(), frame_residual.end());
}

IkResult inverse_kinematics(const Skeleton& skeleton, const Motion& positions,
                            const Motion* reference, const IkOptions& options) {
  if (positions.representation != Representation::kPosition) {
    throw DimensionError("inverse_kinematics expects a position-space motion");
  }
  require_matches(skeleton, positions);
  const Eigen::Index n = positions.frame_count();
  const int dofs = skeleton.angle_dof_count();
  if (reference != nullptr) {
    if (reference->representation != Representation::kAngle || reference->frame_count() != n) {
      throw DimensionError("IK reference must be an angle motion with matching frame count");
    }
    require_matches(skeleton, *reference);
  }

  IkResult result;
  result.angles = Motion{Representation::kAngle, Frames(n, dofs), positions.frame_rate};
  auto& report = result.report;
  report.joint_residual.resize(n, skeleton.joint_count());
  report.frame_residual.assign(n, 0.0);
  report.converged.assign(n, false);
  report.degenerate.assign(n, false);

  FrameSolver solver(skeleton, options);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dofs);
  Eigen::VectorXd target(skeleton.position_dof_count());
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto row = positions.frames.row(t);
    const Eigen::Vector3d root = row.segment<3>(0).transpose();
    for (int j = 0; j < skeleton.joint_count(); ++j) {
      target.segment<3>(3 * j) = row.segment<3>(3 * j).transpose() - root;
      if (j > 0) {
        const int p = skeleton.parent(j);
        if ((target.segment<3>(3 * j) - target.segment<3>(3 * p)).norm() < kDegenerateBone) {
          report.degenerate[t] = true;
        }
      }
    }
    if (reference != nullptr) theta = reference->frames.row(t).transpose();
    const Eigen::VectorXd start = theta;
    report.converged[t] = solver.solve(target, theta);
    for (int d = 0; d < dofs; ++d) {
      theta[d] = start[d] + std::remainder(theta[d] - start[d], 2.0 * std::numbers::pi);
    }
    const Eigen::VectorXd r = solver.residual(theta, target);
    double worst = 0.0;
    for (int j = 0; j < skeleton.joint_count(); ++j) {
      report.joint_residual(t, j) = r.segment<3>(3 * j).norm();
      worst = std::max(worst, report.joint_residual(t, j));
    }
    report.frame_residual[t] = worst;
    result.angles.frames.row(t) = theta.transpose();
  }
  return result;
}

Frames second_derivative(const Frames& frames, double frame_rate) {
  const Eigen::Index n = frames.rows();
  if (n < 3) throw DimensionError("second derivative needs at least 3 frames");
  const double scale = frame_rate * frame_rate;
  Frames out(n, frames.cols());
  for (Eigen::Index t = 1; t + 1 < n; ++t) {
    out.row(t) = (frames.row(t + 1) - 2.0 * frames.row(t) + frames.row(t - 1)) * scale;
  }
  out.row(0) = out.row(1);
  out.row(n - 1) = out.row(n - 2);
  return out;
}

Frames second_derivative(const Motion& motion) {
  return second_derivative(motion.frames, motion.frame_rate);
}

Frames bone_lengths(const Skeleton& skeleton, const Motion& positions) {
  if (positions.representation != Representation::kPosition) {
    throw DimensionError("bone_lengths expects a position-space motion");
  }
  require_matches(skeleton, positions);
  Frames out(positions.frame_count(), skeleton.bone_count());
  for (Eigen::Index t = 0; t < positions.frame_count(); ++t) {
    const auto row = positions.frames.row(t);
    for (int b = 0; b < skeleton.bone_count(); ++b) {
      const int j = Skeleton::bone_joint(b);
      const int p = skeleton.parent(j);
      out(t, b) = (row.segment<3>(3 * j) - row.segment<3>(3 * p)).norm();
    }
  }
  return out;
}

OnManifoldVerdict check_on_manifold(const Skeleton& skeleton, const Motion& motion,
                                    const ManifoldTolerances& tol, const Motion* reference_angles) {
  require_matches(skeleton, motion);
  OnManifoldVerdict verdict;
  if (motion.representation == Representation::kAngle) {
    check_limits(skeleton, motion.frames, tol.angle, verdict);
    return verdict;
  }
  const Frames lengths = bone_lengths(skeleton, motion);
  for (Eigen::Index t = 0; t < lengths.rows(); ++t) {
    for (int b = 0; b < skeleton.bone_count(); ++b) {
      const double ref = skeleton.length(Skeleton::bone_joint(b));
      const double rel = std::abs(lengths(t, b) - ref) / ref;
      if (rel > tol.bone) {
        verdict.on_manifold = false;
        verdict.violations.push_back({t, ManifoldViolation::Kind::kBoneLength, b, rel - tol.bone});
      }
    }
  }
  const IkResult ik = inverse_kinematics(skeleton, motion, reference_angles);
  check_limits(skeleton, ik.angles.frames, tol.angle, verdict);
  return verdict;
}

}  // namespace mgmw
