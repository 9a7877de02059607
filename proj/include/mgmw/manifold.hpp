#pragma once

#include "mgmw/kinematics.hpp"
#include "mgmw/motion.hpp"
#include "mgmw/skeleton.hpp"

#include <vector>

namespace mgmw {

/// Decreasing barrier parameter schedule shared by all joints:
/// nu_0 = initial_scale * mean box width, nu_{k+1} = max(decay * nu_k, floor),
/// ending with a solve at the floor.
struct BarrierSchedule {
  double initial_scale = 0.1;
  double decay = 0.2;
  double floor = 1e-9;
};

struct NewtonOptions {
  int max_iterations = 100;
  /// Bound on the complementarity residual and on the stationarity residual
  /// divided by 1 + max(|grad f|, |z_L|, |z_U|).
  double kkt_tolerance = 1e-10;
  double fraction_to_boundary = 0.995;
  double armijo = 1e-4;
  /// Damping below this counts as a collapsed step.
  double min_step = 1e-12;
};

struct ProjectionConfig {
  /// Weight of the acceleration-matching term.
  double dynamics_weight = 0.5;
  BarrierSchedule barrier;
  NewtonOptions newton;
  /// Start-point margin inside each box, as a fraction of its width.
  double start_margin = 1e-6;
  Representation output = Representation::kPosition;
  IkOptions ik;
};

/// minimize ||theta' - reference||^2 + w ||D2 theta' - target_acceleration||^2
/// subject to limits_min < theta' < limits_max, frame by frame and dof by dof.
/// D2 is the endpoint-copied second difference (zero for fewer than 3 frames).
struct ProjectionProblem {
  Frames reference;
  Frames target_acceleration;
  Eigen::VectorXd limits_min;
  Eigen::VectorXd limits_max;
  double frame_rate = 1.0;
};

struct OuterIterate {
  double barrier = 0.0;
  int newton_iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;  // barrier-free
  double min_damping = 1.0;
};

struct BarrierSolution {
  Frames angles;
  double objective = 0.0;
  bool converged = true;       // every Newton solve met the KKT tolerance
  bool step_collapsed = false;
  std::vector<OuterIterate> trace;
};

double projection_objective(const ProjectionProblem& problem, const Frames& angles, double dynamics_weight);

/// Primal-dual interior-point solve of a ProjectionProblem. For each barrier
/// value, damped Newton on the perturbed KKT system
///   grad f - z_L + z_U = 0,  (theta - min) z_L = nu,  (max - theta) z_U = nu
/// with a fraction-to-boundary rule and backtracking on the barrier merit.
/// The returned angles lie strictly inside the box. Throws DivergenceError on
/// non-finite derivatives.
BarrierSolution solve_barrier(const ProjectionProblem& problem, const ProjectionConfig& cfg);

struct ProjectionResult {
  Motion motion;
  Motion angles;
  BarrierSolution solution;
  IkReport ik;

  /// Solver did not fully converge; the motion is still the best feasible
  /// iterate.
  bool flagged() const { return !solution.converged || solution.step_collapsed; }
};

/// Projects perturbed motions of one clean motion onto the natural-pose
/// manifold. The clean motion's angles and angular accelerations are
/// computed once.
class ManifoldProjector {
 public:
  ManifoldProjector(const Skeleton& skeleton, const Motion& original, ProjectionConfig cfg);

  /// IK of the perturbed motion (seeded with the original's angles), box- and
  /// dynamics-constrained solve, then FK. The perturbed root translation is
  /// kept for position output.
  ProjectionResult project(const Motion& perturbed) const;

  const Motion& original_angles() const { return original_angles_; }

 private:
  Skeleton skeleton_;
  ProjectionConfig cfg_;
  Motion original_angles_;
  Frames original_acceleration_;
};

ProjectionResult manifold_project(const Skeleton& skeleton, const Motion& perturbed, const Motion& original,
                                  const ProjectionConfig& cfg = {});

}  // namespace mgmw
