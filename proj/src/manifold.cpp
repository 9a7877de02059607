#include "mgmw/manifold.hpp"

#include "mgmw/errors.hpp"
#include "mgmw/logging.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mgmw {
namespace {

// Symmetric positive definite matrix with two sub-diagonals.
struct Pentadiagonal {
  Eigen::VectorXd d0, d1, d2;  // main, first and second off-diagonal

  explicit Pentadiagonal(Eigen::Index n) : d0(Eigen::VectorXd::Zero(n)), d1(Eigen::VectorXd::Zero(n)), d2(Eigen::VectorXd::Zero(n)) {}

  Eigen::Index size() const { return d0.size(); }

  double at(Eigen::Index i, Eigen::Index j) const {  // i >= j
    switch (i - j) {
      case 0: return d0[i];
      case 1: return d1[j];
      case 2: return d2[j];
      default: return 0.0;
    }
  }

  // Banded Cholesky solve; returns false if the matrix is not positive definite.
  bool solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const {
    const Eigen::Index n = size();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, 3);  // l(i, k) = L(i, i - 2 + k)
    auto L = [&](Eigen::Index i, Eigen::Index j) -> double& { return l(i, j - i + 2); };
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = std::max<Eigen::Index>(0, i - 2); j <= i; ++j) {
        double sum = at(i, j);
        for (Eigen::Index k = std::max<Eigen::Index>(0, i - 2); k < j; ++k) sum -= L(i, k) * L(j, k);
        if (i == j) {
          if (!(sum > 0.0)) return false;
          L(i, i) = std::sqrt(sum);
        } else {
          L(i, j) = sum / L(j, j);
        }
      }
    }
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = rhs[i];
      for (Eigen::Index k = std::max<Eigen::Index>(0, i - 2); k < i; ++k) s -= L(i, k) * y[k];
      y[i] = s / L(i, i);
    }
    x.resize(n);
    for (Eigen::Index i = n; i-- > 0;) {
      double s = y[i];
      for (Eigen::Index k = i + 1; k <= std::min(n - 1, i + 2); ++k) s -= L(k, i) * x[k];
      x[i] = s / L(i, i);
    }
    return true;
  }
};

// Endpoint-copied second difference on one dof column and its adjoint.
class AccelerationOperator {
 public:
  AccelerationOperator(Eigen::Index n, double rate) : n_(n), scale_(rate * rate) {}

  bool active() const { return n_ >= 3; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    if (!active()) return out;
    for (Eigen::Index t = 0; t < n_; ++t) {
      const Eigen::Index s = centre(t);
      out[t] = scale_ * (v[s - 1] - 2.0 * v[s] + v[s + 1]);
    }
    return out;
  }

  Eigen::VectorXd adjoint(const Eigen::VectorXd& g) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    if (!active()) return out;
    for (Eigen::Index t = 0; t < n_; ++t) {
      const Eigen::Index s = centre(t);
      out[s - 1] += scale_ * g[t];
      out[s] -= 2.0 * scale_ * g[t];
      out[s + 1] += scale_ * g[t];
    }
    return out;
  }

  // Adds w * D^T D into `m`.
  void add_normal(double w, Pentadiagonal& m) const {
    if (!active()) return;
    const double c[3] = {scale_, -2.0 * scale_, scale_};
    for (Eigen::Index t = 0; t < n_; ++t) {
      const Eigen::Index s = centre(t) - 1;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b <= a; ++b) {
          const double v = w * c[a] * c[b];
          switch (a - b) {
            case 0: m.d0[s + a] += v; break;
            case 1: m.d1[s + b] += v; break;
            default: m.d2[s + b] += v; break;
          }
        }
      }
    }
  }

 private:
  Eigen::Index centre(Eigen::Index t) const { return std::clamp<Eigen::Index>(t, 1, n_ - 2); }

  Eigen::Index n_;
  double scale_;
};

struct DofProblem {
  Eigen::VectorXd reference;
  Eigen::VectorXd acceleration;
  double lo;
  double hi;
};

class DofObjective {
 public:
  DofObjective(const AccelerationOperator& op, double w) : op_(op), w_(w) {}

  double value(const DofProblem& p, const Eigen::VectorXd& theta) const {
    double f = (theta - p.reference).squaredNorm();
    if (op_.active() && w_ != 0.0) f += w_ * (op_.apply(theta) - p.acceleration).squaredNorm();
    return f;
  }

  Eigen::VectorXd gradient(const DofProblem& p, const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g = 2.0 * (theta - p.reference);
    if (op_.active() && w_ != 0.0) g += 2.0 * w_ * op_.adjoint(op_.apply(theta) - p.acceleration);
    return g;
  }

 private:
  const AccelerationOperator& op_;
  double w_;
};

struct DofState {
  Eigen::VectorXd theta, z_lo, z_hi;
  bool collapsed = false;
};

struct NewtonOutcome {
  int iterations = 0;
  double residual = 0.0;
  double min_damping = 1.0;
  bool converged = false;
};

double barrier_merit(const DofObjective& f, const DofProblem& p, const Eigen::VectorXd& theta, double nu) {
  const Eigen::ArrayXd s_lo = theta.array() - p.lo;
  const Eigen::ArrayXd s_hi = p.hi - theta.array();
  if ((s_lo <= 0.0).any() || (s_hi <= 0.0).any()) return std::numeric_limits<double>::infinity();
  return f.value(p, theta) - nu * (s_lo.log().sum() + s_hi.log().sum());
}

NewtonOutcome newton_solve(const DofObjective& f, const Pentadiagonal& hessian, const DofProblem& p, double nu,
                           const NewtonOptions& opt, DofState& st) {
  NewtonOutcome out;
  const Eigen::Index n = st.theta.size();
  for (;; ++out.iterations) {
    const Eigen::ArrayXd s_lo = st.theta.array() - p.lo;
    const Eigen::ArrayXd s_hi = p.hi - st.theta.array();
    const Eigen::VectorXd g = f.gradient(p, st.theta);
    if (!g.allFinite()) throw DivergenceError("non-finite gradient in barrier solve");
    // Stationarity is measured relative to the size of its summands.
    const double dual_scale = 1.0 + std::max({g.lpNorm<Eigen::Infinity>(), st.z_lo.lpNorm<Eigen::Infinity>(),
                                              st.z_hi.lpNorm<Eigen::Infinity>()});
    const double r_dual = (g - st.z_lo + st.z_hi).lpNorm<Eigen::Infinity>() / dual_scale;
    const double r_lo = (s_lo * st.z_lo.array() - nu).abs().maxCoeff();
    const double r_hi = (s_hi * st.z_hi.array() - nu).abs().maxCoeff();
    out.residual = std::max({r_dual, r_lo, r_hi});
    if (out.residual <= opt.kkt_tolerance) {
      out.converged = true;
      return out;
    }
    if (out.iterations >= opt.max_iterations || st.collapsed) return out;

    const Eigen::ArrayXd sigma_lo = st.z_lo.array() / s_lo;
    const Eigen::ArrayXd sigma_hi = st.z_hi.array() / s_hi;
    Pentadiagonal h = hessian;
    h.d0.array() += sigma_lo + sigma_hi;
    const Eigen::VectorXd merit_grad = (g.array() - nu / s_lo + nu / s_hi).matrix();
    Eigen::VectorXd step;
    if (!h.solve(-merit_grad, step) || !step.allFinite()) {
      throw DivergenceError("barrier Newton system is singular or non-finite");
    }
    const Eigen::ArrayXd dz_lo = nu / s_lo - st.z_lo.array() - sigma_lo * step.array();
    const Eigen::ArrayXd dz_hi = nu / s_hi - st.z_hi.array() + sigma_hi * step.array();

    const double tau = opt.fraction_to_boundary;
    double alpha = 1.0;
    double alpha_dual = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (step[i] < 0.0) alpha = std::min(alpha, -tau * s_lo[i] / step[i]);
      if (step[i] > 0.0) alpha = std::min(alpha, tau * s_hi[i] / step[i]);
      if (dz_lo[i] < 0.0) alpha_dual = std::min(alpha_dual, -tau * st.z_lo[i] / dz_lo[i]);
      if (dz_hi[i] < 0.0) alpha_dual = std::min(alpha_dual, -tau * st.z_hi[i] / dz_hi[i]);
    }

    const double phi0 = barrier_merit(f, p, st.theta, nu);
    const double slope = merit_grad.dot(step);
    // A predicted decrease below the merit's rounding error cannot be
    // verified; the full Newton step is taken.
    const bool tiny = -slope <= 1e-14 * std::max(1.0, std::abs(phi0));
    while (!tiny && barrier_merit(f, p, st.theta + alpha * step, nu) > phi0 + opt.armijo * alpha * slope) {
      alpha *= 0.5;
      if (alpha < opt.min_step) {
        st.collapsed = true;
        break;
      }
    }
    if (st.collapsed) return out;
    out.min_damping = std::min(out.min_damping, alpha);
    st.theta += alpha * step;
    st.z_lo.array() += alpha_dual * dz_lo;
    st.z_hi.array() += alpha_dual * dz_hi;

    // Keep duals within a bounded factor of the primal-implied values.
    constexpr double kappa = 1e10;
    const Eigen::ArrayXd new_lo = st.theta.array() - p.lo;
    const Eigen::ArrayXd new_hi = p.hi - st.theta.array();
    st.z_lo = st.z_lo.array().max(nu / (kappa * new_lo)).min(kappa * nu / new_lo).matrix();
    st.z_hi = st.z_hi.array().max(nu / (kappa * new_hi)).min(kappa * nu / new_hi).matrix();
  }
}

void check_problem(const ProjectionProblem& p) {
  const Eigen::Index m = p.reference.cols();
  if (p.limits_min.size() != m || p.limits_max.size() != m) throw DimensionError("projection limits size mismatch");
  if (p.reference.rows() >= 3 &&
      (p.target_acceleration.rows() != p.reference.rows() || p.target_acceleration.cols() != m)) {
    throw DimensionError("projection target acceleration shape mismatch");
  }
  if (!p.reference.allFinite()) throw DivergenceError("projection reference is non-finite");
  for (Eigen::Index d = 0; d < m; ++d) {
    if (!(p.limits_min[d] < p.limits_max[d])) throw Error("projection limits must satisfy min < max");
  }
}

}  // namespace

double projection_objective(const ProjectionProblem& problem, const Frames& angles, double dynamics_weight) {
  double f = (angles - problem.reference).squaredNorm();
  if (angles.rows() >= 3 && dynamics_weight != 0.0) {
    f += dynamics_weight * (second_derivative(angles, problem.frame_rate) - problem.target_acceleration).squaredNorm();
  }
  return f;
}

BarrierSolution solve_barrier(const ProjectionProblem& problem, const ProjectionConfig& cfg) {
  check_problem(problem);
  const Eigen::Index n = problem.reference.rows();
  const Eigen::Index m = problem.reference.cols();
  const double w = cfg.dynamics_weight;
  if (w < 0.0) throw ConfigError("dynamics weight must be non-negative");

  const AccelerationOperator op(n, problem.frame_rate);
  const DofObjective objective(op, w);
  Pentadiagonal hessian(n);
  hessian.d0.setConstant(2.0);
  op.add_normal(2.0 * w, hessian);

  std::vector<DofProblem> dofs;
  std::vector<DofState> states;
  double mean_width = 0.0;
  for (Eigen::Index d = 0; d < m; ++d) {
    DofProblem p{problem.reference.col(d),
                 n >= 3 ? Eigen::VectorXd(problem.target_acceleration.col(d)) : Eigen::VectorXd::Zero(n),
                 problem.limits_min[d], problem.limits_max[d]};
    const double width = p.hi - p.lo;
    mean_width += width / static_cast<double>(m);
    DofState st;
    st.theta = p.reference.array().max(p.lo + cfg.start_margin * width).min(p.hi - cfg.start_margin * width);
    dofs.push_back(std::move(p));
    states.push_back(std::move(st));
  }

  BarrierSolution sol;
  double nu = std::max(cfg.barrier.initial_scale * mean_width, cfg.barrier.floor);
  for (Eigen::Index d = 0; d < m; ++d) {
    states[d].z_lo = (nu / (states[d].theta.array() - dofs[d].lo)).matrix();
    states[d].z_hi = (nu / (dofs[d].hi - states[d].theta.array())).matrix();
  }

  Frames angles(n, m);
  for (;;) {
    OuterIterate outer{nu, 0, 0.0, 0.0, 1.0};
    for (Eigen::Index d = 0; d < m; ++d) {
      const NewtonOutcome r = newton_solve(objective, hessian, dofs[d], nu, cfg.newton, states[d]);
      outer.newton_iterations = std::max(outer.newton_iterations, r.iterations);
      outer.kkt_residual = std::max(outer.kkt_residual, r.residual);
      outer.min_damping = std::min(outer.min_damping, r.min_damping);
      sol.converged = sol.converged && r.converged;
      sol.step_collapsed = sol.step_collapsed || states[d].collapsed;
      outer.objective += objective.value(dofs[d], states[d].theta);
      angles.col(d) = states[d].theta;
    }
    logger().debug("barrier nu={:.3e} newton={} kkt={:.3e} f={:.12g} damping={:.3e}", outer.barrier,
                   outer.newton_iterations, outer.kkt_residual, outer.objective, outer.min_damping);
    sol.trace.push_back(outer);
    if (nu <= cfg.barrier.floor || sol.step_collapsed) break;
    nu = std::max(nu * cfg.barrier.decay, cfg.barrier.floor);
  }
  sol.angles = std::move(angles);
  sol.objective = sol.trace.back().objective;
  return sol;
}

ManifoldProjector::ManifoldProjector(const Skeleton& skeleton, const Motion& original, ProjectionConfig cfg)
    : skeleton_(skeleton), cfg_(std::move(cfg)) {
  validate_motion(original);
  if (original.representation == Representation::kAngle) {
    require_matches(skeleton_, original);
    original_angles_ = original;
  } else {
    original_angles_ = inverse_kinematics(skeleton_, original, nullptr, cfg_.ik).angles;
  }
  original_acceleration_ = second_derivative(original_angles_);
}

ProjectionResult ManifoldProjector::project(const Motion& perturbed) const {
  if (perturbed.frame_count() != original_angles_.frame_count()) {
    throw DimensionError("perturbed and original motions differ in frame count");
  }
  ProjectionResult result;
  ProjectionProblem problem;
  problem.frame_rate = original_angles_.frame_rate;
  if (perturbed.representation == Representation::kPosition) {
    IkResult ik = inverse_kinematics(skeleton_, perturbed, &original_angles_, cfg_.ik);
    problem.reference = std::move(ik.angles.frames);
    result.ik = std::move(ik.report);
  } else {
    require_matches(skeleton_, perturbed);
    problem.reference = perturbed.frames;
  }
  problem.target_acceleration = original_acceleration_;
  const int dofs = skeleton_.angle_dof_count();
  problem.limits_min.resize(dofs);
  problem.limits_max.resize(dofs);
  for (int d = 0; d < dofs; ++d) {
    problem.limits_min[d] = skeleton_.limit_min(d);
    problem.limits_max[d] = skeleton_.limit_max(d);
  }
  result.solution = solve_barrier(problem, cfg_);
  result.angles = Motion{Representation::kAngle, result.solution.angles, original_angles_.frame_rate};
  if (cfg_.output == Representation::kAngle) {
    result.motion = result.angles;
    return result;
  }
  result.motion = forward_kinematics(skeleton_, result.angles);
  if (perturbed.representation == Representation::kPosition) {
    for (Eigen::Index t = 0; t < perturbed.frame_count(); ++t) {
      const Eigen::RowVector3d root = perturbed.frames.row(t).segment<3>(0);
      for (int j = 0; j < skeleton_.joint_count(); ++j) result.motion.frames.row(t).segment<3>(3 * j) += root;
    }
  }
  return result;
}

ProjectionResult manifold_project(const Skeleton& skeleton, const Motion& perturbed, const Motion& original,
                                  const ProjectionConfig& cfg) {
  return ManifoldProjector(skeleton, original, cfg).project(perturbed);
}

}  // namespace mgmw
