#include "mgmw/perceptual.hpp"

#include "mgmw/errors.hpp"
#include "mgmw/kinematics.hpp"

namespace mgmw {
namespace {

void check_pair(const Motion& x, const Motion& y, const Skeleton& skeleton) {
  if (x.frames.rows() != y.frames.rows() || x.frames.cols() != y.frames.cols()) {
    throw DimensionError("perceptual loss: motion shapes differ");
  }
  require_matches(skeleton, x);
  if (x.representation != Representation::kPosition) {
    throw DimensionError("perceptual loss expects position motions");
  }
}

void check_gamma(const Eigen::MatrixXd& gamma, Eigen::Index frames) {
  if (gamma.size() != 0 && (gamma.rows() != frames || gamma.cols() != frames)) {
    throw DimensionError("perceptual gamma must be frames x frames");
  }
}

// gamma acts along time: gamma * diff, with the velocity's n - 1 rows
// using the leading block.
Eigen::MatrixXd gamma_block(const Eigen::MatrixXd& gamma, Eigen::Index rows) {
  return gamma.topLeftCorner(rows, rows);
}

Frames weighted(const Frames& diff, const Eigen::MatrixXd& gamma) {
  if (gamma.size() == 0) return diff;
  return gamma_block(gamma, diff.rows()) * diff;
}

Frames gram_weighted(const Frames& diff, const Eigen::MatrixXd& gamma) {
  if (gamma.size() == 0) return diff;
  const Eigen::MatrixXd g = gamma_block(gamma, diff.rows());
  return g.transpose() * (g * diff);
}

Frames derivative(const Frames& f, int order, double rate) {
  switch (order) {
    case 0: return f;
    case 1: return first_difference(f) * rate;
    default: return second_derivative(f, rate);
  }
}

// Adjoint of derivative(., order) applied to g.
Frames derivative_adjoint(const Frames& g, int order, Eigen::Index n, double rate) {
  if (order == 0) return g;
  Frames out = Frames::Zero(n, g.cols());
  if (order == 1) {
    for (Eigen::Index t = 0; t + 1 < n; ++t) {
      out.row(t + 1) += rate * g.row(t);
      out.row(t) -= rate * g.row(t);
    }
    return out;
  }
  Frames folded = g;
  folded.row(1) += folded.row(0);
  folded.row(n - 2) += folded.row(n - 1);
  const double s = rate * rate;
  for (Eigen::Index t = 1; t + 1 < n; ++t) {
    out.row(t - 1) += s * folded.row(t);
    out.row(t) -= 2.0 * s * folded.row(t);
    out.row(t + 1) += s * folded.row(t);
  }
  return out;
}

}  // namespace

Frames first_difference(const Frames& frames) {
  const Eigen::Index n = frames.rows();
  if (n < 2) throw DimensionError("first difference needs at least 2 frames");
  return frames.bottomRows(n - 1) - frames.topRows(n - 1);
}

PerceptualTerms perceptual_terms(const Motion& x, const Motion& x_adv, const Skeleton& skeleton,
                                 const PerceptualConfig& cfg) {
  check_pair(x, x_adv, skeleton);
  check_gamma(cfg.gamma, x.frame_count());
  PerceptualTerms terms;
  const Frames bl = bone_lengths(skeleton, x) - bone_lengths(skeleton, x_adv);
  terms.bone = bl.squaredNorm() / static_cast<double>(x.frame_count());
  const Frames diff = x.frames - x_adv.frames;
  for (int k = 0; k < 3; ++k) {
    if (cfg.derivative_weights[k] == 0.0) continue;
    terms.dynamics += cfg.derivative_weights[k] * weighted(derivative(diff, k, x.frame_rate), cfg.gamma).squaredNorm();
  }
  terms.total = cfg.alpha * terms.dynamics + (1.0 - cfg.alpha) * terms.bone;
  return terms;
}

double perceptual_loss(const Motion& x, const Motion& x_adv, const Skeleton& skeleton, const PerceptualConfig& cfg) {
  return perceptual_terms(x, x_adv, skeleton, cfg).total;
}

Frames perceptual_gradient(const Motion& x, const Motion& x_adv, const Skeleton& skeleton,
                           const PerceptualConfig& cfg) {
  check_pair(x, x_adv, skeleton);
  check_gamma(cfg.gamma, x.frame_count());
  const Eigen::Index n = x.frame_count();
  Frames grad = Frames::Zero(n, x.dof_count());

  // Dynamics: d/dx' of beta ||gamma D (x - x')||^2 = -2 beta D^T gamma^T gamma D (x - x').
  const Frames diff = x.frames - x_adv.frames;
  for (int k = 0; k < 3; ++k) {
    if (cfg.derivative_weights[k] == 0.0) continue;
    const Frames dk = gram_weighted(derivative(diff, k, x.frame_rate), cfg.gamma);
    grad -= (2.0 * cfg.alpha * cfg.derivative_weights[k]) * derivative_adjoint(dk, k, n, x.frame_rate);
  }

  // Bone lengths.
  const double scale = 2.0 * (1.0 - cfg.alpha) / static_cast<double>(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (int b = 0; b < skeleton.bone_count(); ++b) {
      const int j = Skeleton::bone_joint(b);
      const int p = skeleton.parent(j);
      const Eigen::Vector3d v_adv = (x_adv.frames.row(t).segment<3>(3 * j) - x_adv.frames.row(t).segment<3>(3 * p)).transpose();
      const Eigen::Vector3d v = (x.frames.row(t).segment<3>(3 * j) - x.frames.row(t).segment<3>(3 * p)).transpose();
      const double len_adv = v_adv.norm();
      if (len_adv < 1e-15) continue;
      const Eigen::Vector3d g = scale * (len_adv - v.norm()) * v_adv / len_adv;
      grad.row(t).segment<3>(3 * j) += g.transpose();
      grad.row(t).segment<3>(3 * p) -= g.transpose();
    }
  }
  return grad;
}

}  // namespace mgmw
