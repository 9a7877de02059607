#pragma once

#include "mgmw/motion.hpp"
#include "mgmw/skeleton.hpp"

#include <array>

namespace mgmw {

/// Weights of the perceptual loss alpha * l_dyn + (1 - alpha) * l_bl.
struct PerceptualConfig {
  double alpha = 0.3;
  /// Weights of derivative orders 0 (position), 1 (velocity), 2 (acceleration).
  std::array<double, 3> derivative_weights{0.2, 0.3, 0.5};
  /// frames x frames matrix applied along time to each derivative
  /// difference (the velocity uses its leading block); empty means identity.
  Eigen::MatrixXd gamma;
};

struct PerceptualTerms {
  double bone = 0.0;      // l_bl
  double dynamics = 0.0;  // l_dyn
  double total = 0.0;
};

/// l_bl = (1/n) sum_t ||BL(x_t) - BL(x'_t)||^2 and
/// l_dyn = sum_k beta_k ||gamma (q^k - q'^k)||^2, where q^1 is the forward
/// difference and q^2 the endpoint-copied second difference.
PerceptualTerms perceptual_terms(const Motion& x, const Motion& x_adv, const Skeleton& skeleton,
                                 const PerceptualConfig& cfg);
double perceptual_loss(const Motion& x, const Motion& x_adv, const Skeleton& skeleton,
                       const PerceptualConfig& cfg);

/// Analytic gradient of perceptual_loss with respect to x_adv.
Frames perceptual_gradient(const Motion& x, const Motion& x_adv, const Skeleton& skeleton,
                           const PerceptualConfig& cfg);

/// v_t = x_{t+1} - x_t, n - 1 rows.
Frames first_difference(const Frames& frames);

}  // namespace mgmw
