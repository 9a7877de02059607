#pragma once

#include "mgmw/classifier.hpp"

#include <vector>

namespace mgmw::detail {

struct ForwardCache {
  // activations[0] is the normalized input; the last entry holds the logits.
  std::vector<Eigen::VectorXd> activations;

  const Eigen::VectorXd& logits() const { return activations.back(); }
};

void forward(const ClassifierModel& model, const Motion& motion, ForwardCache& cache);

/// Back-propagates dL/dlogits. Adds parameter gradients into `grads` and
/// writes dL/d(normalized input) into `dinput` when those are non-null.
void backward(const ClassifierModel& model, const ForwardCache& cache, const Eigen::VectorXd& dlogits,
              std::vector<DenseLayer>* grads, Eigen::VectorXd* dinput);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);

/// Maps a gradient in normalized-input space back to motion frames.
Frames unnormalize_gradient(const ClassifierModel& model, const Eigen::VectorXd& dinput);

}  // namespace mgmw::detail
