#include "mgmw/classifier.hpp"

#include "mgmw/errors.hpp"
#include "mgmw/kinematics.hpp"
#include "mgmw/rng.hpp"
#include "network.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mgmw {
namespace detail {

void forward(const ClassifierModel& model, const Motion& motion, ForwardCache& cache) {
  const auto n_layers = model.layers.size();
  cache.activations.resize(n_layers + 1);
  Eigen::VectorXd& input = cache.activations[0];
  input.resize(model.input_size());
  for (int t = 0; t < model.frames; ++t) {
    for (int d = 0; d < model.dofs; ++d) {
      input[t * model.dofs + d] = (motion.frames(t, d) - model.input_mean[d]) / model.input_scale[d];
    }
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = model.layers[l];
    cache.activations[l + 1].noalias() = layer.weight * cache.activations[l];
    cache.activations[l + 1] += layer.bias;
    if (l + 1 < n_layers) cache.activations[l + 1] = cache.activations[l + 1].array().tanh();
  }
}

void backward(const ClassifierModel& model, const ForwardCache& cache, const Eigen::VectorXd& dlogits,
              std::vector<DenseLayer>* grads, Eigen::VectorXd* dinput) {
  Eigen::VectorXd delta = dlogits;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    const Eigen::VectorXd& in = cache.activations[l];
    if (grads != nullptr) {
      (*grads)[l].weight.noalias() += delta * in.transpose();
      (*grads)[l].bias += delta;
    }
    if (l == 0 && dinput == nullptr) break;
    Eigen::VectorXd back = layer.weight.transpose() * delta;
    if (l == 0) {
      *dinput = std::move(back);
      break;
    }
    delta = back.array() * (1.0 - in.array().square());
  }
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return logits.array() - lse;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Frames unnormalize_gradient(const ClassifierModel& model, const Eigen::VectorXd& dinput) {
  Frames g(model.frames, model.dofs);
  for (int t = 0; t < model.frames; ++t) {
    for (int d = 0; d < model.dofs; ++d) g(t, d) = dinput[t * model.dofs + d] / model.input_scale[d];
  }
  return g;
}

}  // namespace detail

void require_model_input(const ModelShape& shape, const Motion& motion) {
  if (motion.representation != Representation::kPosition || motion.frame_count() != shape.frames ||
      motion.dof_count() != shape.dofs) {
    throw DimensionError("classifier expects a " + std::to_string(shape.frames) + "x" +
                         std::to_string(shape.dofs) + " position motion, got " +
                         std::to_string(motion.frame_count()) + "x" + std::to_string(motion.dof_count()) +
                         " " + std::string(to_string(motion.representation)));
  }
}

namespace {

ModelShape shape_of(const ClassifierModel& model) { return {model.frames, model.dofs, model.classes}; }

}  // namespace

Eigen::VectorXd predict_logits(const ClassifierModel& model, const Motion& motion) {
  require_model_input(shape_of(model), motion);
  detail::ForwardCache cache;
  detail::forward(model, motion, cache);
  return cache.logits();
}

Eigen::VectorXd predict_scores(const ClassifierModel& model, const Motion& motion) {
  return detail::softmax(predict_logits(model, motion));
}

int argmax(const Eigen::VectorXd& scores) {
  int best = 0;
  for (int c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

int ClassifierHandle::predict_label(const Motion& motion) {
  require_model_input(shape(), motion);
  queries_.fetch_add(1, std::memory_order_relaxed);
  return classify(motion);
}

BuiltinHandle::BuiltinHandle(std::shared_ptr<const ClassifierModel> model) : model_(std::move(model)) {
  if (!model_) throw Error("BuiltinHandle needs a model");
}

ModelShape BuiltinHandle::shape() const { return shape_of(*model_); }

int BuiltinHandle::classify(const Motion& motion) { return argmax(predict_scores(*model_, motion)); }

// ---------------------------------------------------------------- losses

namespace {

struct LossAndLogitGrad {
  double loss;
  Eigen::VectorXd dlogits;
};

LossAndLogitGrad cross_entropy(const Eigen::VectorXd& logits, int label) {
  const Eigen::VectorXd logp = detail::log_softmax(logits);
  Eigen::VectorXd d = logp.array().exp();
  d[label] -= 1.0;
  return {-logp[label], std::move(d)};
}

void check_smart(const ClassifierModel& model, const SmartLoss& spec, const Motion& motion) {
  if (spec.clean == nullptr || spec.skeleton == nullptr) throw Error("SmartLoss needs clean motion and skeleton");
  require_model_input(shape_of(model), *spec.clean);
  if (spec.clean->frames.rows() != motion.frames.rows() || spec.clean->frames.cols() != motion.frames.cols()) {
    throw DimensionError("SmartLoss clean motion shape differs from input");
  }
}

}  // namespace

double evaluate_loss(const ClassifierModel& model, const Motion& motion, const LossSpec& loss) {
  const Eigen::VectorXd logits = predict_logits(model, motion);
  if (const auto* ce = std::get_if<CrossEntropyLoss>(&loss)) {
    if (ce->label < 0 || ce->label >= model.classes) throw Error("label out of range");
    return cross_entropy(logits, ce->label).loss;
  }
  const auto& smart = std::get<SmartLoss>(loss);
  check_smart(model, smart, motion);
  const Eigen::VectorXd p = predict_scores(model, *smart.clean);
  const double lc = p.dot(detail::log_softmax(logits));
  double total = smart.mix_weight * lc;
  if (smart.mix_weight != 1.0) {
    total += (1.0 - smart.mix_weight) * perceptual_loss(*smart.clean, motion, *smart.skeleton, smart.perceptual);
  }
  return total;
}

Frames input_gradient(const ClassifierModel& model, const Motion& motion, const LossSpec& loss) {
  require_model_input(shape_of(model), motion);
  detail::ForwardCache cache;
  detail::forward(model, motion, cache);
  Eigen::VectorXd dlogits;
  const SmartLoss* smart = std::get_if<SmartLoss>(&loss);
  if (const auto* ce = std::get_if<CrossEntropyLoss>(&loss)) {
    if (ce->label < 0 || ce->label >= model.classes) throw Error("label out of range");
    dlogits = cross_entropy(cache.logits(), ce->label).dlogits;
  } else {
    check_smart(model, *smart, motion);
    const Eigen::VectorXd p = predict_scores(model, *smart->clean);
    const Eigen::VectorXd q = detail::softmax(cache.logits());
    dlogits = smart->mix_weight * (p - q);
  }
  Eigen::VectorXd dinput;
  detail::backward(model, cache, dlogits, nullptr, &dinput);
  Frames grad = detail::unnormalize_gradient(model, dinput);
  if (smart != nullptr && smart->mix_weight != 1.0) {
    grad += (1.0 - smart->mix_weight) *
            perceptual_gradient(*smart->clean, motion, *smart->skeleton, smart->perceptual);
  }
  return grad;
}

Frames input_gradient(const ClassifierHandle& handle, const Motion& motion, const LossSpec& loss) {
  const ClassifierModel* model = handle.white_box();
  if (model == nullptr) throw CapabilityError("input gradients need a built-in (white-box) classifier");
  return input_gradient(*model, motion, loss);
}

// ---------------------------------------------------------------- synthetic data

LabeledDataset generate_synthetic_dataset(const Skeleton& skeleton, const SyntheticConfig& cfg, Split split) {
  if (cfg.classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
  if (cfg.per_class < 1) throw ConfigError("per_class must be at least 1");
  if (cfg.frames < 3) throw ConfigError("frames must be at least 3");
  const double reach = cfg.class_offset + cfg.amplitude * (1.0 + cfg.amplitude_jitter) + cfg.noise;
  if (cfg.amplitude < 0 || cfg.amplitude_jitter < 0 || cfg.class_offset < 0 || cfg.noise < 0 || reach >= 0.98) {
    throw ConfigError("synthetic trajectories would leave the joint range (offset + amplitude * (1 + jitter) + "
                      "noise = " + std::to_string(reach) + ", must stay below 0.98)");
  }

  const int dofs = skeleton.angle_dof_count();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  struct Template {
    double frequency;
    Eigen::VectorXd offset, amplitude, phase;
  };
  std::vector<Template> templates;
  Rng template_rng(derive_seed(cfg.seed, "templates"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < cfg.classes; ++k) {
    Template tpl{0.5 * (k + 1), Eigen::VectorXd(dofs), Eigen::VectorXd(dofs), Eigen::VectorXd(dofs)};
    for (int d = 0; d < dofs; ++d) {
      tpl.offset[d] = cfg.class_offset * (2.0 * unit(template_rng) - 1.0);
      tpl.amplitude[d] = cfg.amplitude * (0.5 + 0.5 * unit(template_rng));
      tpl.phase[d] = two_pi * unit(template_rng);
    }
    templates.push_back(std::move(tpl));
  }

  LabeledDataset data{skeleton, {}, {}, cfg.classes, split, cfg.seed};
  Rng rng(derive_seed(cfg.seed, split == Split::kTrain ? "train" : "test"));
  const double span = static_cast<double>(cfg.frames - 1);
  for (int k = 0; k < cfg.classes; ++k) {
    const Template& tpl = templates[k];
    for (int s = 0; s < cfg.per_class; ++s) {
      const double scale = 1.0 + cfg.amplitude_jitter * (2.0 * unit(rng) - 1.0);
      const double shift = 0.3 * (2.0 * unit(rng) - 1.0);
      Motion angles{Representation::kAngle, Frames(cfg.frames, dofs), 1.0};
      for (int d = 0; d < dofs; ++d) {
        const double center = 0.5 * (skeleton.limit_min(d) + skeleton.limit_max(d));
        const double half = 0.5 * (skeleton.limit_max(d) - skeleton.limit_min(d));
        // Two slow sinusoids, each bounded by noise / 2.
        const double n1 = 0.5 * cfg.noise * (2.0 * unit(rng) - 1.0);
        const double n2 = 0.5 * cfg.noise * (2.0 * unit(rng) - 1.0);
        const double f1 = 0.25 + unit(rng), f2 = 0.25 + unit(rng);
        const double p1 = two_pi * unit(rng), p2 = two_pi * unit(rng);
        for (int t = 0; t < cfg.frames; ++t) {
          const double u = static_cast<double>(t) / span;
          const double wave = tpl.offset[d] +
                              scale * tpl.amplitude[d] * std::sin(two_pi * tpl.frequency * u + tpl.phase[d] + shift) +
                              n1 * std::sin(two_pi * f1 * u + p1) + n2 * std::sin(two_pi * f2 * u + p2);
          angles.frames(t, d) = center + half * wave;
        }
      }
      data.motions.push_back(forward_kinematics(skeleton, angles));
      data.labels.push_back(k);
    }
  }
  return data;
}

double accuracy(const ClassifierModel& model, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax(predict_scores(model, data.motions[i])) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace mgmw
