#include "mgmw/classifier.hpp"

#include "mgmw/errors.hpp"
#include "mgmw/logging.hpp"
#include "mgmw/rng.hpp"
#include "network.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mgmw {
namespace {

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  }
  return out;
}

void set_zero(std::vector<DenseLayer>& layers) {
  for (auto& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

class Adam {
 public:
  Adam(const std::vector<DenseLayer>& shape, double lr) : lr_(lr), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

  void step(std::vector<DenseLayer>& params, const std::vector<DenseLayer>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t l = 0; l < params.size(); ++l) {
      update(params[l].weight.array(), grads[l].weight.array(), m_[l].weight.array(), v_[l].weight.array(), c1, c2);
      update(params[l].bias.array(), grads[l].bias.array(), m_[l].bias.array(), v_[l].bias.array(), c1, c2);
    }
  }

 private:
  template <typename P, typename G, typename M, typename V>
  void update(P&& p, const G& g, M&& m, V&& v, double c1, double c2) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.square();
    p -= lr_ * (m / c1) / ((v / c2).sqrt() + kEps);
  }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  std::vector<DenseLayer> m_, v_;
};

// Adds weight * mean_i dCE_i/dparams into `grads`; returns weight * mean loss.
double accumulate_term(const ClassifierModel& model, const WeightedBatch& term, std::vector<DenseLayer>& scratch,
                       std::vector<DenseLayer>& grads, detail::ForwardCache& cache) {
  if (term.motions.empty() || term.weight == 0.0) return 0.0;
  set_zero(scratch);
  double loss = 0.0;
  for (std::size_t i = 0; i < term.motions.size(); ++i) {
    detail::forward(model, *term.motions[i], cache);
    const Eigen::VectorXd logp = detail::log_softmax(cache.logits());
    Eigen::VectorXd d = logp.array().exp();
    d[term.labels[i]] -= 1.0;
    loss -= logp[term.labels[i]];
    detail::backward(model, cache, d, &scratch, nullptr);
  }
  const double scale = term.weight / static_cast<double>(term.motions.size());
  for (std::size_t l = 0; l < grads.size(); ++l) {
    grads[l].weight += scale * scratch[l].weight;
    grads[l].bias += scale * scratch[l].bias;
  }
  return scale * loss;
}

}  // namespace

ClassifierModel initial_model(const LabeledDataset& train, const TrainConfig& cfg) {
  if (train.size() == 0) throw Error("training set is empty");
  const Motion& first = train.motions.front();
  ClassifierModel model;
  model.frames = static_cast<int>(first.frame_count());
  model.dofs = static_cast<int>(first.dof_count());
  model.classes = train.classes;
  model.dataset_seed = train.seed;

  const ModelShape shape{model.frames, model.dofs, model.classes};
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.dofs);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(model.dofs);
  for (const auto& m : train.motions) {
    require_model_input(shape, m);
    sum += m.frames.colwise().sum().transpose();
    sq += m.frames.array().square().matrix().colwise().sum().transpose();
  }
  const double count = static_cast<double>(train.size()) * model.frames;
  model.input_mean = sum / count;
  model.input_scale = (sq / count - model.input_mean.cwiseProduct(model.input_mean)).cwiseMax(0.0).cwiseSqrt();
  for (int d = 0; d < model.dofs; ++d) {
    if (model.input_scale[d] < 1e-6) model.input_scale[d] = 1.0;
  }

  Rng rng(derive_seed(cfg.seed, "init"));
  std::vector<int> widths{model.input_size()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(model.classes);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = std::sqrt(6.0 / (widths[l] + widths[l + 1]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(widths[l + 1], widths[l]), Eigen::VectorXd::Zero(widths[l + 1])};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

TrainingRun fit_classifier(const LabeledDataset& train, const TrainConfig& cfg, double clean_weight,
                           const BatchAugmenter& augment, const EpochHook& before_epoch,
                           const LabeledDataset* test) {
  if (cfg.batch_size < 1 || cfg.epochs < 0 || !(cfg.learning_rate > 0.0)) {
    throw ConfigError("invalid training config (batch_size >= 1, epochs >= 0, learning_rate > 0)");
  }
  TrainingRun run{initial_model(train, cfg), {}, 0.0, std::nullopt};
  ClassifierModel& model = run.model;
  Adam adam(model.layers, cfg.learning_rate);
  auto grads = zeros_like(model.layers);
  auto scratch = zeros_like(model.layers);
  detail::ForwardCache cache;

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<WeightedBatch> terms;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (before_epoch) before_epoch(model, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + start, stop - start);
      terms.clear();
      WeightedBatch clean{clean_weight, {}, {}};
      for (std::size_t i : batch) {
        clean.motions.push_back(&train.motions[i]);
        clean.labels.push_back(train.labels[i]);
      }
      terms.push_back(std::move(clean));
      if (augment) augment(model, batch, terms);

      set_zero(grads);
      double loss = 0.0;
      for (const auto& term : terms) loss += accumulate_term(model, term, scratch, grads, cache);
      if (!std::isfinite(loss)) {
        throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch));
      }
      adam.step(model.layers, grads);
      epoch_loss += loss;
      ++steps;
    }
    EpochStats stats{epoch, steps > 0 ? epoch_loss / steps : 0.0, accuracy(model, train), std::nullopt};
    if (test != nullptr) stats.test_accuracy = accuracy(model, *test);
    logger().debug("epoch {} loss {:.6f} train acc {:.4f}", epoch, stats.loss, stats.train_accuracy);
    run.epochs.push_back(stats);
  }
  run.train_accuracy = accuracy(model, train);
  if (test != nullptr) run.test_accuracy = accuracy(model, *test);
  return run;
}

TrainingRun train_classifier(const LabeledDataset& train, const TrainConfig& cfg, const LabeledDataset* test) {
  return fit_classifier(train, cfg, 1.0, {}, {}, test);
}

}  // namespace mgmw
