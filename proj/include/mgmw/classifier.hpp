#pragma once

#include "mgmw/motion.hpp"
#include "mgmw/perceptual.hpp"
#include "mgmw/skeleton.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace mgmw {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;

  bool operator==(const DenseLayer& o) const { return weight == o.weight && bias == o.bias; }
};

/// Fully connected network over the flattened, per-dof normalized motion.
/// Hidden layers use tanh so input gradients exist everywhere.
struct ClassifierModel {
  int frames = 0;
  int dofs = 0;
  int classes = 0;
  std::vector<DenseLayer> layers;
  Eigen::VectorXd input_mean;   // per dof
  Eigen::VectorXd input_scale;  // per dof
  std::uint64_t dataset_seed = 0;

  int input_size() const { return frames * dofs; }
  bool operator==(const ClassifierModel&) const = default;
};

struct ModelShape {
  int frames = 0;
  int dofs = 0;
  int classes = 0;
};

void require_model_input(const ModelShape& shape, const Motion& motion);

Eigen::VectorXd predict_logits(const ClassifierModel& model, const Motion& motion);
/// Softmax of the logits.
Eigen::VectorXd predict_scores(const ClassifierModel& model, const Motion& motion);
/// First index of the maximum.
int argmax(const Eigen::VectorXd& scores);

/// What the attack sees of a classifier: labels only, with every label
/// query counted.
class ClassifierHandle {
 public:
  virtual ~ClassifierHandle() = default;

  /// Rejects shape mismatches before counting.
  int predict_label(const Motion& motion);
  std::uint64_t query_count() const { return queries_.load(std::memory_order_relaxed); }

  virtual ModelShape shape() const = 0;
  /// Non-null only for built-in models.
  virtual const ClassifierModel* white_box() const { return nullptr; }

 protected:
  virtual int classify(const Motion& motion) = 0;

 private:
  std::atomic<std::uint64_t> queries_{0};
};

class BuiltinHandle final : public ClassifierHandle {
 public:
  explicit BuiltinHandle(std::shared_ptr<const ClassifierModel> model);

  ModelShape shape() const override;
  const ClassifierModel* white_box() const override { return model_.get(); }

 protected:
  int classify(const Motion& motion) override;

 private:
  std::shared_ptr<const ClassifierModel> model_;
};

inline int predict_label(ClassifierHandle& handle, const Motion& motion) {
  return handle.predict_label(motion);
}

struct CrossEntropyLoss {
  int label = 0;
};

/// w * L_c(x, x') + (1 - w) * L_p(x, x') with L_c = -CE(Phi(x), Phi(x')),
/// differentiated with respect to x'.
struct SmartLoss {
  const Motion* clean = nullptr;
  const Skeleton* skeleton = nullptr;
  double mix_weight = 0.6;
  PerceptualConfig perceptual;
};

using LossSpec = std::variant<CrossEntropyLoss, SmartLoss>;

double evaluate_loss(const ClassifierModel& model, const Motion& motion, const LossSpec& loss);
Frames input_gradient(const ClassifierModel& model, const Motion& motion, const LossSpec& loss);
/// Throws CapabilityError for handles without white-box access.
Frames input_gradient(const ClassifierHandle& handle, const Motion& motion, const LossSpec& loss);

// ---------------------------------------------------------------- datasets

enum class Split { kTrain, kTest };

struct LabeledDataset {
  Skeleton skeleton;
  std::vector<Motion> motions;
  std::vector<int> labels;
  int classes = 0;
  Split split = Split::kTrain;
  std::uint64_t seed = 0;

  std::size_t size() const { return motions.size(); }
  int frames() const { return motions.empty() ? 0 : static_cast<int>(motions.front().frame_count()); }
};

struct SyntheticConfig {
  int classes = 4;
  int per_class = 30;
  int frames = 30;
  std::uint64_t seed = 1;
  /// All magnitudes below are fractions of each joint's half range.
  double amplitude = 0.45;
  double amplitude_jitter = 0.15;
  double class_offset = 0.2;
  double noise = 0.05;
};

/// Each class is a family of per-dof sinusoids (class frequency, per-dof
/// amplitude/phase/offset templates) around the middle of each joint range.
/// Templates are shared by both splits; per-sample jitter and noise come
/// from a split-specific stream. Motions are stored in position space.
LabeledDataset generate_synthetic_dataset(const Skeleton& skeleton, const SyntheticConfig& cfg,
                                          Split split = Split::kTrain);

// ---------------------------------------------------------------- training

struct TrainConfig {
  std::vector<int> hidden{64, 32};
  int epochs = 40;
  int batch_size = 16;
  double learning_rate = 2e-3;
  std::uint64_t seed = 7;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

struct TrainingRun {
  ClassifierModel model;
  std::vector<EpochStats> epochs;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

/// One weighted cross-entropy term of a training step, averaged over its
/// samples.
struct WeightedBatch {
  double weight = 0.0;
  std::vector<const Motion*> motions;
  std::vector<int> labels;
};

using BatchAugmenter = std::function<void(const ClassifierModel& model,
                                          std::span<const std::size_t> batch,
                                          std::vector<WeightedBatch>& terms)>;
using EpochHook = std::function<void(const ClassifierModel& model, int epoch)>;

/// Normalization from the training set plus seeded Xavier initialization.
ClassifierModel initial_model(const LabeledDataset& train, const TrainConfig& cfg);

/// Mini-batch Adam on clean_weight * CE(clean batch) plus any terms the
/// augmenter appends. Deterministic given cfg.seed. Throws DivergenceError
/// when the loss becomes non-finite.
TrainingRun fit_classifier(const LabeledDataset& train, const TrainConfig& cfg, double clean_weight,
                           const BatchAugmenter& augment = {}, const EpochHook& before_epoch = {},
                           const LabeledDataset* test = nullptr);

TrainingRun train_classifier(const LabeledDataset& train, const TrainConfig& cfg,
                             const LabeledDataset* test = nullptr);

double accuracy(const ClassifierModel& model, const LabeledDataset& data);

}  // namespace mgmw
