#pragma once

#include "mgmw/attack.hpp"
#include "mgmw/classifier.hpp"
#include "mgmw/metrics.hpp"
#include "mgmw/perceptual.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mgmw {

// ---------------------------------------------------------------- SMART

enum class SmartMode { kOn, kOff };

struct SmartConfig {
  double step = 0.02;  // epsilon of the sign update
  int iterations = 50;
  double on_weight = 0.6;   // loss mix w when sampling on-manifold
  double off_weight = 1.0;  // perceptual term disabled
  PerceptualConfig perceptual;
  /// Step halvings tried before a non-decreasing update ends the run.
  int max_halvings = 10;
};

struct SmartResult {
  Motion motion;
  bool adversarial = false;
  int accepted_steps = 0;
  std::vector<double> losses;  // loss of every accepted iterate, starting at x
};

/// Minimizes w * sum_c p_c(x) log q_c(x') + (1 - w) * L_p(x, x') from x' = x
/// with sign-gradient steps, halving the step until the loss does not
/// increase. At x' = x the classification gradient vanishes, so a zero
/// gradient is replaced by the gradient of log q_y(x') for the true label y.
SmartResult smart_attack(const ClassifierModel& model, const Motion& x, int label, const Skeleton& skeleton,
                         const SmartConfig& cfg, SmartMode mode);

// ---------------------------------------------------------------- sampling

enum class SamplerKind { kBasar, kSmart };

const char* to_string(SamplerKind kind);
SamplerKind parse_sampler(const std::string& text);

/// 500 iterations with projection every 100.
AttackConfig default_on_attack();
/// A single iteration without projection.
AttackConfig default_off_attack();

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kBasar;
  AttackConfig on_attack = default_on_attack();
  AttackConfig off_attack = default_off_attack();
  SmartConfig smart;
  ManifoldTolerances tolerances;
};

struct SamplerStats {
  std::size_t attempted = 0;
  std::size_t on_accepted = 0;
  std::size_t on_rejected_off_manifold = 0;
  std::size_t off_accepted = 0;
  std::size_t failures = 0;  // skipped, init failures, unverified results
  double on_mean_deviation = 0.0;
  double off_mean_deviation = 0.0;
};

/// Index-aligned with the input batch; empty slots mark skipped elements.
struct AdversarySets {
  std::vector<std::optional<Motion>> on;
  std::vector<std::optional<Motion>> off;
  SamplerStats stats;
};

/// On- and off-manifold adversaries of each (motion, label) against
/// `model`. Element i uses seed derive_seed(seed, i). BASAR starts are drawn
/// from `pool`. Every on-manifold member passes check_on_manifold.
AdversarySets sample_adversaries(const ClassifierModel& model, std::span<const Motion> motions,
                                 std::span<const int> labels, const LabeledDataset& pool, const SamplerConfig& cfg,
                                 std::uint64_t seed, int workers = 0);

/// Single-threaded reference for sample_adversaries.
AdversarySets sample_adversaries_serial(const ClassifierModel& model, std::span<const Motion> motions,
                                        std::span<const int> labels, const LabeledDataset& pool,
                                        const SamplerConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------- MMAT

struct DefenseConfig {
  double mu_on = 0.0;
  double mu_off = 0.0;
  SamplerConfig sampler;
  TrainConfig train;
  /// Adversaries are redrawn against the live model every this many epochs.
  int resample_every = 1;
  int workers = 0;

  double mu_clean() const { return 1.0 - mu_on - mu_off; }
};

std::vector<std::string> validate(const DefenseConfig& cfg);

struct SamplingRound {
  int epoch = 0;
  SamplerStats stats;
};

struct DefenseRun {
  TrainingRun training;
  std::vector<SamplingRound> rounds;
};

/// mu_c CE(clean) + mu_on CE(on-manifold) + mu_off CE(off-manifold) per
/// mini-batch. Each adversary term averages over the whole batch; members
/// without an adversary of that kind contribute their clean motion. With
/// mu_on = mu_off = 0 no adversaries are drawn and the result equals
/// train_classifier.
DefenseRun mmat_train(const LabeledDataset& train, const DefenseConfig& cfg, const LabeledDataset* test = nullptr);

// ---------------------------------------------------------------- Gaussian smoothing

using TemporalKernel = std::array<double, 5>;

inline constexpr TemporalKernel kBinomialKernel{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
inline constexpr TemporalKernel kIdentityKernel{0.0, 0.0, 1.0, 0.0, 0.0};

/// Per-dof 1 x 5 convolution along time with edge replication.
Motion temporal_filter(const Motion& motion, const TemporalKernel& kernel = kBinomialKernel);

struct SmoothingConfig {
  double sigma = 0.1;
  TemporalKernel kernel = kBinomialKernel;
  TrainConfig train;
};

/// CE(x) + CE(filter(x + noise)) per sample, noise ~ N(0, sigma^2 I) drawn
/// from a stream derived from the training seed.
TrainingRun gaussian_smoothing_train(const LabeledDataset& train, const SmoothingConfig& cfg,
                                     const LabeledDataset* test = nullptr);

// ---------------------------------------------------------------- robustness

struct RobustnessReport {
  MetricsReport metrics;
  std::vector<AttackResult> results;
  double clean_accuracy = 0.0;
};

/// Attacks the first `count` correctly classified motions of `data` and
/// reports metrics over the attacked ones. BASAR starts come from `pool`.
RobustnessReport robustness_probe(const ClassifierModel& model, const LabeledDataset& data,
                                  const LabeledDataset& pool, const AttackConfig& cfg, std::size_t count,
                                  int workers = 0);

}  // namespace mgmw
