#include "mgmw/defense.hpp"

#include "mgmw/batch.hpp"
#include "mgmw/errors.hpp"
#include "mgmw/logging.hpp"
#include "mgmw/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>

namespace mgmw {

// ---------------------------------------------------------------- SMART

SmartResult smart_attack(const ClassifierModel& model, const Motion& x, int label, const Skeleton& skeleton,
                         const SmartConfig& cfg, SmartMode mode) {
  if (cfg.iterations < 0 || !(cfg.step > 0.0)) throw ConfigError("SMART needs iterations >= 0 and step > 0");
  const SmartLoss loss{&x, &skeleton, mode == SmartMode::kOn ? cfg.on_weight : cfg.off_weight, cfg.perceptual};
  const CrossEntropyLoss fallback{label};

  SmartResult out;
  out.motion = x;
  double current = evaluate_loss(model, out.motion, loss);
  out.losses.push_back(current);
  for (int it = 0; it < cfg.iterations; ++it) {
    Frames g = input_gradient(model, out.motion, loss);
    if (!g.allFinite()) throw DivergenceError("SMART gradient is non-finite");
    if (g.cwiseAbs().maxCoeff() == 0.0) g = -input_gradient(model, out.motion, fallback);
    const Frames direction = g.array().sign().matrix();
    if (direction.cwiseAbs().maxCoeff() == 0.0) break;

    bool accepted = false;
    double step = cfg.step;
    for (int h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
      Motion candidate = out.motion;
      candidate.frames -= step * direction;
      const double value = evaluate_loss(model, candidate, loss);
      if (value <= current) {
        out.motion = std::move(candidate);
        current = value;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++out.accepted_steps;
    out.losses.push_back(current);
  }
  out.adversarial = argmax(predict_logits(model, out.motion)) != label;
  return out;
}

// ---------------------------------------------------------------- sampling

const char* to_string(SamplerKind kind) { return kind == SamplerKind::kBasar ? "basar" : "smart"; }

SamplerKind parse_sampler(const std::string& text) {
  if (text == "basar") return SamplerKind::kBasar;
  if (text == "smart") return SamplerKind::kSmart;
  throw ConfigError("unknown sampler '" + text + "'");
}

AttackConfig default_on_attack() {
  AttackConfig cfg;
  cfg.max_iterations = 500;
  cfg.manifold_projection = true;
  cfg.mp_every = 100;
  return cfg;
}

AttackConfig default_off_attack() {
  AttackConfig cfg;
  cfg.max_iterations = 1;
  cfg.manifold_projection = false;
  return cfg;
}

namespace {

using AttackRunner = std::vector<AttackResult> (*)(ClassifierHandle&, std::span<const Motion>, std::span<const int>,
                                                   const LabeledDataset&, const AttackConfig&, int);

std::vector<AttackResult> run_parallel(ClassifierHandle& h, std::span<const Motion> m, std::span<const int> l,
                                       const LabeledDataset& pool, const AttackConfig& cfg, int workers) {
  return attack_batch(h, m, l, pool, pool.skeleton, cfg, workers);
}

std::vector<AttackResult> run_serial(ClassifierHandle& h, std::span<const Motion> m, std::span<const int> l,
                                     const LabeledDataset& pool, const AttackConfig& cfg, int) {
  return attack_batch_serial(h, m, l, pool, pool.skeleton, cfg);
}

void finish_stats(SamplerStats& s, double on_sum, double off_sum) {
  s.on_mean_deviation = s.on_accepted ? on_sum / static_cast<double>(s.on_accepted) : 0.0;
  s.off_mean_deviation = s.off_accepted ? off_sum / static_cast<double>(s.off_accepted) : 0.0;
}

bool on_manifold(const Skeleton& skeleton, const Motion& clean, const Motion& adv, const ManifoldTolerances& tol) {
  Motion reference;
  const Motion* ref = nullptr;
  if (clean.representation == Representation::kPosition) {
    reference = inverse_kinematics(skeleton, clean).angles;
    ref = &reference;
  }
  return check_on_manifold(skeleton, adv, tol, ref).on_manifold;
}

AdversarySets sample_basar(const ClassifierModel& model, std::span<const Motion> motions, std::span<const int> labels,
                           const LabeledDataset& pool, const SamplerConfig& cfg, std::uint64_t seed, bool want_on,
                           bool want_off, int workers, AttackRunner runner) {
  AdversarySets sets;
  sets.on.resize(motions.size());
  sets.off.resize(motions.size());
  sets.stats.attempted = motions.size();
  BuiltinHandle handle(std::make_shared<const ClassifierModel>(model));
  double on_sum = 0.0, off_sum = 0.0;

  if (want_on) {
    AttackConfig on = cfg.on_attack;
    on.seed = derive_seed(seed, "on");
    const auto results = runner(handle, motions, labels, pool, on, workers);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const AttackResult& r = results[i];
      if (!r.attacked() || !r.verified) {
        ++sets.stats.failures;
        continue;
      }
      if (!on_manifold(pool.skeleton, motions[i], r.motion, cfg.tolerances)) {
        ++sets.stats.on_rejected_off_manifold;
        continue;
      }
      on_sum += attack_distance(motions[i], r.motion);
      sets.on[i] = r.motion;
      ++sets.stats.on_accepted;
    }
  }
  if (want_off) {
    AttackConfig off = cfg.off_attack;
    off.seed = derive_seed(seed, "off");
    const auto results = runner(handle, motions, labels, pool, off, workers);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const AttackResult& r = results[i];
      if (!r.attacked() || !r.verified) {
        ++sets.stats.failures;
        continue;
      }
      off_sum += attack_distance(motions[i], r.motion);
      sets.off[i] = r.motion;
      ++sets.stats.off_accepted;
    }
  }
  finish_stats(sets.stats, on_sum, off_sum);
  return sets;
}

struct SmartItem {
  std::optional<Motion> on, off;
  bool rejected = false;
};

SmartItem smart_item(const ClassifierModel& model, const Motion& x, int label, const LabeledDataset& pool,
                     const SamplerConfig& cfg, bool want_on, bool want_off) {
  SmartItem item;
  if (want_on) {
    SmartResult r = smart_attack(model, x, label, pool.skeleton, cfg.smart, SmartMode::kOn);
    if (on_manifold(pool.skeleton, x, r.motion, cfg.tolerances)) {
      item.on = std::move(r.motion);
    } else {
      item.rejected = true;
    }
  }
  if (want_off) item.off = smart_attack(model, x, label, pool.skeleton, cfg.smart, SmartMode::kOff).motion;
  return item;
}

AdversarySets collect_smart(std::vector<SmartItem>& items, std::span<const Motion> motions) {
  AdversarySets sets;
  sets.stats.attempted = items.size();
  double on_sum = 0.0, off_sum = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].rejected) ++sets.stats.on_rejected_off_manifold;
    if (items[i].on) {
      on_sum += attack_distance(motions[i], *items[i].on);
      ++sets.stats.on_accepted;
    }
    if (items[i].off) {
      off_sum += attack_distance(motions[i], *items[i].off);
      ++sets.stats.off_accepted;
    }
    sets.on.push_back(std::move(items[i].on));
    sets.off.push_back(std::move(items[i].off));
  }
  finish_stats(sets.stats, on_sum, off_sum);
  return sets;
}

void check_batch(std::span<const Motion> motions, std::span<const int> labels) {
  if (motions.size() != labels.size()) throw DimensionError("sampler batch needs one label per motion");
}

AdversarySets sample_impl(const ClassifierModel& model, std::span<const Motion> motions, std::span<const int> labels,
                          const LabeledDataset& pool, const SamplerConfig& cfg, std::uint64_t seed, bool want_on,
                          bool want_off, int workers, bool parallel) {
  check_batch(motions, labels);
  if (cfg.kind == SamplerKind::kBasar) {
    return sample_basar(model, motions, labels, pool, cfg, seed, want_on, want_off, workers,
                        parallel ? run_parallel : run_serial);
  }
  std::vector<SmartItem> items(motions.size());
  if (parallel) {
    if (workers <= 0) workers = default_workers();
    std::vector<std::exception_ptr> errors(motions.size());
    const auto count = static_cast<std::int64_t>(motions.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        items[i] = smart_item(model, motions[i], labels[i], pool, cfg, want_on, want_off);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < motions.size(); ++i) {
      items[i] = smart_item(model, motions[i], labels[i], pool, cfg, want_on, want_off);
    }
  }
  return collect_smart(items, motions);
}

}  // namespace

AdversarySets sample_adversaries(const ClassifierModel& model, std::span<const Motion> motions,
                                 std::span<const int> labels, const LabeledDataset& pool, const SamplerConfig& cfg,
                                 std::uint64_t seed, int workers) {
  return sample_impl(model, motions, labels, pool, cfg, seed, true, true, workers, true);
}

AdversarySets sample_adversaries_serial(const ClassifierModel& model, std::span<const Motion> motions,
                                        std::span<const int> labels, const LabeledDataset& pool,
                                        const SamplerConfig& cfg, std::uint64_t seed) {
  return sample_impl(model, motions, labels, pool, cfg, seed, true, true, 1, false);
}

// ---------------------------------------------------------------- MMAT

std::vector<std::string> validate(const DefenseConfig& cfg) {
  std::vector<std::string> errors;
  if (!(cfg.mu_on >= 0.0)) errors.push_back("mu_on: must be >= 0");
  if (!(cfg.mu_off >= 0.0)) errors.push_back("mu_off: must be >= 0");
  if (!(cfg.mu_clean() >= 0.0)) errors.push_back("mu_on + mu_off: must not exceed 1");
  if (cfg.resample_every < 1) errors.push_back("resample_every: must be >= 1");
  if (cfg.train.epochs < 0) errors.push_back("train.epochs: must be >= 0");
  if (cfg.train.batch_size < 1) errors.push_back("train.batch_size: must be >= 1");
  if (!(cfg.train.learning_rate > 0.0)) errors.push_back("train.learning_rate: must be > 0");
  for (const auto& e : validate(cfg.sampler.on_attack)) errors.push_back("sampler.on_attack." + e);
  for (const auto& e : validate(cfg.sampler.off_attack)) errors.push_back("sampler.off_attack." + e);
  if (cfg.sampler.on_attack.max_iterations < 1) errors.push_back("sampler.on_attack.max_iterations: must be >= 1");
  if (cfg.sampler.off_attack.max_iterations < 1) errors.push_back("sampler.off_attack.max_iterations: must be >= 1");
  if (cfg.sampler.smart.iterations < 1) errors.push_back("sampler.smart.iterations: must be >= 1");
  if (!(cfg.sampler.smart.step > 0.0)) errors.push_back("sampler.smart.step: must be > 0");
  return errors;
}

DefenseRun mmat_train(const LabeledDataset& train, const DefenseConfig& cfg, const LabeledDataset* test) {
  if (auto errors = validate(cfg); !errors.empty()) throw ConfigError("invalid defense config: " + errors.front());
  DefenseRun run;
  const bool want_on = cfg.mu_on > 0.0;
  const bool want_off = cfg.mu_off > 0.0;
  if (!want_on && !want_off) {
    run.training = fit_classifier(train, cfg.train, cfg.mu_clean(), {}, {}, test);
    return run;
  }

  AdversarySets sets;
  const std::uint64_t sampling_seed = derive_seed(cfg.train.seed, "adversaries");
  EpochHook resample = [&](const ClassifierModel& model, int epoch) {
    if (epoch % cfg.resample_every != 0) return;
    sets = sample_impl(model, train.motions, train.labels, train, cfg.sampler,
                       derive_seed(sampling_seed, static_cast<std::uint64_t>(epoch)), want_on, want_off, cfg.workers,
                       true);
    logger().info("mmat epoch {}: on {} (rejected {}), off {}, failures {}", epoch, sets.stats.on_accepted,
                  sets.stats.on_rejected_off_manifold, sets.stats.off_accepted, sets.stats.failures);
    run.rounds.push_back({epoch, sets.stats});
  };
  BatchAugmenter augment = [&](const ClassifierModel&, std::span<const std::size_t> batch,
                               std::vector<WeightedBatch>& terms) {
    WeightedBatch on{cfg.mu_on, {}, {}};
    WeightedBatch off{cfg.mu_off, {}, {}};
    // A member without an adversary contributes its clean motion: x lies in
    // the neighbourhood both maxima range over.
    for (std::size_t i : batch) {
      if (want_on) {
        on.motions.push_back(sets.on[i] ? &*sets.on[i] : &train.motions[i]);
        on.labels.push_back(train.labels[i]);
      }
      if (want_off) {
        off.motions.push_back(sets.off[i] ? &*sets.off[i] : &train.motions[i]);
        off.labels.push_back(train.labels[i]);
      }
    }
    if (want_on) terms.push_back(std::move(on));
    if (want_off) terms.push_back(std::move(off));
  };
  run.training = fit_classifier(train, cfg.train, cfg.mu_clean(), augment, resample, test);
  return run;
}

// ---------------------------------------------------------------- Gaussian smoothing

Motion temporal_filter(const Motion& motion, const TemporalKernel& kernel) {
  Motion out = motion;
  const Eigen::Index n = motion.frame_count();
  for (Eigen::Index t = 0; t < n; ++t) {
    out.frames.row(t).setZero();
    for (int k = 0; k < 5; ++k) {
      const Eigen::Index s = std::clamp<Eigen::Index>(t + k - 2, 0, n - 1);
      out.frames.row(t) += kernel[k] * motion.frames.row(s);
    }
  }
  return out;
}

TrainingRun gaussian_smoothing_train(const LabeledDataset& train, const SmoothingConfig& cfg,
                                     const LabeledDataset* test) {
  if (!(cfg.sigma >= 0.0)) throw ConfigError("sigma: must be >= 0");
  double mass = 0.0;
  for (double k : cfg.kernel) {
    if (!(k >= 0.0)) throw ConfigError("kernel: entries must be >= 0");
    mass += k;
  }
  if (std::abs(mass - 1.0) > 1e-12) throw ConfigError("kernel: entries must sum to 1");

  Rng noise_rng(derive_seed(cfg.train.seed, "gs-noise"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Motion> noisy;
  BatchAugmenter augment = [&](const ClassifierModel&, std::span<const std::size_t> batch,
                               std::vector<WeightedBatch>& terms) {
    noisy.clear();
    noisy.reserve(batch.size());
    WeightedBatch term{1.0, {}, {}};
    for (std::size_t i : batch) {
      Motion m = train.motions[i];
      for (Eigen::Index e = 0; e < m.frames.size(); ++e) m.frames.data()[e] += cfg.sigma * normal(noise_rng);
      noisy.push_back(temporal_filter(m, cfg.kernel));
    }
    for (std::size_t b = 0; b < batch.size(); ++b) {
      term.motions.push_back(&noisy[b]);
      term.labels.push_back(train.labels[batch[b]]);
    }
    terms.push_back(std::move(term));
  };
  return fit_classifier(train, cfg.train, 1.0, augment, {}, test);
}

// ---------------------------------------------------------------- robustness

RobustnessReport robustness_probe(const ClassifierModel& model, const LabeledDataset& data,
                                  const LabeledDataset& pool, const AttackConfig& cfg, std::size_t count,
                                  int workers) {
  RobustnessReport report;
  report.clean_accuracy = accuracy(model, data);
  std::vector<Motion> motions;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size() && motions.size() < count; ++i) {
    if (argmax(predict_logits(model, data.motions[i])) != data.labels[i]) continue;
    motions.push_back(data.motions[i]);
    labels.push_back(data.labels[i]);
  }
  if (motions.empty()) throw Error("robustness probe: no correctly classified motions");
  BuiltinHandle handle(std::make_shared<const ClassifierModel>(model));
  report.results = attack_batch(handle, motions, labels, pool, data.skeleton, cfg, workers);
  std::vector<MotionPair> pairs;
  for (std::size_t i = 0; i < motions.size(); ++i) {
    if (report.results[i].attacked() && report.results[i].verified) {
      pairs.push_back({&motions[i], &report.results[i].motion});
    }
  }
  if (pairs.empty()) throw Error("robustness probe: no successful attacks");
  MetricsOptions options;
  options.angles = false;
  report.metrics = compute_metrics(pairs, data.skeleton, options);
  attach_attack_stats(report.metrics, report.results);
  return report;
}

}  // namespace mgmw
