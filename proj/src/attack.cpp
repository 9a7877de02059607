#include "mgmw/attack.hpp"

#include "mgmw/errors.hpp"
#include "mgmw/logging.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mgmw {

const char* to_string(AttackMode mode) {
  return mode == AttackMode::kUntargeted ? "untargeted" : "targeted";
}

AttackMode parse_attack_mode(const std::string& text) {
  if (text == "untargeted") return AttackMode::kUntargeted;
  if (text == "targeted") return AttackMode::kTargeted;
  throw ConfigError("unknown attack mode '" + text + "'");
}

const char* to_string(AttackStatus status) {
  switch (status) {
    case AttackStatus::kSuccess: return "success";
    case AttackStatus::kBudgetExhausted: return "budget_exhausted";
    case AttackStatus::kSkippedMisclassified: return "skipped_misclassified";
    case AttackStatus::kInitFailure: return "init_failure";
  }
  return "?";
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kNone: return "none";
    case StopReason::kEpsilon: return "epsilon";
    case StopReason::kIterations: return "iterations";
    case StopReason::kExplorationExhausted: return "exploration_exhausted";
    case StopReason::kProbeExhausted: return "probe_exhausted";
    case StopReason::kProjectionExhausted: return "projection_exhausted";
    case StopReason::kDegenerate: return "degenerate";
    case StopReason::kBudget: return "budget";
  }
  return "?";
}

double AttackConfig::resolved_epsilon() const {
  if (epsilon) return *epsilon;
  return mode == AttackMode::kUntargeted ? 0.1 : 0.5;
}

std::vector<std::string> validate(const AttackConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.mode == AttackMode::kTargeted && cfg.target_class < 0) errors.push_back("target_class: required for targeted mode");
  if (cfg.max_iterations < 0) errors.push_back("max_iterations: must be >= 0");
  if (!(cfg.resolved_epsilon() > 0.0)) errors.push_back("epsilon: must be > 0");
  if (!(cfg.lambda > 0.0)) errors.push_back("lambda: must be > 0");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0)) errors.push_back("beta1: must lie in (0, 1)");
  if (!(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) errors.push_back("beta2: must lie in (0, 1)");
  if (!(cfg.beta_cap > 0.0 && cfg.beta_cap < 1.0)) errors.push_back("beta_cap: must lie in (0, 1)");
  if (cfg.samples < 1) errors.push_back("samples: must be >= 1");
  if (cfg.lambda_cap && !(*cfg.lambda_cap > 0.0)) errors.push_back("lambda_cap: must be > 0");
  if (cfg.mp_every < 1) errors.push_back("mp_every: must be >= 1");
  if (cfg.projection.dynamics_weight < 0.0) errors.push_back("projection.dynamics_weight: must be >= 0");
  if (cfg.query_budget && *cfg.query_budget == 0) errors.push_back("query_budget: must be >= 1");
  if (!(cfg.min_step > 0.0)) errors.push_back("min_step: must be > 0");
  for (double w : cfg.joint_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      errors.push_back("joint_weights: entries must be finite and >= 0");
      break;
    }
  }
  return errors;
}

Eigen::VectorXd dof_weights(const Skeleton& skeleton, Representation representation,
                            const std::vector<double>& joint_weights) {
  const int joints = skeleton.joint_count();
  if (!joint_weights.empty() && static_cast<int>(joint_weights.size()) != joints) {
    throw DimensionError("joint_weights needs one entry per joint");
  }
  auto weight = [&](int j) { return joint_weights.empty() ? (skeleton.spinal(j) ? 0.0 : 1.0) : joint_weights[j]; };
  if (representation == Representation::kPosition) {
    Eigen::VectorXd w(3 * joints);
    for (int j = 0; j < joints; ++j) w.segment<3>(3 * j).setConstant(weight(j));
    return w;
  }
  Eigen::VectorXd w(skeleton.angle_dof_count());
  for (int d = 0; d < w.size(); ++d) w[d] = weight(skeleton.dof_joint(d));
  return w;
}

double attack_distance(const Motion& x, const Motion& x_adv) { return motion_distance(x, x_adv); }

std::vector<PerturbationSample> random_exploration(const Motion& x_prime, const Motion& x, double lambda,
                                                   const Eigen::VectorXd& weights, Rng& rng, int samples) {
  if (x_prime.frames.rows() != x.frames.rows() || x_prime.frames.cols() != x.frames.cols()) {
    throw DimensionError("exploration motions differ in shape");
  }
  if (weights.size() != x.frames.cols()) throw DimensionError("exploration weights need one entry per dof");
  std::vector<PerturbationSample> out;
  const Frames diff = x.frames - x_prime.frames;
  const double gap = diff.norm();
  if (gap == 0.0) return out;
  const Frames d = diff / gap;
  std::normal_distribution<double> normal;
  out.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    PerturbationSample p;
    p.raw.resize(d.rows(), d.cols());
    for (Eigen::Index i = 0; i < p.raw.size(); ++i) p.raw.data()[i] = normal(rng);
    const double r_norm = p.raw.norm();
    p.scaled = r_norm > 0.0 ? Frames(p.raw * (lambda * gap / r_norm)) : Frames::Zero(d.rows(), d.cols());
    p.direction = d;
    p.delta = p.scaled - (p.scaled.cwiseProduct(d).sum()) * d;
    p.candidate = x_prime;
    p.candidate.frames.array() += p.delta.array().rowwise() * weights.transpose().array();
    out.push_back(std::move(p));
  }
  return out;
}

double adapt_lambda(double success_rate, double lambda, std::optional<double> cap) {
  if (success_rate < 0.4) {
    lambda *= 0.9;
  } else if (success_rate > 0.6) {
    lambda *= 1.1;
  }
  return cap ? std::min(lambda, *cap) : lambda;
}

double adapt_beta(bool success, double beta, double cap) {
  return success ? std::min(beta * 1.1, cap) : beta * 0.9;
}

Motion aimed_probe(const Motion& x_prime, const Motion& target, double beta) {
  if (x_prime.frames.rows() != target.frames.rows() || x_prime.frames.cols() != target.frames.cols()) {
    throw DimensionError("probe motions differ in shape");
  }
  Motion out = x_prime;
  out.frames += beta * (target.frames - x_prime.frames);
  return out;
}

int QueryCounter::label(const Motion& motion) {
  if (budget_ && count_ >= *budget_) throw BudgetExhausted{};
  return label_unbudgeted(motion);
}

int QueryCounter::label_unbudgeted(const Motion& motion) {
  const int label = handle_.predict_label(motion);
  ++count_;
  return label;
}

namespace {

std::vector<std::size_t> shuffled(std::vector<std::size_t> v, Rng& rng) {
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

struct ProbeOutcome {
  Motion motion;
  double beta = 0.0;
  bool ok = false;
};

// Shrinks beta until start + beta (target - start) satisfies the condition.
ProbeOutcome probe_until_adversarial(const Motion& start, const Motion& target, double beta, double beta_cap,
                                     double min_step, const LabelCondition& condition, QueryCounter& oracle) {
  for (;;) {
    Motion candidate = aimed_probe(start, target, beta);
    if (condition(oracle.label(candidate))) return {std::move(candidate), adapt_beta(true, beta, beta_cap), true};
    beta = adapt_beta(false, beta, beta_cap);
    if (beta < min_step) return {start, beta, false};
  }
}

}  // namespace

InitResult initialize_adversary(const Motion& x, const LabelCondition& condition, const LabeledDataset& dataset,
                                QueryCounter& oracle, Rng& rng, double beta1, double beta_cap, double min_step) {
  std::vector<std::size_t> preferred, rest;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Motion& m = dataset.motions[i];
    if (m.representation != x.representation || m.frames.rows() != x.frames.rows() ||
        m.frames.cols() != x.frames.cols()) {
      continue;
    }
    (condition(dataset.labels[i]) ? preferred : rest).push_back(i);
  }
  std::vector<std::size_t> order = shuffled(std::move(preferred), rng);
  for (std::size_t i : shuffled(std::move(rest), rng)) order.push_back(i);

  InitResult init;
  for (std::size_t i : order) {
    if (!condition(oracle.label(dataset.motions[i]))) continue;
    ProbeOutcome p = probe_until_adversarial(dataset.motions[i], x, beta1, beta_cap, min_step, condition, oracle);
    init.ok = true;
    init.seed_index = i;
    init.motion = p.ok ? std::move(p.motion) : dataset.motions[i];
    init.beta1 = p.ok ? p.beta : beta1;
    return init;
  }
  return init;
}

namespace {

class Walk {
 public:
  Walk(const Motion& x, const LabelCondition& condition, const Skeleton& skeleton, const AttackConfig& cfg,
       QueryCounter& oracle, AttackResult& result)
      : x_(x),
        condition_(condition),
        cfg_(cfg),
        oracle_(oracle),
        result_(result),
        weights_(dof_weights(skeleton, x.representation, cfg.joint_weights)),
        rng_(cfg.seed),
        lambda_(cfg.lambda),
        beta2_(cfg.beta2) {
    if (cfg.manifold_projection) {
      // Projection output follows the attacked representation.
      ProjectionConfig pc = cfg.projection;
      pc.output = x.representation;
      projector_.emplace(skeleton, x, pc);
    }
  }

  Rng& rng() { return rng_; }

  void start(Motion x0, double beta1) {
    current_ = std::move(x0);
    beta1_ = beta1;
    record(0, false);
  }

  // Runs the iterations; sets result_.stop.
  void run() {
    const double epsilon = cfg_.resolved_epsilon();
    if (attack_distance(x_, current_) < epsilon) {
      result_.stop = StopReason::kEpsilon;
      return;
    }
    for (int k = 1; k <= cfg_.max_iterations; ++k) {
      result_.iterations = k;
      if (!explore_and_probe()) return;
      bool projected = false;
      if (projector_ && k % cfg_.mp_every == 0) {
        projected = true;
        if (!project()) {
          record(k, true);
          result_.stop = StopReason::kProjectionExhausted;
          return;
        }
      }
      record(k, projected);
      if (attack_distance(x_, current_) < epsilon) {
        result_.stop = StopReason::kEpsilon;
        return;
      }
    }
    result_.stop = StopReason::kIterations;
  }

  // One more projection when the walk ended off the projection cadence.
  void finish() {
    if (!projector_ || !cfg_.final_projection || result_.iterations == 0) return;
    if (!result_.trace.empty() && result_.trace.back().projected) return;
    project();
  }

  const Motion& current() const { return current_; }

 private:
  bool explore_and_probe() {
    std::vector<PerturbationSample> samples;
    std::vector<int> labels;
    std::vector<std::size_t> adversarial;
    for (;;) {
      samples = random_exploration(current_, x_, lambda_, weights_, rng_, cfg_.samples);
      if (samples.empty()) {
        result_.stop = StopReason::kDegenerate;
        return false;
      }
      labels.assign(samples.size(), 0);
      adversarial.clear();
      for (std::size_t s = 0; s < samples.size(); ++s) {
        labels[s] = oracle_.label(samples[s].candidate);
        if (condition_(labels[s])) adversarial.push_back(s);
      }
      lambda_ = adapt_lambda(static_cast<double>(adversarial.size()) / static_cast<double>(samples.size()), lambda_,
                             cfg_.lambda_cap);
      if (!adversarial.empty()) break;
      if (lambda_ < cfg_.min_step) {
        result_.stop = StopReason::kExplorationExhausted;
        return false;
      }
    }

    std::vector<std::size_t> picks;
    if (cfg_.mode == AttackMode::kTargeted) {
      std::uniform_int_distribution<std::size_t> pick(0, adversarial.size() - 1);
      picks.push_back(adversarial[pick(rng_)]);
    } else {
      std::map<int, std::vector<std::size_t>> by_class;
      for (std::size_t s : adversarial) by_class[labels[s]].push_back(s);
      for (const auto& [label, members] : by_class) {
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
        picks.push_back(members[pick(rng_)]);
      }
    }

    std::optional<ProbeOutcome> best;
    double best_distance = 0.0;
    for (std::size_t s : picks) {
      ProbeOutcome p = probe_until_adversarial(samples[s].candidate, x_, beta1_, cfg_.beta_cap, cfg_.min_step,
                                               condition_, oracle_);
      const double dist = attack_distance(x_, p.motion);
      if (!best || (p.ok && !best->ok) || (p.ok == best->ok && dist < best_distance)) {
        best_distance = dist;
        best = std::move(p);
      }
    }
    current_ = std::move(best->motion);
    beta1_ = best->beta;
    if (!best->ok) {
      record(result_.iterations, false);
      result_.stop = StopReason::kProbeExhausted;
      return false;
    }
    return true;
  }

  bool project() {
    ProjectionResult pr = projector_->project(current_);
    ++result_.projections;
    if (pr.flagged()) ++result_.flagged_projections;
    const Motion& hat = pr.motion;
    if (condition_(oracle_.label(hat))) {
      current_ = hat;
      beta2_ = adapt_beta(true, beta2_, cfg_.beta_cap);
      return true;
    }
    for (;;) {
      beta2_ = adapt_beta(false, beta2_, cfg_.beta_cap);
      if (beta2_ < cfg_.min_step) return false;
      Motion candidate = aimed_probe(current_, hat, beta2_);
      if (condition_(oracle_.label(candidate))) {
        current_ = std::move(candidate);
        beta2_ = adapt_beta(true, beta2_, cfg_.beta_cap);
        return true;
      }
    }
  }

  void record(int k, bool projected) {
    result_.trace.push_back(
        TraceEntry{k, attack_distance(x_, current_), lambda_, beta1_, beta2_, true, projected, oracle_.count()});
  }

  const Motion& x_;
  LabelCondition condition_;
  const AttackConfig& cfg_;
  QueryCounter& oracle_;
  AttackResult& result_;
  Eigen::VectorXd weights_;
  std::optional<ManifoldProjector> projector_;
  Rng rng_;
  double lambda_;
  double beta1_ = 0.0;
  double beta2_;
  Motion current_;
};

}  // namespace

AttackResult gmw_attack(ClassifierHandle& handle, const Motion& x, int true_label, const LabeledDataset& dataset,
                        const Skeleton& skeleton, const AttackConfig& cfg) {
  if (auto errors = validate(cfg); !errors.empty()) throw ConfigError("invalid attack config: " + errors.front());
  validate_motion(x);
  AttackResult result;
  result.true_label = true_label;
  result.motion = x;
  const LabelCondition condition{cfg.mode, true_label, cfg.target_class};
  QueryCounter oracle(handle, cfg.query_budget);

  Walk walk(x, condition, skeleton, cfg, oracle, result);
  try {
    result.original_label = oracle.label(x);
    if (result.original_label != true_label) {
      result.status = AttackStatus::kSkippedMisclassified;
      result.final_label = result.original_label;
      result.queries = oracle.count();
      return result;
    }
    InitResult init = initialize_adversary(x, condition, dataset, oracle, walk.rng(), cfg.beta1, cfg.beta_cap,
                                           cfg.min_step);
    if (!init.ok) {
      result.status = AttackStatus::kInitFailure;
      result.final_label = result.original_label;
      result.queries = oracle.count();
      return result;
    }
    walk.start(std::move(init.motion), init.beta1);
    walk.run();
    walk.finish();
  } catch (const QueryCounter::BudgetExhausted&) {
    if (walk.current().frames.size() == 0) {
      result.status = AttackStatus::kInitFailure;
      result.queries = oracle.count();
      return result;
    }
    result.status = AttackStatus::kBudgetExhausted;
    result.stop = StopReason::kBudget;
  }
  result.motion = walk.current();
  result.final_label = oracle.label_unbudgeted(result.motion);
  result.verified = condition(result.final_label);
  result.queries = oracle.count();
  logger().debug("gmw: status={} stop={} iterations={} queries={} l={:.6g}", to_string(result.status),
                 to_string(result.stop), result.iterations, result.queries, attack_distance(x, result.motion));
  return result;
}

}  // namespace mgmw
