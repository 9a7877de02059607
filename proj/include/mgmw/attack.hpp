#pragma once

#include "mgmw/classifier.hpp"
#include "mgmw/manifold.hpp"
#include "mgmw/motion.hpp"
#include "mgmw/rng.hpp"
#include "mgmw/skeleton.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mgmw {

enum class AttackMode { kUntargeted, kTargeted };

const char* to_string(AttackMode mode);
AttackMode parse_attack_mode(const std::string& text);

struct AttackConfig {
  AttackMode mode = AttackMode::kUntargeted;
  int target_class = -1;
  int max_iterations = 1000;
  /// Stop threshold on l(x', x); unset means 0.1 untargeted, 0.5 targeted.
  std::optional<double> epsilon;
  double lambda = 0.1;
  double beta1 = 0.95;
  double beta2 = 0.95;
  /// Upper bound for beta growth after a successful probe.
  double beta_cap = 0.95;
  int samples = 5;  // q
  /// tau; unset disables the cap.
  std::optional<double> lambda_cap = 0.4;
  /// One weight per joint; empty means 0 for spinal joints and 1 elsewhere.
  std::vector<double> joint_weights;
  bool manifold_projection = true;
  int mp_every = 100;
  /// Project once more on exit when the last iteration did not.
  bool final_projection = true;
  ProjectionConfig projection;
  /// Hard-label queries allowed before the run stops early.
  std::optional<std::uint64_t> query_budget;
  std::uint64_t seed = 0;
  /// Shrink loops give up below this step.
  double min_step = 1e-10;

  double resolved_epsilon() const;
};

/// Human-readable list of violated fields; empty when valid.
std::vector<std::string> validate(const AttackConfig& cfg);

/// Per-dof diagonal of W for the motion's representation.
Eigen::VectorXd dof_weights(const Skeleton& skeleton, Representation representation,
                            const std::vector<double>& joint_weights = {});

/// l(x', x) = ||x - x'||_F / n.
double attack_distance(const Motion& x, const Motion& x_adv);

struct PerturbationSample {
  Motion candidate;  // x' + W delta
  Frames raw;        // r
  Frames scaled;     // R = lambda r / ||r|| ||x - x'||
  Frames direction;  // d = (x - x') / ||x - x'||
  Frames delta;      // R - (R.d) d
};

/// q orthogonal explorations around x_prime. Returns an empty vector when
/// x_prime equals x.
std::vector<PerturbationSample> random_exploration(const Motion& x_prime, const Motion& x, double lambda,
                                                   const Eigen::VectorXd& weights, Rng& rng, int samples);

/// 0.9 lambda below a 40% success rate, 1.1 lambda above 60%, then capped.
double adapt_lambda(double success_rate, double lambda, std::optional<double> cap = std::nullopt);
/// 1.1 beta (capped) on success, 0.9 beta on failure.
double adapt_beta(bool success, double beta, double cap);

/// x' + beta (target - x').
Motion aimed_probe(const Motion& x_prime, const Motion& target, double beta);

/// Hard-label queries of one attack run, optionally capped.
class QueryCounter {
 public:
  QueryCounter(ClassifierHandle& handle, std::optional<std::uint64_t> budget) : handle_(handle), budget_(budget) {}

  /// Throws BudgetExhausted once the budget is spent.
  int label(const Motion& motion);
  /// Ignores the budget.
  int label_unbudgeted(const Motion& motion);
  std::uint64_t count() const { return count_; }

  struct BudgetExhausted {};

 private:
  ClassifierHandle& handle_;
  std::optional<std::uint64_t> budget_;
  std::uint64_t count_ = 0;
};

struct LabelCondition {
  AttackMode mode = AttackMode::kUntargeted;
  int true_label = 0;
  int target_class = -1;

  bool operator()(int label) const {
    return mode == AttackMode::kUntargeted ? label != true_label : label == target_class;
  }
};

struct InitResult {
  bool ok = false;
  Motion motion;            // x'_0
  std::size_t seed_index = 0;  // dataset index of x~_0
  double beta1 = 0.0;       // after the initial update
};

/// Picks a dataset motion satisfying the label condition (dataset labels
/// that already satisfy it are tried first, each group in shuffled order),
/// then probes from it toward x with a shrinking beta1.
InitResult initialize_adversary(const Motion& x, const LabelCondition& condition, const LabeledDataset& dataset,
                                QueryCounter& oracle, Rng& rng, double beta1, double beta_cap, double min_step);

enum class AttackStatus { kSuccess, kBudgetExhausted, kSkippedMisclassified, kInitFailure };
enum class StopReason {
  kNone,
  kEpsilon,
  kIterations,
  kExplorationExhausted,
  kProbeExhausted,
  kProjectionExhausted,
  kDegenerate,
  kBudget
};

const char* to_string(AttackStatus status);
const char* to_string(StopReason reason);

struct TraceEntry {
  int k = 0;
  double distance = 0.0;
  double lambda = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  bool adversarial = true;
  bool projected = false;
  std::uint64_t queries = 0;
};

struct AttackResult {
  AttackStatus status = AttackStatus::kSuccess;
  StopReason stop = StopReason::kNone;
  int true_label = 0;
  int original_label = 0;  // handle's label for x
  int final_label = 0;
  /// x' (the original motion when skipped or failed to initialize).
  Motion motion;
  std::vector<TraceEntry> trace;
  std::uint64_t queries = 0;
  int iterations = 0;
  int projections = 0;
  int flagged_projections = 0;
  /// The returned motion satisfied the label condition on a fresh query.
  bool verified = false;

  bool attacked() const {
    return status == AttackStatus::kSuccess || status == AttackStatus::kBudgetExhausted;
  }
};

/// Guided manifold walk against a hard-label handle. Every accepted iterate
/// satisfies the label condition; the result is re-checked with one query
/// past the budget.
AttackResult gmw_attack(ClassifierHandle& handle, const Motion& x, int true_label, const LabeledDataset& dataset,
                        const Skeleton& skeleton, const AttackConfig& cfg);

}  // namespace mgmw
