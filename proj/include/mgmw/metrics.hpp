#pragma once

#include "mgmw/attack.hpp"
#include "mgmw/kinematics.hpp"
#include "mgmw/skeleton.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mgmw {

struct MotionPair {
  const Motion* clean = nullptr;
  const Motion* adversarial = nullptr;
};

struct MetricsOptions {
  ManifoldTolerances tolerances;
  /// Fit angles by IK for position motions (needed for angular acceleration
  /// and the on-manifold test).
  bool angles = true;
};

/// Per-pair quantities. Positions come from FK for angle motions;
/// accelerations are per frame^2.
struct SampleMetrics {
  double deviation = 0.0;        // ||x - x'||_F / n
  double l2 = 0.0;               // ||x - x'||_F
  double acceleration = 0.0;     // ||x'' - x'''||_F / n
  std::optional<double> angular_acceleration;
  double bone_ratio = 0.0;       // mean over frames and bones of |B - B'| / B
  std::optional<bool> on_manifold;
};

struct MetricsReport {
  std::size_t samples = 0;
  double l = 0.0;
  double delta_a = 0.0;
  std::optional<double> delta_alpha;
  double bone_ratio = 0.0;  // fraction
  std::optional<double> on_manifold;
  std::optional<double> success_rate;
  std::optional<double> mean_queries;
  std::vector<SampleMetrics> per_sample;
};

/// Means over the batch of the per-pair quantities. Bone lengths of the
/// clean motion are the per-frame reference. Throws Error on an empty batch.
MetricsReport compute_metrics(std::span<const MotionPair> pairs, const Skeleton& skeleton,
                              const MetricsOptions& options = {});

SampleMetrics sample_metrics(const Motion& clean, const Motion& adversarial, const Skeleton& skeleton,
                             const MetricsOptions& options = {});

/// Success rate and mean queries over attacked (non-skipped) results.
void attach_attack_stats(MetricsReport& report, std::span<const AttackResult> results);

/// rows = original label, columns = final label.
Eigen::MatrixXi confusion_matrix(std::span<const std::pair<int, int>> records, int classes);

struct Bucketing {
  double width = 0.1;
  int count = 20;  // the last bucket is open-ended
};

struct DeviationHistogram {
  Bucketing bucketing;
  std::vector<std::size_t> on_manifold;
  std::vector<std::size_t> off_manifold;
};

/// Histogram of per-pair l2 deviations split by the on-manifold verdict.
/// Pairs without a verdict count as off-manifold.
DeviationHistogram deviation_histogram(std::span<const SampleMetrics> samples, const Bucketing& bucketing = {});

/// True when the running mean of `values` changed by less than `tolerance`
/// (relative) between the first half and the whole sequence.
bool metrics_stabilized(std::span<const double> values, double tolerance = 0.02);

}  // namespace mgmw
