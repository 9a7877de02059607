#include "mgmw/metrics.hpp"

#include "mgmw/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mgmw {
namespace {

Motion positions_of(const Skeleton& skeleton, const Motion& m) {
  require_matches(skeleton, m);
  return m.representation == Representation::kPosition ? m : forward_kinematics(skeleton, m);
}

}  // namespace

SampleMetrics sample_metrics(const Motion& clean, const Motion& adversarial, const Skeleton& skeleton,
                             const MetricsOptions& options) {
  if (clean.representation != adversarial.representation || clean.frames.rows() != adversarial.frames.rows() ||
      clean.frames.cols() != adversarial.frames.cols()) {
    throw DimensionError("metric pair differs in shape or representation");
  }
  const Motion x = positions_of(skeleton, clean);
  const Motion y = positions_of(skeleton, adversarial);
  const double n = static_cast<double>(x.frame_count());

  SampleMetrics s;
  s.l2 = (x.frames - y.frames).norm();
  s.deviation = s.l2 / n;
  s.acceleration = (second_derivative(x.frames) - second_derivative(y.frames)).norm() / n;

  const Frames bx = bone_lengths(skeleton, x);
  const Frames by = bone_lengths(skeleton, y);
  s.bone_ratio = ((bx - by).array().abs() / bx.array()).mean();

  if (options.angles) {
    Motion ax, ay;
    if (clean.representation == Representation::kAngle) {
      ax = clean;
      ay = adversarial;
    } else {
      ax = inverse_kinematics(skeleton, clean).angles;
      // Identical positions get identical angles rather than a second fit.
      ay = adversarial.frames == clean.frames ? ax : inverse_kinematics(skeleton, adversarial, &ax).angles;
    }
    s.angular_acceleration = (second_derivative(ax.frames) - second_derivative(ay.frames)).norm() / n;
    s.on_manifold = check_on_manifold(skeleton, adversarial, options.tolerances, &ax).on_manifold;
  }
  return s;
}

MetricsReport compute_metrics(std::span<const MotionPair> pairs, const Skeleton& skeleton,
                              const MetricsOptions& options) {
  if (pairs.empty()) throw Error("compute_metrics needs at least one pair");
  MetricsReport r;
  r.samples = pairs.size();
  const double count = static_cast<double>(pairs.size());
  double alpha = 0.0, om = 0.0;
  for (const MotionPair& p : pairs) {
    if (!p.clean || !p.adversarial) throw Error("compute_metrics: null motion in pair");
    SampleMetrics s = sample_metrics(*p.clean, *p.adversarial, skeleton, options);
    r.l += s.deviation / count;
    r.delta_a += s.acceleration / count;
    r.bone_ratio += s.bone_ratio / count;
    if (s.angular_acceleration) alpha += *s.angular_acceleration / count;
    if (s.on_manifold) om += (*s.on_manifold ? 1.0 : 0.0) / count;
    r.per_sample.push_back(std::move(s));
  }
  if (options.angles) {
    r.delta_alpha = alpha;
    r.on_manifold = om;
  }
  return r;
}

void attach_attack_stats(MetricsReport& report, std::span<const AttackResult> results) {
  std::size_t attacked = 0, succeeded = 0;
  double queries = 0.0;
  for (const AttackResult& a : results) {
    if (!a.attacked()) continue;
    ++attacked;
    if (a.verified) ++succeeded;
    queries += static_cast<double>(a.queries);
  }
  if (attacked == 0) return;
  report.success_rate = static_cast<double>(succeeded) / static_cast<double>(attacked);
  report.mean_queries = queries / static_cast<double>(attacked);
}

Eigen::MatrixXi confusion_matrix(std::span<const std::pair<int, int>> records, int classes) {
  if (classes < 0) throw Error("confusion_matrix: negative class count");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(classes, classes);
  for (const auto& [from, to] : records) {
    if (from < 0 || from >= classes || to < 0 || to >= classes) throw Error("confusion_matrix: label out of range");
    ++m(from, to);
  }
  return m;
}

DeviationHistogram deviation_histogram(std::span<const SampleMetrics> samples, const Bucketing& bucketing) {
  if (!(bucketing.width > 0.0) || bucketing.count < 1) throw Error("deviation_histogram: invalid bucketing");
  DeviationHistogram h{bucketing, std::vector<std::size_t>(bucketing.count), std::vector<std::size_t>(bucketing.count)};
  for (const SampleMetrics& s : samples) {
    const double slot = std::floor(s.l2 / bucketing.width);
    const auto b = static_cast<std::size_t>(std::clamp(slot, 0.0, static_cast<double>(bucketing.count - 1)));
    (s.on_manifold.value_or(false) ? h.on_manifold : h.off_manifold)[b] += 1;
  }
  return h;
}

bool metrics_stabilized(std::span<const double> values, double tolerance) {
  if (values.size() < 2) return false;
  auto mean = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double half = mean(values.first(values.size() / 2));
  const double full = mean(values);
  if (full == 0.0) return half == 0.0;
  return std::abs(full - half) / std::abs(full) < tolerance;
}

}  // namespace mgmw
