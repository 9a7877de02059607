#pragma once

#include "mgmw/attack.hpp"
#include "mgmw/defense.hpp"
#include "mgmw/io.hpp"
#include "mgmw/metrics.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mgmw {

/// Labels, status, query count and per-iteration trace; the adversarial
/// frames are included when `with_motion` is set.
Json attack_result_to_json(const AttackResult& result, bool with_motion = true);
Json metrics_to_json(const MetricsReport& report);
/// Aggregates only; per-sample entries are not stored.
MetricsReport metrics_from_json(const Json& j);
/// Clean accuracy, metrics and per-result summaries without motions.
Json robustness_to_json(const RobustnessReport& report);
Json sampler_stats_to_json(const SamplerStats& stats);
Json training_run_to_json(const TrainingRun& run);

/// Fixed-width table with columns l, da, dalpha, dB/B (%), OM (%), success
/// (%) and mean queries; absent values print as "-".
std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

/// Columns l, da, dB/B (%), Acc (%).
std::string robustness_table(const std::vector<std::pair<std::string, RobustnessReport>>& rows);

std::string confusion_csv(const Eigen::MatrixXi& matrix);
/// bucket_lo,bucket_hi,on_manifold,off_manifold
std::string histogram_csv(const DeviationHistogram& histogram);
/// k,l,lambda,beta1,beta2,projected,queries
std::string trace_csv(const AttackResult& result);

}  // namespace mgmw
