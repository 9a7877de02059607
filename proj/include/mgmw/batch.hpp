#pragma once

#include "mgmw/attack.hpp"

#include <span>
#include <vector>

namespace mgmw {

/// Attacks motions[i] with seed derive_seed(cfg.seed, i). The handle must be
/// safe for concurrent predict_label calls (built-in and external handles
/// are). Results do not depend on the worker count.
std::vector<AttackResult> attack_batch(ClassifierHandle& handle, std::span<const Motion> motions,
                                       std::span<const int> labels, const LabeledDataset& dataset,
                                       const Skeleton& skeleton, const AttackConfig& cfg, int workers = 0);

/// Single-threaded reference for attack_batch.
std::vector<AttackResult> attack_batch_serial(ClassifierHandle& handle, std::span<const Motion> motions,
                                              std::span<const int> labels, const LabeledDataset& dataset,
                                              const Skeleton& skeleton, const AttackConfig& cfg);

/// Worker count used for `workers` <= 0.
int default_workers();

}  // namespace mgmw
