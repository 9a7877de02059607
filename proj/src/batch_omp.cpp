#include "mgmw/batch.hpp"

#include "mgmw/errors.hpp"

#include <omp.h>

#include <exception>

namespace mgmw {

int default_workers() { return omp_get_max_threads(); }

std::vector<AttackResult> attack_batch(ClassifierHandle& handle, std::span<const Motion> motions,
                                       std::span<const int> labels, const LabeledDataset& dataset,
                                       const Skeleton& skeleton, const AttackConfig& cfg, int workers) {
  if (motions.size() != labels.size()) throw DimensionError("attack batch needs one label per motion");
  if (workers <= 0) workers = default_workers();
  const auto count = static_cast<std::int64_t>(motions.size());
  std::vector<AttackResult> out(motions.size());
  std::vector<std::exception_ptr> errors(motions.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      AttackConfig item = cfg;
      item.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
      out[i] = gmw_attack(handle, motions[i], labels[i], dataset, skeleton, item);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace mgmw
