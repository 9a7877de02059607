#include "mgmw/batch.hpp"

#include "mgmw/errors.hpp"

namespace mgmw {

std::vector<AttackResult> attack_batch_serial(ClassifierHandle& handle, std::span<const Motion> motions,
                                              std::span<const int> labels, const LabeledDataset& dataset,
                                              const Skeleton& skeleton, const AttackConfig& cfg) {
  if (motions.size() != labels.size()) throw DimensionError("attack batch needs one label per motion");
  std::vector<AttackResult> out;
  out.reserve(motions.size());
  for (std::size_t i = 0; i < motions.size(); ++i) {
    AttackConfig item = cfg;
    item.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    out.push_back(gmw_attack(handle, motions[i], labels[i], dataset, skeleton, item));
  }
  return out;
}

}  // namespace mgmw
