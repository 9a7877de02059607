// Serial reference vs OpenMP kernels for batch attacks and adversary
// sampling on a small synthetic problem.
#include "mgmw/batch.hpp"
#include "mgmw/defense.hpp"

#include <benchmark/benchmark.h>

#include <memory>

namespace {

struct Fixture {
  mgmw::LabeledDataset data;
  std::shared_ptr<const mgmw::ClassifierModel> model;
  std::vector<mgmw::Motion> motions;
  std::vector<int> labels;

  static mgmw::LabeledDataset make_data() {
    mgmw::SyntheticConfig sc;
    sc.per_class = 10;
    sc.frames = 20;
    return mgmw::generate_synthetic_dataset(mgmw::Skeleton::humanoid(), sc);
  }

  Fixture() : data(make_data()) {
    mgmw::TrainConfig tc;
    tc.epochs = 10;
    model = std::make_shared<const mgmw::ClassifierModel>(mgmw::train_classifier(data, tc).model);
    for (std::size_t i = 0; i < 8; ++i) {
      motions.push_back(data.motions[i * 5]);
      labels.push_back(data.labels[i * 5]);
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

mgmw::AttackConfig attack_config() {
  mgmw::AttackConfig cfg;
  cfg.max_iterations = 20;
  cfg.mp_every = 10;
  cfg.seed = 3;
  return cfg;
}

void BM_attack_serial(benchmark::State& state) {
  const Fixture& f = fixture();
  mgmw::BuiltinHandle handle(f.model);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mgmw::attack_batch_serial(handle, f.motions, f.labels, f.data, f.data.skeleton, attack_config()));
  }
}

void BM_attack_omp(benchmark::State& state) {
  const Fixture& f = fixture();
  mgmw::BuiltinHandle handle(f.model);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mgmw::attack_batch(handle, f.motions, f.labels, f.data, f.data.skeleton,
                                                attack_config(), static_cast<int>(state.range(0))));
  }
}

mgmw::SamplerConfig sampler_config() {
  mgmw::SamplerConfig cfg;
  cfg.on_attack.max_iterations = 20;
  cfg.on_attack.mp_every = 10;
  return cfg;
}

void BM_sample_serial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mgmw::sample_adversaries_serial(*f.model, f.motions, f.labels, f.data, sampler_config(), 5));
  }
}

void BM_sample_omp(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mgmw::sample_adversaries(*f.model, f.motions, f.labels, f.data, sampler_config(), 5,
                                                      static_cast<int>(state.range(0))));
  }
}

}  // namespace

BENCHMARK(BM_attack_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_attack_omp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample_omp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
