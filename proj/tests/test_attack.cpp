#include "mgmw/attack.hpp"
#include "mgmw/batch.hpp"
#include "mgmw/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

using namespace mgmw;

namespace {

struct Fixture {
  Skeleton skeleton;
  LabeledDataset train;
  LabeledDataset test;
  std::shared_ptr<const ClassifierModel> model;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const Skeleton skeleton = Skeleton::humanoid();
    SyntheticConfig dc;
    dc.per_class = 10;
    LabeledDataset train = generate_synthetic_dataset(skeleton, dc, Split::kTrain);
    LabeledDataset test = generate_synthetic_dataset(skeleton, dc, Split::kTest);
    TrainConfig tc;
    tc.epochs = 25;
    auto model = std::make_shared<ClassifierModel>(train_classifier(train, tc).model);
    return Fixture{skeleton, std::move(train), std::move(test), std::move(model)};
  }();
  return f;
}

double inner(const Frames& a, const Frames& b) { return (a.array() * b.array()).sum(); }

AttackConfig short_attack() {
  AttackConfig cfg;
  cfg.max_iterations = 30;
  cfg.mp_every = 10;
  cfg.epsilon = 1e-3;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("aimed probe contracts toward the target") {
  Rng rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Motion a{Representation::kPosition, Frames(6, 9), 1.0}, b = a;
  for (Eigen::Index i = 0; i < a.frames.size(); ++i) {
    a.frames.data()[i] = g(rng);
    b.frames.data()[i] = g(rng);
  }
  for (double beta : {0.0, 0.3, 0.95}) {
    const Motion p = aimed_probe(a, b, beta);
    CHECK(std::abs((p.frames - b.frames).norm() - (1.0 - beta) * (a.frames - b.frames).norm()) <= 1e-9);
    CHECK(std::abs((p.frames - a.frames).norm() - beta * (a.frames - b.frames).norm()) <= 1e-9);
  }
}

TEST_CASE("exploration is orthogonal to the walk direction") {
  const Fixture& f = fixture();
  const Motion& x = f.test.motions[0];
  const Motion& x_prime = f.test.motions[f.test.size() - 1];
  const Eigen::VectorXd w = dof_weights(f.skeleton, Representation::kPosition);
  Rng rng(5);
  const double lambda = 0.2;
  const auto samples = random_exploration(x_prime, x, lambda, w, rng, 7);
  REQUIRE(samples.size() == 7);
  const double gap = (x.frames - x_prime.frames).norm();
  for (const PerturbationSample& s : samples) {
    CHECK(std::abs(s.direction.norm() - 1.0) <= 1e-12);
    CHECK(std::abs(inner(s.delta, s.direction)) <= 1e-9);
    CHECK(s.scaled.norm() == doctest::Approx(lambda * gap).epsilon(1e-12));
    const Frames expected = x_prime.frames + (s.delta.array().rowwise() * w.transpose().array()).matrix();
    CHECK((s.candidate.frames - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(random_exploration(x, x, lambda, w, rng, 3).empty());
}

TEST_CASE("spinal joints carry zero exploration weight") {
  const Skeleton s = Skeleton::humanoid();
  const Eigen::VectorXd w = dof_weights(s, Representation::kPosition);
  REQUIRE(w.size() == 3 * s.joint_count());
  for (int j = 0; j < s.joint_count(); ++j) {
    for (int c = 0; c < 3; ++c) CHECK(w[3 * j + c] == (s.spinal(j) ? 0.0 : 1.0));
  }
  CHECK_THROWS_AS(dof_weights(s, Representation::kPosition, {1.0, 2.0}), DimensionError);
}

TEST_CASE("lambda and beta adaptation") {
  CHECK(adapt_lambda(0.0, 0.1) == doctest::Approx(0.09));
  CHECK(adapt_lambda(0.2, 0.1) == doctest::Approx(0.09));
  CHECK(adapt_lambda(0.4, 0.1) == 0.1);
  CHECK(adapt_lambda(0.5, 0.1) == 0.1);
  CHECK(adapt_lambda(0.6, 0.1) == 0.1);
  CHECK(adapt_lambda(0.8, 0.1) == doctest::Approx(0.11));
  CHECK(adapt_lambda(1.0, 0.38, 0.4) == 0.4);
  CHECK(adapt_lambda(1.0, 0.38) == doctest::Approx(0.418));
  CHECK(adapt_beta(true, 0.5, 0.95) == doctest::Approx(0.55));
  CHECK(adapt_beta(true, 0.9, 0.95) == 0.95);
  CHECK(adapt_beta(false, 0.5, 0.95) == doctest::Approx(0.45));
}

TEST_CASE("attack distance divides the Frobenius norm by the frame count") {
  Motion a{Representation::kPosition, Frames::Zero(8, 6), 1.0}, b = a;
  b.frames(3, 2) = 4.0;
  CHECK(attack_distance(a, b) == 0.5);
  b.frames(5, 1) = 3.0;
  CHECK(attack_distance(a, b) == doctest::Approx(5.0 / 8.0));
}

TEST_CASE("every accepted iterate is adversarial") {
  const Fixture& f = fixture();
  for (bool mp : {true, false}) {
    AttackConfig cfg = short_attack();
    cfg.manifold_projection = mp;
    int successes = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      BuiltinHandle handle(f.model);
      const AttackResult r = gmw_attack(handle, f.test.motions[i], f.test.labels[i], f.train, f.skeleton, cfg);
      if (!r.attacked()) continue;
      ++successes;
      CHECK(r.verified);
      CHECK(r.final_label != r.true_label);
      for (const TraceEntry& e : r.trace) CHECK(e.adversarial);
      BuiltinHandle fresh(f.model);
      CHECK(fresh.predict_label(r.motion) != f.test.labels[i]);
      CHECK(r.queries == handle.query_count());
      if (mp) {
        // A rejected projection falls back to a blend toward x_hat, so only
        // the projection bookkeeping is checked here.
        CHECK(r.projections >= 1);
        CHECK(std::any_of(r.trace.begin(), r.trace.end(), [](const TraceEntry& e) { return e.projected; }));
      }
    }
    CHECK(successes >= 4);
  }
}

TEST_CASE("targeted attack lands on the target class") {
  const Fixture& f = fixture();
  AttackConfig cfg = short_attack();
  cfg.mode = AttackMode::kTargeted;
  cfg.manifold_projection = false;
  for (std::size_t i = 0; i < 4; ++i) {
    cfg.target_class = (f.test.labels[i] + 1) % f.test.classes;
    BuiltinHandle handle(f.model);
    const AttackResult r = gmw_attack(handle, f.test.motions[i], f.test.labels[i], f.train, f.skeleton, cfg);
    if (!r.attacked()) continue;
    CHECK(r.final_label == cfg.target_class);
    CHECK(r.verified);
  }
}

TEST_CASE("misclassified motions are skipped without attacking") {
  const Fixture& f = fixture();
  BuiltinHandle handle(f.model);
  const Motion& x = f.test.motions[0];
  const int predicted = handle.predict_label(x);
  const int wrong = (predicted + 1) % f.test.classes;
  const AttackResult r = gmw_attack(handle, x, wrong, f.train, f.skeleton, short_attack());
  CHECK(r.status == AttackStatus::kSkippedMisclassified);
  CHECK(r.motion.frames == x.frames);
}

TEST_CASE("query budget stops the run") {
  const Fixture& f = fixture();
  AttackConfig cfg = short_attack();
  cfg.query_budget = 25;
  BuiltinHandle handle(f.model);
  const AttackResult r = gmw_attack(handle, f.test.motions[1], f.test.labels[1], f.train, f.skeleton, cfg);
  CHECK(r.queries <= 26);
  if (r.status == AttackStatus::kBudgetExhausted) CHECK(r.stop == StopReason::kBudget);
}

TEST_CASE("batch results do not depend on the worker count") {
  const Fixture& f = fixture();
  AttackConfig cfg = short_attack();
  cfg.max_iterations = 12;
  cfg.mp_every = 4;
  const std::span<const Motion> motions(f.test.motions.data(), 5);
  const std::span<const int> labels(f.test.labels.data(), 5);
  BuiltinHandle h1(f.model), h2(f.model), h3(f.model);
  const auto serial = attack_batch_serial(h1, motions, labels, f.train, f.skeleton, cfg);
  const auto one = attack_batch(h2, motions, labels, f.train, f.skeleton, cfg, 1);
  const auto many = attack_batch(h3, motions, labels, f.train, f.skeleton, cfg, 4);
  REQUIRE(serial.size() == 5);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].motion.frames == one[i].motion.frames);
    CHECK(serial[i].motion.frames == many[i].motion.frames);
    CHECK(serial[i].queries == many[i].queries);
    CHECK(serial[i].status == many[i].status);
  }
  CHECK(h1.query_count() == h3.query_count());
}

TEST_CASE("config validation names each bad field") {
  AttackConfig cfg;
  cfg.mode = AttackMode::kTargeted;
  cfg.lambda = 0.0;
  cfg.beta1 = 1.0;
  cfg.samples = 0;
  cfg.mp_every = 0;
  cfg.query_budget = 0;
  const auto errors = validate(cfg);
  auto has = [&](const std::string& key) {
    for (const auto& e : errors) {
      if (e.rfind(key + ":", 0) == 0) return true;
    }
    return false;
  };
  CHECK(has("target_class"));
  CHECK(has("lambda"));
  CHECK(has("beta1"));
  CHECK(has("samples"));
  CHECK(has("mp_every"));
  CHECK(has("query_budget"));
  CHECK(validate(AttackConfig{}).empty());
  CHECK(AttackConfig{}.resolved_epsilon() == 0.1);
  AttackConfig targeted;
  targeted.mode = AttackMode::kTargeted;
  CHECK(targeted.resolved_epsilon() == 0.5);
}
