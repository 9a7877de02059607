// Acceptance suite: one PASS/FAIL line per criterion. Exits 0 after printing
// all lines; --strict exits 1 when any criterion fails. --only N runs one.

#include "mgmw/attack.hpp"
#include "mgmw/batch.hpp"
#include "mgmw/config.hpp"
#include "mgmw/defense.hpp"
#include "mgmw/io.hpp"
#include "mgmw/kinematics.hpp"
#include "mgmw/manifold.hpp"
#include "mgmw/metrics.hpp"
#include "mgmw/rng.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <unistd.h>

using namespace mgmw;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds, one place.
constexpr std::size_t kBatch = 50;
constexpr double kRuntimeAttack = 300.0;          // seconds, criterion 1
constexpr double kOmGapPoints = 20.0;             // criterion 2
constexpr double kBoneTolerance = 1e-6;           // criterion 3, relative
constexpr double kGridTolerance = 1e-4;           // criterion 3
constexpr int kRoundTripMotions = 100;            // criterion 4
constexpr double kRoundTripTolerance = 1e-6;      // criterion 4
constexpr double kIdentityTolerance = 1e-9;       // criterion 5
constexpr double kFiniteStep = 1e-4;              // criterion 6
constexpr double kGradientTolerance = 1e-4;       // criterion 6, relative
constexpr double kMmatRatio = 1.5;                // criterion 7
constexpr double kAccuracySlack = 0.01;           // criterion 7
constexpr double kRuntimeMmat = 900.0;            // seconds, criterion 7
constexpr double kOracleTolerance = 1e-12;        // criterion 10

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Seeded pipeline shared by the criteria that need data and models.
struct Context {
  ExperimentConfig cfg;
  Skeleton skeleton = Skeleton::humanoid();
  LabeledDataset train;
  LabeledDataset test;
  std::optional<TrainingRun> standard;
  std::optional<std::vector<AttackResult>> mp;
  std::optional<std::vector<AttackResult>> nomp;
  std::optional<RobustnessReport> standard_probe;

  Context()
      : cfg([] {
          ExperimentConfig c = default_experiment();
          resolve(c);
          return c;
        }()),
        train(generate_synthetic_dataset(skeleton, cfg.data, Split::kTrain)),
        test(generate_synthetic_dataset(skeleton, cfg.data, Split::kTest)) {}

  const TrainingRun& standard_run() {
    if (!standard) standard = train_classifier(train, cfg.train, &test);
    return *standard;
  }
  std::span<const Motion> batch() const { return {test.motions.data(), std::min(kBatch, test.size())}; }
  std::span<const int> batch_labels() const { return {test.labels.data(), std::min(kBatch, test.size())}; }

  std::vector<AttackResult> run_batch(bool projection) {
    AttackConfig a = cfg.attack;
    a.manifold_projection = projection;
    BuiltinHandle handle(std::make_shared<const ClassifierModel>(standard_run().model));
    return attack_batch(handle, batch(), batch_labels(), train, skeleton, a, cfg.workers);
  }
  const std::vector<AttackResult>& mp_results() {
    if (!mp) mp = run_batch(true);
    return *mp;
  }
  const std::vector<AttackResult>& nomp_results() {
    if (!nomp) nomp = run_batch(false);
    return *nomp;
  }
  RobustnessReport probe(const ClassifierModel& model) const {
    return robustness_probe(model, test, train, cfg.probe_attack, static_cast<std::size_t>(cfg.probe_count),
                            cfg.workers);
  }
  const RobustnessReport& standard_robustness() {
    if (!standard_probe) standard_probe = probe(standard_run().model);
    return *standard_probe;
  }
};

MetricsReport metrics_of(const Context& ctx, const std::vector<AttackResult>& results) {
  std::vector<MotionPair> pairs;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].attacked()) pairs.push_back({&ctx.test.motions[i], &results[i].motion});
  }
  return compute_metrics(pairs, ctx.skeleton);
}

// ---------------------------------------------------------------- 1

Outcome criterion_1(Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const ClassifierModel& model = ctx.standard_run().model;
  auto adversarial = [&](const Motion& m, const LabelCondition& c) {
    return c(argmax(predict_scores(model, m)));
  };
  int untargeted_ok = 0, untargeted_attacked = 0;
  const auto& results = ctx.mp_results();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].attacked()) continue;
    ++untargeted_attacked;
    const LabelCondition c{AttackMode::kUntargeted, ctx.test.labels[i], -1};
    if (results[i].verified && adversarial(results[i].motion, c)) ++untargeted_ok;
  }
  int targeted_ok = 0, targeted_attacked = 0;
  BuiltinHandle handle(std::make_shared<const ClassifierModel>(model));
  for (std::size_t i = 0; i < ctx.batch().size(); ++i) {
    AttackConfig a = ctx.cfg.attack;
    a.mode = AttackMode::kTargeted;
    a.target_class = (ctx.test.labels[i] + 1) % ctx.test.classes;
    a.seed = derive_seed(ctx.cfg.attack.seed, static_cast<std::uint64_t>(i));
    const AttackResult r = gmw_attack(handle, ctx.test.motions[i], ctx.test.labels[i], ctx.train, ctx.skeleton, a);
    if (!r.attacked()) continue;
    ++targeted_attacked;
    const LabelCondition c{AttackMode::kTargeted, ctx.test.labels[i], a.target_class};
    if (r.verified && adversarial(r.motion, c)) ++targeted_ok;
  }
  const double elapsed = seconds_since(start);
  const bool pass = untargeted_attacked > 0 && targeted_attacked > 0 && untargeted_ok == untargeted_attacked &&
                    targeted_ok == targeted_attacked && elapsed < kRuntimeAttack;
  return {pass, format("untargeted %d/%d, targeted %d/%d adversarial, %.1f s (limit %.0f s)", untargeted_ok,
                       untargeted_attacked, targeted_ok, targeted_attacked, elapsed, kRuntimeAttack)};
}

// ---------------------------------------------------------------- 2

Outcome criterion_2(Context& ctx) {
  const MetricsReport mp = metrics_of(ctx, ctx.mp_results());
  const MetricsReport nomp = metrics_of(ctx, ctx.nomp_results());
  const double om_mp = 100.0 * mp.on_manifold.value_or(0.0);
  const double om_nomp = 100.0 * nomp.on_manifold.value_or(0.0);
  const bool pass = om_mp >= om_nomp + kOmGapPoints && mp.bone_ratio <= nomp.bone_ratio;
  return {pass, format("OM %.1f%% (MP) vs %.1f%% (NoMP), need +%.0f points; dB/B %.3f%% vs %.3f%%", om_mp, om_nomp,
                       kOmGapPoints, 100.0 * mp.bone_ratio, 100.0 * nomp.bone_ratio)};
}

// ---------------------------------------------------------------- 3

// Shrinking-grid search over a box; exact for the convex 2-dof objective.
std::array<double, 2> grid_argmin(const std::function<double(double, double)>& f, std::array<double, 2> lo,
                                  std::array<double, 2> hi) {
  std::array<double, 2> center{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
  std::array<double, 2> half{0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])};
  std::array<double, 2> best = center;
  for (int round = 0; round < 40; ++round) {
    double best_value = f(best[0], best[1]);
    for (int i = 0; i <= 40; ++i) {
      for (int j = 0; j <= 40; ++j) {
        const double a = std::clamp(center[0] - half[0] + half[0] * i / 20.0, lo[0], hi[0]);
        const double b = std::clamp(center[1] - half[1] + half[1] * j / 20.0, lo[1], hi[1]);
        const double v = f(a, b);
        if (v < best_value) {
          best_value = v;
          best = {a, b};
        }
      }
    }
    center = best;
    half = {half[0] * 0.3, half[1] * 0.3};
  }
  return best;
}

Outcome criterion_3(Context& ctx) {
  double worst_bone = 0.0;
  int limit_violations = 0, projected = 0;
  const auto& nomp = ctx.nomp_results();
  for (std::size_t i = 0; i < nomp.size(); ++i) {
    if (!nomp[i].attacked()) continue;
    const ProjectionResult r = manifold_project(ctx.skeleton, nomp[i].motion, ctx.test.motions[i]);
    ++projected;
    const Frames lengths = bone_lengths(ctx.skeleton, r.motion);
    for (int b = 0; b < ctx.skeleton.bone_count(); ++b) {
      const double ref = ctx.skeleton.length(Skeleton::bone_joint(b));
      worst_bone = std::max(worst_bone, (lengths.col(b).array() - ref).abs().maxCoeff() / ref);
    }
    for (int d = 0; d < ctx.skeleton.angle_dof_count(); ++d) {
      for (Eigen::Index t = 0; t < r.angles.frames.rows(); ++t) {
        const double v = r.angles.frames(t, d);
        if (!(v > ctx.skeleton.limit_min(d) && v < ctx.skeleton.limit_max(d))) ++limit_violations;
      }
    }
  }

  Rng rng(303);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_arg = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    ProjectionProblem p{Frames(1, 2), Frames(1, 2), Eigen::VectorXd(2), Eigen::VectorXd(2), 1.0};
    for (int d = 0; d < 2; ++d) {
      const double a = u(rng), b = u(rng);
      p.limits_min[d] = std::min(a, b) - 0.05;
      p.limits_max[d] = std::max(a, b) + 0.05;
      p.reference(0, d) = 2.0 * u(rng);
      p.target_acceleration(0, d) = u(rng);
    }
    const BarrierSolution s = solve_barrier(p, ProjectionConfig{});
    const auto oracle = grid_argmin(
        [&](double a, double b) { return std::pow(a - p.reference(0, 0), 2) + std::pow(b - p.reference(0, 1), 2); },
        {p.limits_min[0], p.limits_min[1]}, {p.limits_max[0], p.limits_max[1]});
    worst_arg = std::max({worst_arg, std::abs(s.angles(0, 0) - oracle[0]), std::abs(s.angles(0, 1) - oracle[1])});
  }
  const bool pass = projected > 0 && worst_bone <= kBoneTolerance && limit_violations == 0 &&
                    worst_arg <= kGridTolerance;
  return {pass, format("%d projections: max bone error %.2e (<= %.0e), %d limit violations; grid oracle max "
                       "argument error %.2e (<= %.0e) on 50 instances",
                       projected, worst_bone, kBoneTolerance, limit_violations, worst_arg, kGridTolerance)};
}

// ---------------------------------------------------------------- 4

Outcome criterion_4(Context& ctx) {
  const Skeleton& s = ctx.skeleton;
  Rng rng(404);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < kRoundTripMotions; ++k) {
    Motion theta{Representation::kAngle, Frames(10, s.angle_dof_count()), 1.0};
    for (int d = 0; d < s.angle_dof_count(); ++d) {
      const double lo = s.limit_min(d), w = s.limit_max(d) - lo;
      for (Eigen::Index t = 0; t < 10; ++t) theta.frames(t, d) = lo + w * (0.01 + 0.98 * unit(rng));
    }
    const Motion p = forward_kinematics(s, theta);
    const Motion back = forward_kinematics(s, inverse_kinematics(s, p).angles);
    worst = std::max(worst, (back.frames - p.frames).cwiseAbs().maxCoeff());
  }
  return {worst <= kRoundTripTolerance,
          format("max |FK(IK(p)) - p| = %.2e over %d motions (<= %.0e)", worst, kRoundTripMotions, kRoundTripTolerance)};
}

// ---------------------------------------------------------------- 5

Outcome criterion_5(Context& ctx) {
  double contraction = 0.0, orthogonality = 0.0;
  const Eigen::VectorXd w = dof_weights(ctx.skeleton, Representation::kPosition);
  Rng rng(505);
  for (std::size_t i = 0; i < 40; ++i) {
    const Motion& x = ctx.test.motions[i];
    const Motion& x_prime = ctx.train.motions[(i * 7) % ctx.train.size()];
    const double gap = (x_prime.frames - x.frames).norm();
    for (double beta : {0.05, 0.5, 0.95}) {
      const Motion probe = aimed_probe(x_prime, x, beta);
      contraction = std::max(contraction, std::abs((probe.frames - x.frames).norm() - (1.0 - beta) * gap) /
                                              ((1.0 - beta) * gap));
    }
    for (const PerturbationSample& s : random_exploration(x_prime, x, 0.3, w, rng, 5)) {
      orthogonality =
          std::max(orthogonality, std::abs((s.delta.array() * s.direction.array()).sum()) / s.delta.norm());
    }
  }
  struct Row {
    double rate, lambda, expected;
    std::optional<double> cap;
  };
  const Row table[] = {{0.0, 0.1, 0.9 * 0.1, {}},  {0.2, 0.1, 0.9 * 0.1, {}},  {0.39, 0.2, 0.9 * 0.2, {}},
                       {0.4, 0.1, 0.1, {}},        {0.5, 0.1, 0.1, {}},        {0.6, 0.1, 0.1, {}},
                       {0.61, 0.1, 1.1 * 0.1, {}}, {1.0, 0.2, 1.1 * 0.2, {}},  {1.0, 0.38, 0.4, 0.4},
                       {0.8, 0.3, 1.1 * 0.3, 0.4}, {0.0, 0.5, 0.4, 0.4}};
  int table_misses = 0;
  for (const Row& r : table) {
    if (adapt_lambda(r.rate, r.lambda, r.cap) != r.expected) ++table_misses;
  }
  const bool pass = contraction <= kIdentityTolerance && orthogonality <= kIdentityTolerance && table_misses == 0;
  return {pass, format("contraction rel. error %.2e, |D.d|/|D| %.2e (<= %.0e); adapt_lambda %d/%zu table rows exact",
                       contraction, orthogonality, kIdentityTolerance,
                       static_cast<int>(std::size(table)) - table_misses, std::size(table))};
}

// ---------------------------------------------------------------- 6

Outcome criterion_6(Context& ctx) {
  SyntheticConfig dc;
  dc.classes = 3;
  dc.per_class = 4;
  dc.frames = 6;
  dc.seed = 13;
  const LabeledDataset toy = generate_synthetic_dataset(ctx.skeleton, dc);
  TrainConfig tc;
  tc.hidden = {12, 8};
  tc.seed = 17;
  const ClassifierModel model = initial_model(toy, tc);
  double worst = 0.0;
  Rng rng(606);
  std::normal_distribution<double> g(0.0, 0.02);
  for (std::size_t i = 0; i < toy.size(); i += 4) {
    const Motion& clean = toy.motions[i];
    Motion at = clean;
    for (Eigen::Index e = 0; e < at.frames.size(); ++e) at.frames.data()[e] += g(rng);
    const SmartLoss loss{&clean, &ctx.skeleton, 0.6, {}};
    const Frames analytic = input_gradient(model, at, loss);
    const double scale = analytic.cwiseAbs().maxCoeff();
    for (Eigen::Index e = 0; e < at.frames.size(); ++e) {
      const double v = at.frames.data()[e];
      at.frames.data()[e] = v + kFiniteStep;
      const double up = evaluate_loss(model, at, loss);
      at.frames.data()[e] = v - kFiniteStep;
      const double down = evaluate_loss(model, at, loss);
      at.frames.data()[e] = v;
      worst = std::max(worst, std::abs((up - down) / (2.0 * kFiniteStep) - analytic.data()[e]) / scale);
    }
  }
  return {worst <= kGradientTolerance,
          format("max relative error %.2e (<= %.0e), central differences with step %.0e on a 3-class model", worst,
                 kGradientTolerance, kFiniteStep)};
}

// ---------------------------------------------------------------- 7

Outcome criterion_7(Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const RobustnessReport& standard = ctx.standard_robustness();
  const DefenseRun mmat = mmat_train(ctx.train, ctx.cfg.defense, &ctx.test);
  const RobustnessReport defended = ctx.probe(mmat.training.model);
  const double elapsed = seconds_since(start);
  const double acc_std = accuracy(ctx.standard_run().model, ctx.test);
  const double acc_mmat = accuracy(mmat.training.model, ctx.test);
  const double ratio = defended.metrics.l / standard.metrics.l;
  const bool pass = ratio >= kMmatRatio && acc_mmat >= acc_std - kAccuracySlack && elapsed < kRuntimeMmat;
  return {pass, format("l %.4f (MMAT) vs %.4f (standard), ratio %.2f (need >= %.1f); accuracy %.1f%% vs %.1f%%; "
                       "%.1f s (limit %.0f s)",
                       defended.metrics.l, standard.metrics.l, ratio, kMmatRatio, 100.0 * acc_mmat, 100.0 * acc_std,
                       elapsed, kRuntimeMmat)};
}

// ---------------------------------------------------------------- 8

Outcome criterion_8(Context& ctx) {
  DefenseConfig d = ctx.cfg.defense;
  d.mu_on = 0.0;
  d.mu_off = 0.0;
  const DefenseRun run = mmat_train(ctx.train, d, &ctx.test);
  const bool same = run.training.model == ctx.standard_run().model;
  return {same, same ? "weights bit-identical to train_classifier" : "weights differ from train_classifier"};
}

// ---------------------------------------------------------------- 9

Outcome criterion_9(Context& ctx) {
  auto deviation = [&](double sigma) {
    SmoothingConfig s = ctx.cfg.smoothing;
    s.sigma = sigma;
    return ctx.probe(gaussian_smoothing_train(ctx.train, s, &ctx.test).model).metrics.l;
  };
  const double wide = deviation(0.1), narrow = deviation(0.01);
  return {wide > narrow, format("l %.4f (sigma 0.1) vs %.4f (sigma 0.01)", wide, narrow)};
}

// ---------------------------------------------------------------- 10

Outcome criterion_10(Context& ctx) {
  const Skeleton& s = ctx.skeleton;
  int nonzero = 0;
  std::vector<MotionPair> same;
  for (std::size_t i = 0; i < 10; ++i) same.push_back({&ctx.test.motions[i], &ctx.test.motions[i]});
  const MetricsReport z = compute_metrics(same, s);
  for (double v : {z.l, z.delta_a, z.delta_alpha.value_or(1.0), z.bone_ratio}) nonzero += v != 0.0;

  // One coordinate moved by c at an interior frame: l = c/n,
  // da = c sqrt(6)/n from the (c, -2c, c) acceleration impulse.
  const Motion& x = ctx.test.motions[0];
  const double n = static_cast<double>(x.frame_count()), c = 0.025;
  Motion y = x;
  const int t = static_cast<int>(n) / 2, joint = 10;
  y.frames(t, 3 * joint + 2) += c;
  const SampleMetrics m = sample_metrics(x, y, s, MetricsOptions{{}, false});
  double bone_oracle = 0.0;
  for (Eigen::Index f = 0; f < x.frames.rows(); ++f) {
    for (int j = 1; j < s.joint_count(); ++j) {
      const int p = s.parent(j);
      const double a = (x.frames.row(f).segment<3>(3 * j) - x.frames.row(f).segment<3>(3 * p)).norm();
      const double b = (y.frames.row(f).segment<3>(3 * j) - y.frames.row(f).segment<3>(3 * p)).norm();
      bone_oracle += std::abs(a - b) / a;
    }
  }
  bone_oracle /= n * s.bone_count();
  const double offset_error = std::max({std::abs(m.deviation - c / n), std::abs(m.acceleration - c * std::sqrt(6.0) / n),
                                        std::abs(m.bone_ratio - bone_oracle)});

  // Translation leaves da and dB/B at zero; scaling both motions by k
  // scales l and da by k and keeps dB/B.
  const Motion& x2 = ctx.test.motions[1];
  Motion shifted = x2;
  for (int j = 0; j < s.joint_count(); ++j) shifted.frames.middleCols<3>(3 * j).rowwise() += Eigen::RowVector3d(0.3, -0.1, 0.2);
  const SampleMetrics tr = sample_metrics(x2, shifted, s, MetricsOptions{{}, false});
  const double expected_l = Eigen::Vector3d(0.3, -0.1, 0.2).norm() * std::sqrt(n * s.joint_count()) / n;
  Motion a = ctx.test.motions[2], b = ctx.test.motions[3];
  b.frames(t, 3 * joint) += 0.04;  // off-manifold, so the bone ratio is not zero
  const SampleMetrics base = sample_metrics(a, b, s, MetricsOptions{{}, false});
  a.frames *= 2.5;
  b.frames *= 2.5;
  const SampleMetrics scaled = sample_metrics(a, b, s, MetricsOptions{{}, false});
  const double law_error = std::max({std::abs(tr.deviation - expected_l), tr.acceleration, tr.bone_ratio,
                                     std::abs(scaled.deviation - 2.5 * base.deviation) / base.deviation,
                                     std::abs(scaled.acceleration - 2.5 * base.acceleration) / base.acceleration,
                                     std::abs(scaled.bone_ratio - base.bone_ratio) / base.bone_ratio});
  const bool pass = nonzero == 0 && offset_error <= kOracleTolerance && law_error <= kOracleTolerance;
  return {pass, format("identical pairs: %d nonzero aggregates; single offset error %.2e; translation/scale law "
                       "error %.2e (<= %.0e)",
                       nonzero, offset_error, law_error, kOracleTolerance)};
}

// ---------------------------------------------------------------- 11

int run_cli(const std::string& args) {
  const std::string command = std::string(MGMW_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(command.c_str());
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion_11(Context&) {
  const fs::path root = fs::temp_directory_path() / ("mgmw_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path config = root / "config.json";
  write_text_file(config, R"({"seed": 11, "data": {"per_class": 6}, "train": {"epochs": 8},
    "attack": {"count": 8, "max_iterations": 60, "mp_every": 20},
    "defense": {"on_iterations": 4, "on_mp_every": 4},
    "probe": {"count": 8, "max_iterations": 30}})");
  const std::vector<std::string> steps = {
      "gen-data", "train", "attack", "attack --no-mp", "attack --mode targeted --target-class 1",
      "evaluate --attack {out}/attack_mp.json", "mmat-train", "gs-train",
      "report {out}/attack_mp.json {out}/attack_nomp.json {out}/mmat_model.json {out}/gs_model.json"};
  int failures = 0;
  for (const char* run : {"a", "b"}) {
    const std::string out = (root / run).string();
    for (std::string step : steps) {
      for (std::size_t at; (at = step.find("{out}")) != std::string::npos;) step.replace(at, 5, out);
      const auto space = step.find(' ');
      const std::string command = step.substr(0, space);
      const std::string rest = space == std::string::npos ? "" : step.substr(space);
      if (run_cli(command + " --config " + config.string() + " --out " + out + rest) != 0) ++failures;
    }
  }
  int files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    const fs::path other = root / "b" / entry.path().filename();
    if (!fs::exists(other) || file_bytes(entry.path()) != file_bytes(other)) ++differing;
  }
  const int files_b = static_cast<int>(std::distance(fs::directory_iterator(root / "b"), fs::directory_iterator{}));
  fs::remove_all(root);
  const bool pass = failures == 0 && files > 0 && differing == 0 && files == files_b;
  return {pass, format("%zu subcommands run twice, %d failed; %d artifacts, %d differ", steps.size(), failures,
                       files, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--strict") strict = true;
    else if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: acceptance [--strict] [--only N]\n");
      return 2;
    }
  }
  using Check = Outcome (*)(Context&);
  const std::pair<const char*, Check> criteria[] = {
      {"attack success invariant", criterion_1},   {"MP ablation direction", criterion_2},
      {"manifold projection correctness", criterion_3}, {"kinematics round trip", criterion_4},
      {"geometric identities", criterion_5},       {"SMART gradient check", criterion_6},
      {"MMAT direction", criterion_7},             {"reduction identity", criterion_8},
      {"Gaussian-smoothing direction", criterion_9}, {"metrics oracles", criterion_10},
      {"CLI determinism", criterion_11}};
  Context ctx;
  int passed = 0, run = 0;
  for (int id = 1; id <= static_cast<int>(std::size(criteria)); ++id) {
    if (only != 0 && id != only) continue;
    const auto& [name, check] = criteria[id - 1];
    Outcome o;
    try {
      o = check(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    ++run;
    passed += o.pass;
    std::printf("%s criterion %2d  %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d criteria pass\n", passed, run);
  return strict && passed != run ? 1 : 0;
}
