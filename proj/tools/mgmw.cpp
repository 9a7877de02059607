// mgmw: dataset generation, training, attacks, defenses and reports.

#include "mgmw/batch.hpp"
#include "mgmw/config.hpp"
#include "mgmw/defense.hpp"
#include "mgmw/errors.hpp"
#include "mgmw/extern_handle.hpp"
#include "mgmw/io.hpp"
#include "mgmw/metrics.hpp"
#include "mgmw/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mgmw;

namespace {

// Flag values; unset flags keep the config file's value.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> mode;
  std::optional<int> target_class;
  bool no_mp = false;
  std::optional<int> mp_every;
  std::optional<double> epsilon;
  std::optional<int> max_iters;
  std::optional<std::string> classifier;
  std::string out = "mgmw-out";
  std::optional<std::string> model;
  std::optional<std::string> attack;
  std::optional<std::string> tag;
  std::vector<std::string> inputs;
};

ExperimentConfig load_config(const Overrides& o) {
  ExperimentConfig cfg = default_experiment();
  std::vector<std::string> errors;
  if (!o.config.empty()) apply_config_json(read_json_file(o.config), cfg, errors);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.mode) {
    try {
      cfg.attack.mode = parse_attack_mode(*o.mode);
    } catch (const ConfigError&) {
      errors.push_back("--mode: expected untargeted or targeted");
    }
  }
  if (o.target_class) cfg.attack.target_class = *o.target_class;
  if (o.no_mp) cfg.attack.manifold_projection = false;
  if (o.mp_every) cfg.attack.mp_every = *o.mp_every;
  if (o.epsilon) cfg.attack.epsilon = *o.epsilon;
  if (o.max_iters) cfg.attack.max_iterations = *o.max_iters;
  if (o.classifier) cfg.classifier = *o.classifier;
  resolve(cfg);
  for (auto& e : validate(cfg)) errors.push_back(std::move(e));
  if (!errors.empty()) throw_config_errors(errors);
  return cfg;
}

fs::path out_dir(const Overrides& o) {
  fs::create_directories(o.out);
  return o.out;
}

void write_artifact(const fs::path& path, const Json& j) {
  write_json_file(path, j, 1);
  std::printf("wrote %s\n", path.string().c_str());
}

void write_text(const fs::path& path, const std::string& text) {
  write_text_file(path, text);
  std::printf("wrote %s\n", path.string().c_str());
}

LabeledDataset load_split(const Overrides& o, const char* name) {
  const fs::path path = fs::path(o.out) / name;
  if (!fs::exists(path)) throw Error(path.string() + " not found; run gen-data first");
  return dataset_from_json(read_json_file(path));
}

ClassifierModel load_model(const fs::path& path) {
  if (!fs::exists(path)) throw Error(path.string() + " not found; run train first");
  return model_from_json(read_json_file(path).at("model"));
}

fs::path model_path(const Overrides& o, const char* fallback) {
  return o.model ? fs::path(*o.model) : fs::path(o.out) / fallback;
}

int gen_data(const Overrides& o) {
  const ExperimentConfig cfg = load_config(o);
  const Skeleton skeleton = Skeleton::humanoid();
  const fs::path dir = out_dir(o);
  for (Split split : {Split::kTrain, Split::kTest}) {
    const LabeledDataset data = generate_synthetic_dataset(skeleton, cfg.data, split);
    Json j = dataset_to_json(data);
    j["config"] = config_to_json(cfg);
    write_artifact(dir / (split == Split::kTrain ? "train.json" : "test.json"), j);
  }
  return 0;
}

Json model_artifact(const ExperimentConfig& cfg, const TrainingRun& run) {
  return Json{{"config", config_to_json(cfg)}, {"training", training_run_to_json(run)},
              {"model", model_to_json(run.model)}};
}

int train(const Overrides& o) {
  const ExperimentConfig cfg = load_config(o);
  const LabeledDataset train = load_split(o, "train.json");
  const LabeledDataset test = load_split(o, "test.json");
  const TrainingRun run = train_classifier(train, cfg.train, &test);
  write_artifact(out_dir(o) / "model.json", model_artifact(cfg, run));
  std::printf("train accuracy %.4f, test accuracy %.4f\n", run.train_accuracy, run.test_accuracy.value_or(0.0));
  return 0;
}

std::unique_ptr<ClassifierHandle> make_handle(const ExperimentConfig& cfg, const Overrides& o) {
  if (cfg.classifier.rfind("extern:", 0) == 0) return std::make_unique<ExternHandle>(cfg.classifier.substr(7));
  return std::make_unique<BuiltinHandle>(std::make_shared<const ClassifierModel>(load_model(model_path(o, "model.json"))));
}

int attack(const Overrides& o) {
  const ExperimentConfig cfg = load_config(o);
  const LabeledDataset train = load_split(o, "train.json");
  const LabeledDataset test = load_split(o, "test.json");
  auto handle = make_handle(cfg, o);

  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(cfg.attack_count), test.size());
  std::vector<Motion> motions(test.motions.begin(), test.motions.begin() + count);
  std::vector<int> labels(test.labels.begin(), test.labels.begin() + count);
  const auto results = attack_batch(*handle, motions, labels, train, test.skeleton, cfg.attack, cfg.workers);

  std::vector<MotionPair> pairs;
  for (std::size_t i = 0; i < count; ++i) {
    if (results[i].attacked()) pairs.push_back({&motions[i], &results[i].motion});
  }
  MetricsReport metrics;
  if (!pairs.empty()) metrics = compute_metrics(pairs, test.skeleton);
  attach_attack_stats(metrics, results);

  Json items = Json::array();
  for (std::size_t i = 0; i < count; ++i) {
    Json r = attack_result_to_json(results[i]);
    r["index"] = i;
    items.push_back(std::move(r));
  }
  std::string name = cfg.attack.manifold_projection ? "mp" : "nomp";
  if (cfg.attack.mode == AttackMode::kTargeted) name += "_targeted";
  name = o.tag.value_or(name);
  const fs::path dir = out_dir(o);
  write_artifact(dir / ("attack_" + name + ".json"),
                 Json{{"kind", "attack"}, {"name", name}, {"config", config_to_json(cfg)},
                      {"metrics", metrics_to_json(metrics)}, {"results", items}});
  const std::string table = metrics_table({{name, metrics}});
  write_text(dir / ("attack_" + name + ".txt"), table);
  std::fputs(table.c_str(), stdout);
  return 0;
}

RobustnessReport probe(const ExperimentConfig& cfg, const ClassifierModel& model, const LabeledDataset& train,
                       const LabeledDataset& test) {
  return robustness_probe(model, test, train, cfg.probe_attack, static_cast<std::size_t>(cfg.probe_count),
                          cfg.workers);
}

void write_defense(const Overrides& o, const ExperimentConfig& cfg, const std::string& name, Json artifact,
                   const RobustnessReport& report) {
  const fs::path dir = out_dir(o);
  artifact["kind"] = "defense";
  artifact["name"] = name;
  artifact["robustness"] = robustness_to_json(report);
  artifact["config"] = config_to_json(cfg);
  write_artifact(dir / (name + "_model.json"), artifact);
  const std::string table = robustness_table({{name, report}});
  write_text(dir / (name + "_robustness.txt"), table);
  std::fputs(table.c_str(), stdout);
}

int mmat_train(const Overrides& o) {
  const ExperimentConfig cfg = load_config(o);
  const LabeledDataset train = load_split(o, "train.json");
  const LabeledDataset test = load_split(o, "test.json");
  const DefenseRun run = mmat_train(train, cfg.defense, &test);
  Json rounds = Json::array();
  for (const SamplingRound& r : run.rounds) {
    rounds.push_back(Json{{"epoch", r.epoch}, {"stats", sampler_stats_to_json(r.stats)}});
  }
  Json artifact = model_artifact(cfg, run.training);
  artifact["sampling"] = std::move(rounds);
  write_defense(o, cfg, o.tag.value_or("mmat"), std::move(artifact), probe(cfg, run.training.model, train, test));
  return 0;
}

int gs_train(const Overrides& o) {
  const ExperimentConfig cfg = load_config(o);
  const LabeledDataset train = load_split(o, "train.json");
  const LabeledDataset test = load_split(o, "test.json");
  const TrainingRun run = gaussian_smoothing_train(train, cfg.smoothing, &test);
  write_defense(o, cfg, o.tag.value_or("gs"), model_artifact(cfg, run), probe(cfg, run.model, train, test));
  return 0;
}

int evaluate(const Overrides& o) {
  const ExperimentConfig cfg = load_config(o);
  const LabeledDataset test = load_split(o, "test.json");
  const ClassifierModel model = load_model(model_path(o, "model.json"));
  std::vector<std::pair<int, int>> records;
  for (std::size_t i = 0; i < test.size(); ++i) {
    records.emplace_back(test.labels[i], argmax(predict_scores(model, test.motions[i])));
  }
  const Eigen::MatrixXi confusion = confusion_matrix(records, test.classes);
  const fs::path dir = out_dir(o);
  Json artifact{{"kind", "evaluate"}, {"config", config_to_json(cfg)}, {"accuracy", accuracy(model, test)}};
  write_text(dir / "confusion.csv", confusion_csv(confusion));

  if (o.attack) {
    const Json a = read_json_file(*o.attack);
    std::vector<Motion> adversaries;
    std::vector<std::size_t> index;
    for (const Json& r : a.at("results")) {
      const std::string status = r.at("status").get<std::string>();
      if (status != "success" && status != "budget_exhausted") continue;
      adversaries.push_back(
          Motion{parse_representation(r.at("representation").get<std::string>()), frames_from_json(r.at("frames")), 1.0});
      index.push_back(r.at("index").get<std::size_t>());
    }
    std::vector<MotionPair> pairs;
    for (std::size_t i = 0; i < adversaries.size(); ++i) {
      if (index[i] >= test.size()) throw Error("attack artifact does not match the test split");
      pairs.push_back({&test.motions[index[i]], &adversaries[i]});
    }
    if (!pairs.empty()) {
      const MetricsReport metrics = compute_metrics(pairs, test.skeleton);
      artifact["metrics"] = metrics_to_json(metrics);
      // Widen the buckets until the largest deviation lands in a closed one.
      Bucketing bucketing;
      double top = 0.0;
      for (const SampleMetrics& m : metrics.per_sample) top = std::max(top, m.l2);
      if (top >= bucketing.width * (bucketing.count - 1)) bucketing.width = top / (bucketing.count - 1.5);
      artifact["histogram_bucket_width"] = bucketing.width;
      write_text(dir / "histogram.csv", histogram_csv(deviation_histogram(metrics.per_sample, bucketing)));
    }
  }
  write_artifact(dir / "evaluate.json", artifact);
  std::printf("accuracy %.4f\n", artifact.at("accuracy").get<double>());
  return 0;
}

int report(const Overrides& o) {
  std::vector<std::pair<std::string, MetricsReport>> attacks;
  std::vector<std::pair<std::string, RobustnessReport>> defenses;
  for (const std::string& path : o.inputs) {
    const Json j = read_json_file(path);
    const std::string kind = j.value("kind", "");
    const std::string name = j.value("name", fs::path(path).stem().string());
    if (kind == "attack") {
      attacks.emplace_back(name, metrics_from_json(j.at("metrics")));
    } else if (kind == "defense") {
      RobustnessReport r;
      r.metrics = metrics_from_json(j.at("robustness").at("metrics"));
      r.clean_accuracy = j.at("robustness").at("clean_accuracy").get<double>();
      defenses.emplace_back(name, std::move(r));
    } else {
      throw Error(path + ": not an attack or defense artifact");
    }
  }
  std::string text;
  if (!attacks.empty()) text += metrics_table(attacks);
  if (!defenses.empty()) text += (text.empty() ? "" : "\n") + robustness_table(defenses);
  write_text(out_dir(o) / "report.txt", text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

void common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--workers", o.workers, "Worker threads (0: all available)");
  cmd->add_option("--out", o.out, "Artifact directory")->capture_default_str();
}

void attack_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--mode", o.mode, "untargeted or targeted");
  cmd->add_option("--target-class", o.target_class, "Target class for targeted attacks");
  cmd->add_flag("--no-mp", o.no_mp, "Disable manifold projection");
  cmd->add_option("--mp-every", o.mp_every, "Iterations between manifold projections");
  cmd->add_option("--epsilon", o.epsilon, "Stop threshold on l");
  cmd->add_option("--max-iters", o.max_iters, "Iteration cap");
  cmd->add_option("--classifier", o.classifier, "builtin or extern:<command>");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold-guided adversarial attacks on skeletal motion"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen-data", "Write synthetic train/test datasets");
  auto* trn = app.add_subcommand("train", "Train the built-in classifier");
  auto* att = app.add_subcommand("attack", "Run GMW attacks on the test split");
  auto* mmat = app.add_subcommand("mmat-train", "Mixed manifold-based adversarial training");
  auto* gs = app.add_subcommand("gs-train", "Gaussian-smoothing training baseline");
  auto* eval = app.add_subcommand("evaluate", "Accuracy, confusion matrix and deviation histogram");
  auto* rep = app.add_subcommand("report", "Aggregate attack and defense artifacts into tables");

  for (auto* cmd : {gen, trn, att, mmat, gs, eval, rep}) {
    common_options(cmd, o);
    attack_options(cmd, o);
    cmd->add_option("--tag", o.tag, "Artifact name");
  }
  for (auto* cmd : {att, eval}) cmd->add_option("--model", o.model, "Model artifact (default OUT/model.json)");
  eval->add_option("--attack", o.attack, "Attack artifact to histogram")->check(CLI::ExistingFile);
  rep->add_option("inputs", o.inputs, "Attack or defense artifacts")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_data(o);
    if (*trn) return train(o);
    if (*att) return attack(o);
    if (*mmat) return mmat_train(o);
    if (*gs) return gs_train(o);
    if (*eval) return evaluate(o);
    if (*rep) return report(o);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
