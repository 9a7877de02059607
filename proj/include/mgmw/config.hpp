#pragma once

#include "mgmw/attack.hpp"
#include "mgmw/classifier.hpp"
#include "mgmw/defense.hpp"
#include "mgmw/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mgmw {

/// Every knob of a CLI run. Stage seeds are never read from the file; they
/// come from `seed` through derive_seed with the stage name ("data", "train",
/// "attack", "probe") so one number reproduces the whole pipeline. Sampler
/// and noise streams derive from the train seed.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  int workers = 0;
  /// "builtin" or "extern:<command>".
  std::string classifier = "builtin";
  SyntheticConfig data;
  TrainConfig train;
  AttackConfig attack;
  /// Test motions attacked by `attack`, taken from the front of the split.
  int attack_count = 50;
  DefenseConfig defense;
  SmoothingConfig smoothing;
  /// Test motions attacked by the robustness probe after a defense run.
  int probe_count = 120;
  /// BASAR-NoMP settings of the robustness probe.
  AttackConfig probe_attack;
};

ExperimentConfig default_experiment();

/// Overlays a config document onto `cfg`. Unknown keys, wrong types and
/// out-of-range values are collected as "path: message" entries.
void apply_config_json(const Json& j, ExperimentConfig& cfg, std::vector<std::string>& errors);

/// Derives stage seeds and copies shared blocks (train, workers) into the
/// defense and smoothing configs.
void resolve(ExperimentConfig& cfg);

/// Semantic checks on a resolved config; empty when valid.
std::vector<std::string> validate(const ExperimentConfig& cfg);

/// Resolved config, stage seeds included.
Json config_to_json(const ExperimentConfig& cfg);

/// Joins diagnostics into one ConfigError message, one field per line.
[[noreturn]] void throw_config_errors(const std::vector<std::string>& errors);

}  // namespace mgmw
