#include "mgmw/config.hpp"

#include "mgmw/errors.hpp"
#include "mgmw/rng.hpp"

#include <initializer_list>
#include <set>

namespace mgmw {

namespace {

// Reads known keys of one object and reports the rest.
class Fields {
 public:
  Fields(const Json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  ~Fields() {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

  // Keys echoed by config_to_json but always recomputed (stage seeds and
  // derived values), so an artifact's config can be fed back in.
  void derived(std::initializer_list<const char*> keys) {
    for (const char* k : keys) seen_.insert(k);
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  void get(const std::string& key, int& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_integer()) out = v->get<int>();
      else fail(key, "expected an integer");
    }
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
      else fail(key, "expected a non-negative integer");
    }
  }
  void get(const std::string& key, double& out) {
    if (const Json* v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else fail(key, "expected a number");
    }
  }
  void get(const std::string& key, bool& out) {
    if (const Json* v = find(key)) {
      if (v->is_boolean()) out = v->get<bool>();
      else fail(key, "expected true or false");
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const Json* v = find(key)) {
      if (v->is_string()) out = v->get<std::string>();
      else fail(key, "expected a string");
    }
  }
  // null clears the value.
  void get(const std::string& key, std::optional<double>& out) {
    if (const Json* v = find(key)) {
      if (v->is_null()) out.reset();
      else if (v->is_number()) out = v->get<double>();
      else fail(key, "expected a number or null");
    }
  }
  void get(const std::string& key, std::optional<std::uint64_t>& out) {
    if (const Json* v = find(key)) {
      if (v->is_null()) out.reset();
      else if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
      else fail(key, "expected a non-negative integer or null");
    }
  }
  template <typename T>
  void get_list(const std::string& key, std::vector<T>& out) {
    if (const Json* v = find(key)) {
      bool ok = v->is_array();
      for (std::size_t i = 0; ok && i < v->size(); ++i) {
        ok = std::is_integral_v<T> ? (*v)[i].is_number_integer() : (*v)[i].is_number();
      }
      if (ok) out = v->get<std::vector<T>>();
      else fail(key, std::is_integral_v<T> ? "expected a list of integers" : "expected a list of numbers");
    }
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& key, const std::string& message) {
    const std::string where = key.empty() ? path_ : child(key);
    errors_.push_back((where.empty() ? "config" : where) + ": " + message);
  }

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_data(const Json& j, SyntheticConfig& c, std::vector<std::string>& errors) {
  Fields f(j, "data", errors);
  f.get("classes", c.classes);
  f.get("per_class", c.per_class);
  f.get("frames", c.frames);
  f.get("amplitude", c.amplitude);
  f.get("amplitude_jitter", c.amplitude_jitter);
  f.get("class_offset", c.class_offset);
  f.get("noise", c.noise);
  f.derived({"seed"});
}

void read_train(const Json& j, TrainConfig& c, std::vector<std::string>& errors) {
  Fields f(j, "train", errors);
  f.get_list("hidden", c.hidden);
  f.get("epochs", c.epochs);
  f.get("batch_size", c.batch_size);
  f.get("learning_rate", c.learning_rate);
  f.derived({"seed"});
}

void read_mode(Fields& f, const std::string& key, AttackMode& mode) {
  std::string text = to_string(mode);
  f.get(key, text);
  try {
    mode = parse_attack_mode(text);
  } catch (const ConfigError&) {
    f.fail(key, "expected \"untargeted\" or \"targeted\"");
  }
}

void read_attack(const Json& j, const std::string& path, AttackConfig& c, int& count,
                 std::vector<std::string>& errors) {
  Fields f(j, path, errors);
  f.get("count", count);
  read_mode(f, "mode", c.mode);
  f.get("target_class", c.target_class);
  f.get("max_iterations", c.max_iterations);
  f.get("epsilon", c.epsilon);
  f.get("lambda", c.lambda);
  f.get("beta1", c.beta1);
  f.get("beta2", c.beta2);
  f.get("beta_cap", c.beta_cap);
  f.get("samples", c.samples);
  f.get("lambda_cap", c.lambda_cap);
  f.get_list("joint_weights", c.joint_weights);
  f.get("manifold_projection", c.manifold_projection);
  f.get("mp_every", c.mp_every);
  f.get("final_projection", c.final_projection);
  f.get("dynamics_weight", c.projection.dynamics_weight);
  f.get("query_budget", c.query_budget);
  f.derived({"resolved_epsilon", "seed"});
}

void read_defense(const Json& j, DefenseConfig& c, std::vector<std::string>& errors) {
  Fields f(j, "defense", errors);
  f.get("mu_on", c.mu_on);
  f.get("mu_off", c.mu_off);
  f.get("resample_every", c.resample_every);
  std::string sampler = to_string(c.sampler.kind);
  f.get("sampler", sampler);
  try {
    c.sampler.kind = parse_sampler(sampler);
  } catch (const ConfigError&) {
    f.fail("sampler", "expected \"basar\" or \"smart\"");
  }
  f.get("on_iterations", c.sampler.on_attack.max_iterations);
  f.get("on_mp_every", c.sampler.on_attack.mp_every);
  f.get("on_epsilon", c.sampler.on_attack.epsilon);
  f.get("off_iterations", c.sampler.off_attack.max_iterations);
  f.get("smart_iterations", c.sampler.smart.iterations);
  f.get("smart_step", c.sampler.smart.step);
  f.get("on_weight", c.sampler.smart.on_weight);
  f.get("off_weight", c.sampler.smart.off_weight);
  f.derived({"mu_clean"});
}

void read_smoothing(const Json& j, SmoothingConfig& c, std::vector<std::string>& errors) {
  Fields f(j, "smoothing", errors);
  f.get("sigma", c.sigma);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json attack_json(const AttackConfig& c, int count) {
  return Json{{"count", count},
              {"mode", to_string(c.mode)},
              {"target_class", c.target_class},
              {"max_iterations", c.max_iterations},
              {"epsilon", optional_json(c.epsilon)},
              {"resolved_epsilon", c.resolved_epsilon()},
              {"lambda", c.lambda},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"beta_cap", c.beta_cap},
              {"samples", c.samples},
              {"lambda_cap", optional_json(c.lambda_cap)},
              {"joint_weights", c.joint_weights},
              {"manifold_projection", c.manifold_projection},
              {"mp_every", c.mp_every},
              {"final_projection", c.final_projection},
              {"dynamics_weight", c.projection.dynamics_weight},
              {"query_budget", c.query_budget ? Json(*c.query_budget) : Json(nullptr)},
              {"seed", c.seed}};
}

}  // namespace

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.defense.mu_on = 0.25;
  cfg.defense.mu_off = 0.25;
  // Desk-scale budgets; full scale samples with 500 iterations every epoch.
  cfg.defense.sampler.on_attack.max_iterations = 10;
  cfg.defense.sampler.on_attack.mp_every = 10;
  cfg.defense.resample_every = 2;
  cfg.probe_attack.manifold_projection = false;
  cfg.probe_attack.max_iterations = 100;
  cfg.probe_count = 120;
  // Below the default 0.1 so the probe measures distance instead of
  // stopping at the first point under the threshold.
  cfg.probe_attack.epsilon = 0.01;
  return cfg;
}

void apply_config_json(const Json& j, ExperimentConfig& cfg, std::vector<std::string>& errors) {
  Fields f(j, "", errors);
  f.get("seed", cfg.seed);
  f.get("workers", cfg.workers);
  f.get("classifier", cfg.classifier);
  if (const Json* v = f.find("data")) read_data(*v, cfg.data, errors);
  if (const Json* v = f.find("train")) read_train(*v, cfg.train, errors);
  if (const Json* v = f.find("attack")) read_attack(*v, "attack", cfg.attack, cfg.attack_count, errors);
  if (const Json* v = f.find("defense")) read_defense(*v, cfg.defense, errors);
  if (const Json* v = f.find("smoothing")) read_smoothing(*v, cfg.smoothing, errors);
  if (const Json* v = f.find("probe")) read_attack(*v, "probe", cfg.probe_attack, cfg.probe_count, errors);
}

void resolve(ExperimentConfig& cfg) {
  cfg.data.seed = derive_seed(cfg.seed, "data");
  cfg.train.seed = derive_seed(cfg.seed, "train");
  cfg.attack.seed = derive_seed(cfg.seed, "attack");
  cfg.probe_attack.seed = derive_seed(cfg.seed, "probe");
  cfg.defense.train = cfg.train;
  cfg.defense.workers = cfg.workers;
  cfg.smoothing.train = cfg.train;
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  const auto& d = cfg.data;
  if (d.classes < 2) errors.push_back("data.classes: must be >= 2");
  if (d.per_class < 1) errors.push_back("data.per_class: must be >= 1");
  if (d.frames < 3) errors.push_back("data.frames: must be >= 3");
  for (auto [name, v] : {std::pair{"amplitude", d.amplitude}, std::pair{"amplitude_jitter", d.amplitude_jitter},
                         std::pair{"class_offset", d.class_offset}, std::pair{"noise", d.noise}}) {
    if (!(v >= 0.0)) errors.push_back(std::string("data.") + name + ": must be >= 0");
  }
  if (!(d.class_offset + d.amplitude * (1.0 + d.amplitude_jitter) + d.noise < 0.98)) {
    errors.push_back("data: class_offset + amplitude * (1 + amplitude_jitter) + noise must stay below 0.98");
  }
  if (cfg.train.hidden.empty()) errors.push_back("train.hidden: needs at least one layer");
  for (int h : cfg.train.hidden) {
    if (h < 1) {
      errors.push_back("train.hidden: widths must be >= 1");
      break;
    }
  }
  if (cfg.attack_count < 0) errors.push_back("attack.count: must be >= 0");
  if (cfg.probe_count < 0) errors.push_back("probe.count: must be >= 0");
  if (cfg.attack.target_class >= d.classes) errors.push_back("attack.target_class: must be below data.classes");
  for (const auto& e : validate(cfg.attack)) errors.push_back("attack." + e);
  for (const auto& e : validate(cfg.probe_attack)) errors.push_back("probe." + e);
  // Training fields are reported once, under train.
  for (const auto& e : validate(cfg.defense)) {
    if (e.rfind("train.", 0) == 0) errors.push_back(e);
    else errors.push_back("defense." + e);
  }
  if (!(cfg.smoothing.sigma >= 0.0)) errors.push_back("smoothing.sigma: must be >= 0");
  if (cfg.classifier != "builtin" && cfg.classifier.rfind("extern:", 0) != 0) {
    errors.push_back("classifier: expected \"builtin\" or \"extern:<command>\"");
  } else if (cfg.classifier == "extern:") {
    errors.push_back("classifier: extern needs a command");
  }
  return errors;
}

Json config_to_json(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  const auto& t = cfg.train;
  const auto& s = cfg.defense.sampler;
  return Json{
      {"seed", cfg.seed},
      {"workers", cfg.workers},
      {"classifier", cfg.classifier},
      {"data",
       {{"classes", d.classes},
        {"per_class", d.per_class},
        {"frames", d.frames},
        {"amplitude", d.amplitude},
        {"amplitude_jitter", d.amplitude_jitter},
        {"class_offset", d.class_offset},
        {"noise", d.noise},
        {"seed", d.seed}}},
      {"train",
       {{"hidden", t.hidden},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"seed", t.seed}}},
      {"attack", attack_json(cfg.attack, cfg.attack_count)},
      {"defense",
       {{"mu_on", cfg.defense.mu_on},
        {"mu_off", cfg.defense.mu_off},
        {"mu_clean", cfg.defense.mu_clean()},
        {"resample_every", cfg.defense.resample_every},
        {"sampler", to_string(s.kind)},
        {"on_iterations", s.on_attack.max_iterations},
        {"on_mp_every", s.on_attack.mp_every},
        {"on_epsilon", optional_json(s.on_attack.epsilon)},
        {"off_iterations", s.off_attack.max_iterations},
        {"smart_iterations", s.smart.iterations},
        {"smart_step", s.smart.step},
        {"on_weight", s.smart.on_weight},
        {"off_weight", s.smart.off_weight}}},
      {"smoothing", {{"sigma", cfg.smoothing.sigma}}},
      {"probe", attack_json(cfg.probe_attack, cfg.probe_count)}};
}

void throw_config_errors(const std::vector<std::string>& errors) {
  std::string message = "invalid config:";
  for (const auto& e : errors) message += "\n  " + e;
  throw ConfigError(message);
}

}  // namespace mgmw
