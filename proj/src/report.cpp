#include "mgmw/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace mgmw {
namespace {

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string cell(const std::optional<double>& v, int precision, double scale = 1.0) {
  return v ? fixed(*v * scale, precision) : std::string("-");
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string row(const std::vector<std::string>& cells, std::size_t first_width) {
  std::string out = cells.front() + std::string(first_width > cells.front().size() ? first_width - cells.front().size() : 0, ' ');
  for (std::size_t i = 1; i < cells.size(); ++i) out += " " + pad(cells[i], 10);
  return out + "\n";
}

std::size_t name_width(std::size_t longest) { return std::max<std::size_t>(longest, 8); }

}  // namespace

Json attack_result_to_json(const AttackResult& r, bool with_motion) {
  Json j;
  j["status"] = to_string(r.status);
  j["stop"] = to_string(r.stop);
  j["true_label"] = r.true_label;
  j["original_label"] = r.original_label;
  j["final_label"] = r.final_label;
  j["verified"] = r.verified;
  j["queries"] = r.queries;
  j["iterations"] = r.iterations;
  j["projections"] = r.projections;
  j["flagged_projections"] = r.flagged_projections;
  Json trace = Json::array();
  for (const TraceEntry& t : r.trace) {
    trace.push_back(Json{{"k", t.k},
                         {"l", t.distance},
                         {"lambda", t.lambda},
                         {"beta1", t.beta1},
                         {"beta2", t.beta2},
                         {"adversarial", t.adversarial},
                         {"mp", t.projected},
                         {"queries", t.queries}});
  }
  j["trace"] = std::move(trace);
  if (with_motion) {
    j["representation"] = std::string(to_string(r.motion.representation));
    j["frames"] = frames_to_json(r.motion.frames);
  }
  return j;
}

Json metrics_to_json(const MetricsReport& m) {
  Json j;
  j["samples"] = m.samples;
  j["l"] = m.l;
  j["delta_a"] = m.delta_a;
  j["delta_alpha"] = m.delta_alpha ? Json(*m.delta_alpha) : Json(nullptr);
  j["bone_ratio"] = m.bone_ratio;
  j["on_manifold"] = m.on_manifold ? Json(*m.on_manifold) : Json(nullptr);
  j["success_rate"] = m.success_rate ? Json(*m.success_rate) : Json(nullptr);
  j["mean_queries"] = m.mean_queries ? Json(*m.mean_queries) : Json(nullptr);
  return j;
}

MetricsReport metrics_from_json(const Json& j) {
  auto optional = [&](const char* key) {
    return j.at(key).is_null() ? std::nullopt : std::optional<double>(j.at(key).get<double>());
  };
  MetricsReport m;
  m.samples = j.at("samples").get<std::size_t>();
  m.l = j.at("l").get<double>();
  m.delta_a = j.at("delta_a").get<double>();
  m.delta_alpha = optional("delta_alpha");
  m.bone_ratio = j.at("bone_ratio").get<double>();
  m.on_manifold = optional("on_manifold");
  m.success_rate = optional("success_rate");
  m.mean_queries = optional("mean_queries");
  return m;
}

Json robustness_to_json(const RobustnessReport& r) {
  Json results = Json::array();
  for (const AttackResult& a : r.results) results.push_back(attack_result_to_json(a, false));
  return Json{{"clean_accuracy", r.clean_accuracy}, {"metrics", metrics_to_json(r.metrics)}, {"results", results}};
}

Json sampler_stats_to_json(const SamplerStats& s) {
  return Json{{"attempted", s.attempted},
              {"on_accepted", s.on_accepted},
              {"on_rejected_off_manifold", s.on_rejected_off_manifold},
              {"off_accepted", s.off_accepted},
              {"failures", s.failures},
              {"on_mean_deviation", s.on_mean_deviation},
              {"off_mean_deviation", s.off_mean_deviation}};
}

Json training_run_to_json(const TrainingRun& run) {
  Json epochs = Json::array();
  for (const EpochStats& e : run.epochs) {
    epochs.push_back(Json{{"epoch", e.epoch},
                          {"loss", e.loss},
                          {"train_accuracy", e.train_accuracy},
                          {"test_accuracy", e.test_accuracy ? Json(*e.test_accuracy) : Json(nullptr)}});
  }
  return Json{{"train_accuracy", run.train_accuracy},
              {"test_accuracy", run.test_accuracy ? Json(*run.test_accuracy) : Json(nullptr)},
              {"epochs", std::move(epochs)}};
}

std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t longest = 0;
  for (const auto& [name, m] : rows) longest = std::max(longest, name.size());
  const std::size_t w = name_width(longest);
  std::string out = row({"run", "l", "da", "dalpha", "dB/B(%)", "OM(%)", "success(%)", "queries"}, w);
  for (const auto& [name, m] : rows) {
    out += row({name, fixed(m.l, 4), fixed(m.delta_a, 4), cell(m.delta_alpha, 4), fixed(100.0 * m.bone_ratio, 3),
                cell(m.on_manifold, 1, 100.0), cell(m.success_rate, 1, 100.0), cell(m.mean_queries, 1)},
               w);
  }
  return out;
}

std::string robustness_table(const std::vector<std::pair<std::string, RobustnessReport>>& rows) {
  std::size_t longest = 0;
  for (const auto& [name, r] : rows) longest = std::max(longest, name.size());
  const std::size_t w = name_width(longest);
  std::string out = row({"model", "l", "da", "dB/B(%)", "Acc(%)"}, w);
  for (const auto& [name, r] : rows) {
    out += row({name, fixed(r.metrics.l, 4), fixed(r.metrics.delta_a, 4), fixed(100.0 * r.metrics.bone_ratio, 3),
                fixed(100.0 * r.clean_accuracy, 2)},
               w);
  }
  return out;
}

std::string confusion_csv(const Eigen::MatrixXi& m) {
  std::ostringstream os;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << m(r, c);
    os << "\n";
  }
  return os.str();
}

std::string histogram_csv(const DeviationHistogram& h) {
  std::ostringstream os;
  os << "bucket_lo,bucket_hi,on_manifold,off_manifold\n";
  const int count = h.bucketing.count;
  for (int b = 0; b < count; ++b) {
    os << fixed(b * h.bucketing.width, 6) << "," << (b + 1 == count ? "inf" : fixed((b + 1) * h.bucketing.width, 6))
       << "," << h.on_manifold[b] << "," << h.off_manifold[b] << "\n";
  }
  return os.str();
}

std::string trace_csv(const AttackResult& r) {
  std::ostringstream os;
  os << "k,l,lambda,beta1,beta2,projected,queries\n";
  for (const TraceEntry& t : r.trace) {
    os << t.k << "," << fixed(t.distance, 9) << "," << fixed(t.lambda, 9) << "," << fixed(t.beta1, 9) << ","
       << fixed(t.beta2, 9) << "," << (t.projected ? 1 : 0) << "," << t.queries << "\n";
  }
  return os.str();
}

}  // namespace mgmw
