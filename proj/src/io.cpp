#include "mgmw/io.hpp"

#include "mgmw/errors.hpp"

#include <fstream>
#include <sstream>

namespace mgmw {
namespace {

template <typename T>
std::vector<T> as_vector(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("missing field '") + key + "'");
  return j.at(key).get<std::vector<T>>();
}

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json vector_to_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

Json skeleton_to_json(const Skeleton& skeleton) {
  const auto& s = skeleton.spec();
  Json offsets = Json::array();
  for (const auto& o : s.offsets) offsets.push_back({o.x(), o.y(), o.z()});
  Json spinal = Json::array();
  for (bool b : s.spinal) spinal.push_back(b);
  return Json{{"parents", s.parents},       {"offsets", offsets},
              {"lengths", s.lengths},       {"limits_min", s.limits_min},
              {"limits_max", s.limits_max}, {"spinal_flags", spinal}};
}

Skeleton skeleton_from_json(const Json& j) {
  SkeletonSpec s;
  s.parents = as_vector<int>(j, "parents");
  for (const auto& o : j.at("offsets")) {
    if (o.size() != 3) throw Error("skeleton offsets must have 3 components");
    s.offsets.emplace_back(o[0].get<double>(), o[1].get<double>(), o[2].get<double>());
  }
  s.lengths = as_vector<double>(j, "lengths");
  s.limits_min = as_vector<double>(j, "limits_min");
  s.limits_max = as_vector<double>(j, "limits_max");
  for (const auto& b : j.at("spinal_flags")) s.spinal.push_back(b.get<bool>());
  return Skeleton(std::move(s));
}

Json frames_to_json(const Frames& frames) {
  Json rows = Json::array();
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    rows.push_back(std::vector<double>(frames.row(t).data(), frames.row(t).data() + frames.cols()));
  }
  return rows;
}

Frames frames_from_json(const Json& j) {
  if (!j.is_array()) throw Error("frames must be an array of arrays");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = n == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Frames f(n, m);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& row = j[t];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) throw DimensionError("ragged frames array");
    for (Eigen::Index d = 0; d < m; ++d) {
      if (!row[d].is_number()) throw DimensionError("frame entries must be numbers");
      f(t, d) = row[d].get<double>();
    }
  }
  return f;
}

Json motion_document_to_json(const Skeleton& skeleton, const Motion& motion) {
  return Json{{"skeleton", skeleton_to_json(skeleton)},
              {"representation", std::string(to_string(motion.representation))},
              {"frame_rate", motion.frame_rate},
              {"frames", frames_to_json(motion.frames)}};
}

MotionDocument motion_document_from_json(const Json& j) {
  MotionDocument doc{skeleton_from_json(j.at("skeleton")), {}};
  doc.motion.representation = parse_representation(j.at("representation").get<std::string>());
  doc.motion.frame_rate = j.value("frame_rate", 1.0);
  doc.motion.frames = frames_from_json(j.at("frames"));
  return doc;
}

Json dataset_to_json(const LabeledDataset& data) {
  Json samples = Json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    samples.push_back(Json{{"label", data.labels[i]}, {"frames", frames_to_json(data.motions[i].frames)}});
  }
  return Json{{"format", "mgmw-dataset"},
              {"version", 1},
              {"skeleton", skeleton_to_json(data.skeleton)},
              {"representation", "position"},
              {"classes", data.classes},
              {"split", data.split == Split::kTrain ? "train" : "test"},
              {"seed", data.seed},
              {"samples", samples}};
}

LabeledDataset dataset_from_json(const Json& j, std::optional<int> frames) {
  if (j.value("format", "") != "mgmw-dataset") throw Error("not an mgmw-dataset document");
  LabeledDataset data{skeleton_from_json(j.at("skeleton")), {}, {}, j.at("classes").get<int>(),
                      j.at("split").get<std::string>() == "test" ? Split::kTest : Split::kTrain,
                      j.at("seed").get<std::uint64_t>()};
  const auto rep = parse_representation(j.at("representation").get<std::string>());
  for (const auto& s : j.at("samples")) {
    Motion m{rep, frames_from_json(s.at("frames")), 1.0};
    if (frames && m.frame_count() != *frames) m = resample(m, *frames);
    const int label = s.at("label").get<int>();
    if (label < 0 || label >= data.classes) throw Error("dataset label out of range");
    data.motions.push_back(std::move(m));
    data.labels.push_back(label);
  }
  return data;
}

Json model_to_json(const ClassifierModel& model) {
  Json layers = Json::array();
  for (const auto& l : model.layers) {
    std::vector<double> w;
    w.reserve(l.weight.size());
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    layers.push_back(Json{{"rows", l.weight.rows()}, {"cols", l.weight.cols()}, {"weight", w},
                          {"bias", vector_to_json(l.bias)}});
  }
  return Json{{"format", "mgmw-classifier"},
              {"version", 1},
              {"frames", model.frames},
              {"dofs", model.dofs},
              {"classes", model.classes},
              {"dataset_seed", model.dataset_seed},
              {"input_mean", vector_to_json(model.input_mean)},
              {"input_scale", vector_to_json(model.input_scale)},
              {"layers", layers}};
}

ClassifierModel model_from_json(const Json& j) {
  if (j.value("format", "") != "mgmw-classifier") throw Error("not an mgmw-classifier checkpoint");
  if (j.value("version", 0) != 1) throw Error("unsupported checkpoint version");
  ClassifierModel model;
  model.frames = j.at("frames").get<int>();
  model.dofs = j.at("dofs").get<int>();
  model.classes = j.at("classes").get<int>();
  model.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
  model.input_mean = vector_from_json(j.at("input_mean"));
  model.input_scale = vector_from_json(j.at("input_scale"));
  int expected_in = model.frames * model.dofs;
  for (const auto& l : j.at("layers")) {
    const auto rows = l.at("rows").get<Eigen::Index>();
    const auto cols = l.at("cols").get<Eigen::Index>();
    const auto w = l.at("weight").get<std::vector<double>>();
    if (cols != expected_in || static_cast<Eigen::Index>(w.size()) != rows * cols) {
      throw DimensionError("checkpoint layer shapes are inconsistent");
    }
    DenseLayer layer{Eigen::MatrixXd(rows, cols), vector_from_json(l.at("bias"))};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = w[r * cols + c];
    }
    if (layer.bias.size() != rows) throw DimensionError("checkpoint bias size mismatch");
    model.layers.push_back(std::move(layer));
    expected_in = static_cast<int>(rows);
  }
  if (expected_in != model.classes || model.input_mean.size() != model.dofs ||
      model.input_scale.size() != model.dofs) {
    throw DimensionError("checkpoint output or normalization sizes are inconsistent");
  }
  return model;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

Json read_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j, int indent) {
  write_text_file(path, j.dump(indent) + "\n");
}

}  // namespace mgmw
