#include "mgmw/attack.hpp"
#include "mgmw/batch.hpp"
#include "mgmw/errors.hpp"
#include "mgmw/extern_handle.hpp"
#include "mgmw/io.hpp"
#include "mgmw/protocol.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

using namespace mgmw;
namespace fs = std::filesystem;

namespace {

const std::string kStub = MGMW_STUB_SERVER;

std::vector<Json> vectors() {
  std::ifstream in(MGMW_PROTOCOL_VECTORS);
  REQUIRE(in.good());
  std::vector<Json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(Json::parse(line));
  }
  return out;
}

double from_hex(const std::string& hex) { return std::strtod(hex.c_str(), nullptr); }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void check_request(const Json& expect, const protocol::Request& r) {
  if (expect["kind"] == "info") {
    CHECK(std::holds_alternative<protocol::InfoRequest>(r));
    return;
  }
  const auto* q = std::get_if<protocol::QueryRequest>(&r);
  REQUIRE(q != nullptr);
  CHECK(q->id == expect["id"].get<std::int64_t>());
  const Json& rows = expect["frames"];
  REQUIRE(q->frames.rows() == static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    REQUIRE(q->frames.cols() == static_cast<Eigen::Index>(rows[t].size()));
    for (std::size_t d = 0; d < rows[t].size(); ++d) {
      CHECK(same_bits(q->frames(t, d), from_hex(rows[t][d].get<std::string>())));
    }
  }
}

void check_response(const Json& expect, const protocol::Response& r) {
  const std::string kind = expect["kind"];
  if (kind == "info") {
    const auto* i = std::get_if<protocol::InfoResponse>(&r);
    REQUIRE(i != nullptr);
    CHECK(i->classes == expect["classes"].get<int>());
    CHECK(i->dofs == expect["dofs"].get<int>());
    CHECK(i->frames == expect["frames"].get<int>());
  } else if (kind == "label") {
    const auto* l = std::get_if<protocol::LabelResponse>(&r);
    REQUIRE(l != nullptr);
    CHECK(l->id == expect["id"].get<std::int64_t>());
    CHECK(l->label == expect["label"].get<int>());
  } else {
    const auto* e = std::get_if<protocol::ErrorResponse>(&r);
    REQUIRE(e != nullptr);
    CHECK(e->id == expect["id"].get<std::int64_t>());
    CHECK(e->message == expect["message"].get<std::string>());
  }
}

std::string run_shell(const std::string& command) {
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(command.c_str(), "r"), pclose);
  REQUIRE(pipe != nullptr);
  std::string out;
  char buffer[4096];
  while (std::size_t n = std::fread(buffer, 1, sizeof buffer, pipe.get())) out.append(buffer, n);
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("shared protocol vectors") {
  const auto all = vectors();
  REQUIRE(all.size() >= 20);
  for (const Json& v : all) {
    const std::string name = v["name"];
    const std::string line = v["line"];
    const bool request = v["side"] == "request";
    CAPTURE(name);
    if (!v["valid"].get<bool>()) {
      if (request) CHECK_THROWS_AS(protocol::decode_request(line), ProtocolError);
      else CHECK_THROWS_AS(protocol::decode_response(line), ProtocolError);
      continue;
    }
    if (request) {
      const protocol::Request r = protocol::decode_request(line);
      check_request(v["expect"], r);
      CHECK(protocol::encode(r) == line);
    } else {
      const protocol::Response r = protocol::decode_response(line);
      check_response(v["expect"], r);
      CHECK(protocol::encode(r) == line);
    }
  }
}

TEST_CASE("stub answers pipelined requests in order and survives bad lines") {
  const std::string input =
      "{\"kind\":\"info\"}\\n"
      "{\"kind\":\"query\",\"id\":4,\"frames\":[[0.0,1.0],[2.0,3.0],[4.0,5.0]]}\\n"
      "not json\\n"
      "{\"kind\":\"query\",\"id\":9,\"frames\":[[0.0]]}\\n"
      "{\"kind\":\"query\",\"id\":5,\"frames\":[[1,1],[1,1],[1,1]]}\\n";
  const auto out = lines_of(run_shell("printf '" + input + "' | " + kStub + " constant 3 2 3 1"));
  REQUIRE(out.size() == 5);
  CHECK(std::get<protocol::InfoResponse>(protocol::decode_response(out[0])) == protocol::InfoResponse{3, 2, 3});
  CHECK(std::get<protocol::LabelResponse>(protocol::decode_response(out[1])) == protocol::LabelResponse{4, 1});
  CHECK(std::get<protocol::ErrorResponse>(protocol::decode_response(out[2])).id == -1);
  CHECK(std::get<protocol::ErrorResponse>(protocol::decode_response(out[3])).id == 9);
  CHECK(std::get<protocol::LabelResponse>(protocol::decode_response(out[4])) == protocol::LabelResponse{5, 1});
}

TEST_CASE("constant stub behind the extern handle") {
  const Skeleton s = Skeleton::humanoid();
  ExternHandle handle(kStub + " constant 4 " + std::to_string(3 * s.joint_count()) + " 30 2");
  CHECK(handle.shape().classes == 4);
  CHECK(handle.shape().frames == 30);
  CHECK(handle.white_box() == nullptr);
  SyntheticConfig dc;
  dc.per_class = 1;
  const LabeledDataset data = generate_synthetic_dataset(s, dc);
  for (const Motion& m : data.motions) CHECK(handle.predict_label(m) == 2);
  CHECK(handle.query_count() == data.size());
  Motion wrong = data.motions[0];
  wrong.frames.conservativeResize(10, Eigen::NoChange);
  CHECK_THROWS_AS(handle.predict_label(wrong), DimensionError);
  CHECK_THROWS_AS(input_gradient(handle, data.motions[0], CrossEntropyLoss{0}), CapabilityError);
}

TEST_CASE("a server that exits at once is reported") {
  CHECK_THROWS_AS(ExternHandle("true"), ProtocolError);
}

TEST_CASE("five-motion untargeted attack over the protocol") {
  const Skeleton s = Skeleton::humanoid();
  SyntheticConfig dc;
  dc.per_class = 8;
  const LabeledDataset train = generate_synthetic_dataset(s, dc, Split::kTrain);
  const LabeledDataset test = generate_synthetic_dataset(s, dc, Split::kTest);
  TrainConfig tc;
  tc.epochs = 15;
  auto model = std::make_shared<ClassifierModel>(train_classifier(train, tc).model);
  const fs::path dir = fs::temp_directory_path() / ("mgmw_protocol_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path model_file = dir / "model.json";
  write_json_file(model_file, model_to_json(*model));

  AttackConfig cfg;
  cfg.max_iterations = 20;
  cfg.mp_every = 10;
  cfg.seed = 3;
  std::vector<Motion> motions;
  std::vector<int> labels;
  for (std::size_t i = 0; i < test.size() && motions.size() < 5; i += 6) {
    motions.push_back(test.motions[i]);
    labels.push_back(test.labels[i]);
  }
  ExternHandle remote(kStub + " " + model_file.string());
  BuiltinHandle local(model);
  const auto over_wire = attack_batch(remote, motions, labels, train, s, cfg, 2);
  const auto in_process = attack_batch_serial(local, motions, labels, train, s, cfg);
  REQUIRE(over_wire.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CAPTURE(i);
    CHECK(over_wire[i].status == AttackStatus::kSuccess);
    CHECK(over_wire[i].verified);
    CHECK(over_wire[i].final_label != labels[i]);
    CHECK(local.predict_label(over_wire[i].motion) != labels[i]);
    // Same labels over the wire, so the walk is identical.
    CHECK(over_wire[i].motion.frames == in_process[i].motion.frames);
    CHECK(over_wire[i].queries == in_process[i].queries);
  }
  fs::remove_all(dir);
}
