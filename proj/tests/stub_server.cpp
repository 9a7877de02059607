// Line-protocol classifier for tests.
//   stub_server model.json           labels from a saved built-in model
//   stub_server constant C M N L     C classes, M dofs, N frames, always label L

#include "mgmw/classifier.hpp"
#include "mgmw/errors.hpp"
#include "mgmw/io.hpp"
#include "mgmw/protocol.hpp"

#include <iostream>
#include <optional>
#include <string>

using namespace mgmw;

namespace {

// Best-effort id of a request that failed to decode.
std::int64_t salvage_id(const std::string& line) {
  try {
    const Json j = Json::parse(line);
    if (j.is_object() && j.contains("id") && j["id"].is_number_integer()) return j["id"].get<std::int64_t>();
  } catch (const nlohmann::json::exception&) {
  }
  return -1;
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<ClassifierModel> model;
  protocol::InfoResponse info;
  int constant = 0;
  try {
    if (argc == 2) {
      model = model_from_json(read_json_file(argv[1]));
      info = {model->classes, model->dofs, model->frames};
    } else if (argc == 6 && std::string(argv[1]) == "constant") {
      info = {std::stoi(argv[2]), std::stoi(argv[3]), std::stoi(argv[4])};
      constant = std::stoi(argv[5]);
    } else {
      std::cerr << "usage: stub_server model.json | stub_server constant C M N L\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "stub_server: " << e.what() << "\n";
    return 1;
  }

  std::string line;
  while (std::getline(std::cin, line)) {
    protocol::Response reply;
    try {
      const protocol::Request request = protocol::decode_request(line);
      if (std::holds_alternative<protocol::InfoRequest>(request)) {
        reply = info;
      } else {
        const auto& q = std::get<protocol::QueryRequest>(request);
        if (q.frames.rows() != info.frames || q.frames.cols() != info.dofs) {
          reply = protocol::ErrorResponse{q.id, "frames must be " + std::to_string(info.frames) + " x " +
                                                    std::to_string(info.dofs)};
        } else {
          const Motion m{Representation::kPosition, q.frames, 1.0};
          reply = protocol::LabelResponse{q.id, model ? argmax(predict_scores(*model, m)) : constant};
        }
      }
    } catch (const ProtocolError& e) {
      reply = protocol::ErrorResponse{salvage_id(line), e.what()};
    }
    std::cout << protocol::encode(reply) << "\n" << std::flush;
  }
  return 0;
}
