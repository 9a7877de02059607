#include "mgmw/protocol.hpp"

#include "mgmw/errors.hpp"
#include "mgmw/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

namespace mgmw::protocol {
namespace {

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Json parse_line(std::string_view line) {
  try {
    Json j = Json::parse(line);
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
      throw ProtocolError("message must be an object with a string 'kind'");
    }
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  } catch (const DimensionError& e) {
    throw ProtocolError(std::string("malformed frames: ") + e.what());
  }
}

template <typename T>
T integer(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ProtocolError(std::string("'") + key + "' must be an integer");
  return v.get<T>();
}

// Shortest round-trip decimal laid out like Python's repr: fixed notation for
// decimal exponents in [-4, 16), otherwise d.ddde+XX.
void append_number(std::string& out, double v) {
  if (!std::isfinite(v)) throw ProtocolError("frames must be finite");
  if (v == 0.0) {
    out += std::signbit(v) ? "-0.0" : "0.0";
    return;
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  const std::string_view sci(buf, static_cast<std::size_t>(res.ptr - buf));
  const std::size_t e = sci.find('e');
  std::string_view mantissa = sci.substr(0, e);
  if (mantissa.front() == '-') {
    out += '-';
    mantissa.remove_prefix(1);
  }
  std::string digits(1, mantissa.front());
  if (mantissa.size() > 2) digits += mantissa.substr(2);
  int exponent = 0;
  std::from_chars(sci.data() + e + 1 + (sci[e + 1] == '+'), sci.data() + sci.size(), exponent);
  const int k = static_cast<int>(digits.size());
  if (exponent < -4 || exponent >= 16) {
    out += digits.front();
    if (k > 1) out += "." + digits.substr(1);
    out += exponent < 0 ? "e-" : "e+";
    const int a = std::abs(exponent);
    if (a < 10) out += '0';
    out += std::to_string(a);
    return;
  }
  const int point = exponent + 1;
  if (point <= 0) {
    out += "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
  } else if (point >= k) {
    out += digits + std::string(static_cast<std::size_t>(point - k), '0') + ".0";
  } else {
    out += digits.substr(0, static_cast<std::size_t>(point)) + "." + digits.substr(static_cast<std::size_t>(point));
  }
}

std::string frames_text(const Frames& frames) {
  std::string out = "[";
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    if (t > 0) out += ',';
    out += '[';
    for (Eigen::Index d = 0; d < frames.cols(); ++d) {
      if (d > 0) out += ',';
      append_number(out, frames(t, d));
    }
    out += ']';
  }
  return out + "]";
}

}  // namespace

std::string encode(const Request& request) {
  if (std::holds_alternative<InfoRequest>(request)) return R"({"kind":"info"})";
  const auto& q = std::get<QueryRequest>(request);
  return R"({"kind":"query","id":)" + std::to_string(q.id) + R"(,"frames":)" + frames_text(q.frames) + "}";
}

std::string encode(const Response& response) {
  return std::visit(
             Overloaded{[](const InfoResponse& r) {
                          return Json{{"kind", "info"}, {"classes", r.classes}, {"dofs", r.dofs}, {"frames", r.frames}};
                        },
                        [](const LabelResponse& r) { return Json{{"kind", "label"}, {"id", r.id}, {"label", r.label}}; },
                        [](const ErrorResponse& r) {
                          return Json{{"kind", "error"}, {"id", r.id}, {"message", r.message}};
                        }},
             response)
      .dump(-1, ' ', true);
}

Request decode_request(std::string_view line) {
  const Json j = parse_line(line);
  return guarded([&]() -> Request {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "info") return InfoRequest{};
    if (kind == "query") return QueryRequest{integer<std::int64_t>(j, "id"), frames_from_json(j.at("frames"))};
    throw ProtocolError("unknown request kind '" + kind + "'");
  });
}

Response decode_response(std::string_view line) {
  const Json j = parse_line(line);
  return guarded([&]() -> Response {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "info") {
      return InfoResponse{integer<int>(j, "classes"), integer<int>(j, "dofs"), integer<int>(j, "frames")};
    }
    if (kind == "label") return LabelResponse{integer<std::int64_t>(j, "id"), integer<int>(j, "label")};
    if (kind == "error") return ErrorResponse{integer<std::int64_t>(j, "id"), j.value("message", "")};
    throw ProtocolError("unknown response kind '" + kind + "'");
  });
}

}  // namespace mgmw::protocol
