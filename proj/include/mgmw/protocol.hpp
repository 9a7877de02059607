#pragma once

#include "mgmw/motion.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace mgmw::protocol {

// One JSON object per line, "kind" first, ASCII only. Frame values use the
// shortest round-trip decimal in Python repr layout, so both sides emit
// identical bytes:
//   -> {"kind":"info"}
//   <- {"kind":"info","classes":C,"dofs":m,"frames":n}
//   -> {"kind":"query","id":k,"frames":[[...],...]}
//   <- {"kind":"label","id":k,"label":c}
//   <- {"kind":"error","id":k or -1,"message":"..."}

struct InfoRequest {
  bool operator==(const InfoRequest&) const = default;
};
struct QueryRequest {
  std::int64_t id = 0;
  Frames frames;
  bool operator==(const QueryRequest& o) const { return id == o.id && frames == o.frames; }
};
using Request = std::variant<InfoRequest, QueryRequest>;

struct InfoResponse {
  int classes = 0;
  int dofs = 0;
  int frames = 0;
  bool operator==(const InfoResponse&) const = default;
};
struct LabelResponse {
  std::int64_t id = 0;
  int label = 0;
  bool operator==(const LabelResponse&) const = default;
};
struct ErrorResponse {
  std::int64_t id = -1;
  std::string message;
  bool operator==(const ErrorResponse&) const = default;
};
using Response = std::variant<InfoResponse, LabelResponse, ErrorResponse>;

/// Encoders return a line without the trailing newline.
std::string encode(const Request& request);
std::string encode(const Response& response);

/// Throw ProtocolError on malformed lines.
Request decode_request(std::string_view line);
Response decode_response(std::string_view line);

}  // namespace mgmw::protocol
