#pragma once

#include <memory>

namespace spdlog {
class logger;
}

namespace mgmw {

/// Library logger on stderr. Level comes from MGMW_LOG
/// (trace, debug, info, warn, error, off; default warn).
spdlog::logger& logger();

}  // namespace mgmw
