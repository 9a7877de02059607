#pragma once

#include <stdexcept>
#include <string>

namespace mgmw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of motions, skeletons or models disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Operation requires white-box access the handle cannot provide.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Training or solving produced non-finite values.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgmw
