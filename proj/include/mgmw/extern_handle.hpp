#pragma once

#include "mgmw/classifier.hpp"

#include <memory>
#include <mutex>
#include <string>

namespace mgmw {

/// Hard-label handle backed by an external process that speaks the line
/// protocol in protocol.hpp on its standard streams. The command runs under
/// /bin/sh. Queries are serialized, so one handle can be shared across
/// threads. No scores or gradients are available through it.
class ExternHandle final : public ClassifierHandle {
 public:
  explicit ExternHandle(const std::string& command);
  ~ExternHandle() override;

  ExternHandle(const ExternHandle&) = delete;
  ExternHandle& operator=(const ExternHandle&) = delete;

  ModelShape shape() const override { return shape_; }

 protected:
  int classify(const Motion& motion) override;

 private:
  class Process;
  std::unique_ptr<Process> process_;
  std::mutex mutex_;
  ModelShape shape_;
  std::int64_t next_id_ = 0;
};

}  // namespace mgmw
