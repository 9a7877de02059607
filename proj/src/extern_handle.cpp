#include "mgmw/extern_handle.hpp"

#include "mgmw/errors.hpp"
#include "mgmw/protocol.hpp"

#include <csignal>
#include <cstdio>
#include <cstring>
#include <sys/wait.h>
#include <unistd.h>

namespace mgmw {

class ExternHandle::Process {
 public:
  explicit Process(const std::string& command) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) throw Error("pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw Error("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_ = fdopen(to_child[1], "w");
    out_ = fdopen(from_child[0], "r");
    if (in_ == nullptr || out_ == nullptr) throw Error("fdopen() failed");
  }

  ~Process() {
    if (in_ != nullptr) fclose(in_);
    if (out_ != nullptr) fclose(out_);
    int status = 0;
    waitpid(pid_, &status, 0);
  }

  std::string round_trip(const std::string& line) {
    if (std::fputs(line.c_str(), in_) == EOF || std::fputc('\n', in_) == EOF || std::fflush(in_) != 0) {
      throw ProtocolError("external classifier closed its input");
    }
    std::string reply;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, out_) != nullptr) {
      reply += buf;
      if (!reply.empty() && reply.back() == '\n') {
        reply.pop_back();
        return reply;
      }
    }
    throw ProtocolError("external classifier closed its output");
  }

 private:
  pid_t pid_ = -1;
  FILE* in_ = nullptr;
  FILE* out_ = nullptr;
};

ExternHandle::ExternHandle(const std::string& command) : process_(std::make_unique<Process>(command)) {
  const auto reply = protocol::decode_response(process_->round_trip(protocol::encode(protocol::InfoRequest{})));
  const auto* info = std::get_if<protocol::InfoResponse>(&reply);
  if (info == nullptr) throw ProtocolError("external classifier did not answer the info handshake");
  if (info->classes < 2 || info->dofs < 1 || info->frames < 3) throw ProtocolError("implausible info response");
  shape_ = {info->frames, info->dofs, info->classes};
}

ExternHandle::~ExternHandle() = default;

int ExternHandle::classify(const Motion& motion) {
  std::lock_guard lock(mutex_);
  const std::int64_t id = next_id_++;
  const auto reply =
      protocol::decode_response(process_->round_trip(protocol::encode(protocol::QueryRequest{id, motion.frames})));
  if (const auto* err = std::get_if<protocol::ErrorResponse>(&reply)) {
    throw ProtocolError("external classifier error for query " + std::to_string(err->id) + ": " + err->message);
  }
  const auto* label = std::get_if<protocol::LabelResponse>(&reply);
  if (label == nullptr || label->id != id) throw ProtocolError("response id does not match query id");
  if (label->label < 0 || label->label >= shape_.classes) throw ProtocolError("label out of range");
  return label->label;
}

}  // namespace mgmw
