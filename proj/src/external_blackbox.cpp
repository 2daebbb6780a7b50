#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <memory>

#include "rducb/benchmarks.hpp"
#include "rducb/error.hpp"

namespace rducb {

namespace {

constexpr std::size_t kStderrTail = 2048;

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ExternalBlackbox::ExternalBlackbox(std::string command,
                                   std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  ignore_sigpipe();
  start();
}

ExternalBlackbox::~ExternalBlackbox() { stop(); }

void ExternalBlackbox::start() {
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) {
    throw Error(ErrorCode::kBlackboxError,
                std::string("pipe failed: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    throw Error(ErrorCode::kBlackboxError,
                std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0],
                   err_pipe[1]}) {
      ::close(fd);
    }
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  err_child_ = err_pipe[0];
  ::fcntl(err_child_, F_SETFL, ::fcntl(err_child_, F_GETFL) | O_NONBLOCK);
  stdout_buffer_.clear();
  stderr_tail_.clear();
}

void ExternalBlackbox::stop() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (err_child_ >= 0) ::close(err_child_);
  to_child_ = from_child_ = err_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }
  pid_ = -1;
}

void ExternalBlackbox::drain_stderr() {
  if (err_child_ < 0) return;
  char buf[512];
  while (true) {
    const ssize_t n = ::read(err_child_, buf, sizeof buf);
    if (n <= 0) break;
    stderr_tail_.append(buf, static_cast<std::size_t>(n));
    if (stderr_tail_.size() > kStderrTail) {
      stderr_tail_.erase(0, stderr_tail_.size() - kStderrTail);
    }
  }
}

void ExternalBlackbox::fail(const std::string& why) {
  drain_stderr();
  std::string msg = "black box '" + command_ + "': " + why;
  if (!stdout_buffer_.empty()) msg += "; stdout: " + stdout_buffer_;
  if (!stderr_tail_.empty()) msg += "; stderr: " + stderr_tail_;
  stop();
  throw Error(ErrorCode::kBlackboxError, msg);
}

double ExternalBlackbox::evaluate(std::span<const double> x) {
  if (pid_ < 0) start();
  std::string request;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) request += ' ';
    request += format_double(x[i]);
  }
  request += '\n';
  std::size_t sent = 0;
  while (sent < request.size()) {
    const ssize_t n = ::write(to_child_, request.data() + sent, request.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("process closed its input");
    }
    sent += static_cast<std::size_t>(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  stdout_buffer_.clear();
  while (stdout_buffer_.find('\n') == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail("timeout after " + std::to_string(timeout_.count()) + " ms");
    pollfd fds[2] = {{from_child_, POLLIN, 0}, {err_child_, POLLIN, 0}};
    const int r = ::poll(fds, 2, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      fail(std::string("poll failed: ") + std::strerror(errno));
    }
    if (r == 0) continue;
    if (fds[1].revents & POLLIN) drain_stderr();
    if (fds[0].revents & (POLLIN | POLLHUP)) {
      char buf[4096];
      const ssize_t n = ::read(from_child_, buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) fail("process exited before replying");
      stdout_buffer_.append(buf, static_cast<std::size_t>(n));
    }
  }
  const auto nl = stdout_buffer_.find('\n');
  if (nl + 1 != stdout_buffer_.size()) fail("reply has more than one line");
  const std::string_view line = trim(std::string_view(stdout_buffer_).substr(0, nl));
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
  if (line.empty() || ec != std::errc() || ptr != line.data() + line.size()) {
    fail("non-numeric reply");
  }
  if (!std::isfinite(value)) fail("non-finite reply");
  stdout_buffer_.clear();
  return value;
}

double external_blackbox(ExternalBlackbox& box, std::span<const double> x) {
  return box.evaluate(x);
}

Benchmark make_external_benchmark(std::string command, std::vector<Bounds> box,
                                  Sense sense, std::chrono::milliseconds timeout) {
  if (box.empty()) {
    throw Error(ErrorCode::kInvalidParameter, "external black box needs a domain");
  }
  auto process = std::make_shared<ExternalBlackbox>(std::move(command), timeout);
  Benchmark bm;
  bm.name = "external";
  bm.dim = box.size();
  bm.box = std::move(box);
  bm.sense = sense;
  bm.evaluate = [process](std::span<const double> x) { return process->evaluate(x); };
  return bm;
}

}  // namespace rducb
