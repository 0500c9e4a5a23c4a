#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <fmt/format.h>

#include "smc/error.hpp"
#include "smc/exec/executor.hpp"

namespace smc {

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) {
      throw Error(ErrorKind::Io, std::string("pipe failed: ") + std::strerror(errno));
    }
  }
  ~Pipe() { close_all(); }
  void close_end(int i) {
    if (fd[i] >= 0) ::close(fd[i]);
    fd[i] = -1;
  }
  void close_all() {
    close_end(0);
    close_end(1);
  }
};

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return;  // worker exited early; the response (or its absence) tells the story
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string last_lines(const std::string& s, std::size_t max_chars = 400) {
  if (s.size() <= max_chars) return s;
  return s.substr(s.size() - max_chars);
}

}  // namespace

SubprocessExecutor::SubprocessExecutor(std::vector<std::string> argv, double grace_s)
    : argv_(std::move(argv)), grace_s_(grace_s) {
  if (argv_.empty()) throw Error(ErrorKind::Config, "executor command is empty");
}

ExecOutcome SubprocessExecutor::execute(const ExecRequest& req) {
  const std::string line = encode_request(req);
  Pipe in, out, err;

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::Io, std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in.fd[0], STDIN_FILENO);
    ::dup2(out.fd[1], STDOUT_FILENO);
    ::dup2(err.fd[1], STDERR_FILENO);
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    const std::string msg = std::string("cannot exec worker: ") + std::strerror(errno) + "\n";
    (void)!::write(STDERR_FILENO, msg.data(), msg.size());
    ::_exit(127);
  }
  in.close_end(0);
  out.close_end(1);
  err.close_end(1);

  ::signal(SIGPIPE, SIG_IGN);
  write_all(in.fd[1], line);
  in.close_end(1);

  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(req.limits.timeout_s +
                                                                         grace_s_));
  std::string stdout_buf, stderr_buf;
  bool out_open = true, err_open = true, killed = false;
  char buf[8192];
  while (out_open || err_open) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) {
      ::kill(pid, SIGKILL);
      killed = true;
      break;
    }
    pollfd fds[2];
    int n = 0;
    if (out_open) fds[n++] = {out.fd[0], POLLIN, 0};
    if (err_open) fds[n++] = {err.fd[0], POLLIN, 0};
    const int rc = ::poll(fds, static_cast<nfds_t>(n), static_cast<int>(left.count()));
    if (rc < 0 && errno != EINTR) break;
    for (int i = 0; i < n; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
      const bool is_out = fds[i].fd == out.fd[0];
      if (got <= 0) {
        (is_out ? out_open : err_open) = false;
      } else {
        (is_out ? stdout_buf : stderr_buf).append(buf, static_cast<std::size_t>(got));
      }
    }
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }

  if (killed) {
    return ExecError{ExecErrorKind::Timeout,
                     fmt::format("execution exceeded {} s", req.limits.timeout_s), {}};
  }
  const auto nl = stdout_buf.find('\n');
  const std::string response = stdout_buf.substr(0, nl);
  if (response.empty()) {
    std::string msg = "worker produced no response";
    if (WIFEXITED(status)) msg += fmt::format(" (exit code {})", WEXITSTATUS(status));
    else if (WIFSIGNALED(status)) msg += fmt::format(" (signal {})", WTERMSIG(status));
    if (!stderr_buf.empty()) msg += ": " + last_lines(stderr_buf);
    return ExecError{ExecErrorKind::Protocol, msg, {}};
  }
  auto outcome = decode_response(response);
  if (!(WIFEXITED(status) && WEXITSTATUS(status) == 0) &&
      !std::holds_alternative<ExecError>(outcome)) {
    return ExecError{ExecErrorKind::Protocol, "worker exited abnormally after responding", {}};
  }
  if (auto* t = std::get_if<ObjectTrace>(&outcome);
      t && static_cast<int>(t->objects.size()) > req.limits.max_objects) {
    return ExecError{ExecErrorKind::ObjectLimit,
                     fmt::format("program created more than {} objects", req.limits.max_objects),
                     {}};
  }
  return outcome;
}

}  // namespace smc
