#pragma once

// Child process with piped standard streams, driven by poll(2) so that
// writing a large script never deadlocks against an unread stdout.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "knart/error.hpp"

extern char** environ;

namespace knart::proc {

using Clock = std::chrono::steady_clock;

/// Splits a command line on whitespace, honoring single and double quotes.
inline std::vector<std::string> split_command(std::string_view line) {
  std::vector<std::string> out;
  std::string current;
  bool in_word = false;
  char quote = 0;
  for (char c : line) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        current.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (in_word) out.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else {
      current.push_back(c);
      in_word = true;
    }
  }
  if (in_word) out.push_back(std::move(current));
  return out;
}

class ChildProcess {
 public:
  enum class Wait { Done, Eof, Timeout };

  /// Starts `argv[0]` (searched on PATH). Throws SolverNotFound when the
  /// executable cannot be started.
  explicit ChildProcess(const std::vector<std::string>& argv) {
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
    if (argv.empty()) throw Error(ErrorKind::SolverNotFound, "empty solver command");

    int in[2], out[2], err[2];
    if (::pipe2(in, O_CLOEXEC) != 0) throw_errno("pipe");
    if (::pipe2(out, O_CLOEXEC) != 0) {
      close_pair(in);
      throw_errno("pipe");
    }
    if (::pipe2(err, O_CLOEXEC) != 0) {
      close_pair(in);
      close_pair(out);
      throw_errno("pipe");
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err[1], STDERR_FILENO);

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in[0]);
    ::close(out[1]);
    ::close(err[1]);
    if (rc != 0) {
      ::close(in[1]);
      ::close(out[0]);
      ::close(err[0]);
      pid_ = -1;
      throw Error(ErrorKind::SolverNotFound, "cannot start '" + argv[0] + "': " + std::strerror(rc));
    }
    stdin_ = in[1];
    stdout_ = out[0];
    stderr_ = err[0];
    for (int fd : {stdin_, stdout_, stderr_}) ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    close_fd(stdin_);
    if (pid_ > 0 && !reaped_) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
    close_fd(stdout_);
    close_fd(stderr_);
  }

  /// Writes all of `data`, draining the child's output meanwhile. Returns
  /// false on deadline or if the child stopped reading.
  bool send(std::string_view data, Clock::time_point deadline) {
    while (!data.empty()) {
      if (stdin_ < 0) return false;
      ssize_t n = ::write(stdin_, data.data(), data.size());
      if (n > 0) {
        data.remove_prefix(static_cast<std::size_t>(n));
        continue;
      }
      if (n < 0 && errno == EINTR) continue;
      if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
        close_fd(stdin_);
        return false;
      }
      if (pump(deadline, true) == Wait::Timeout) return false;
    }
    return true;
  }

  /// Reads until `done(stdout_buffer)` holds, stdout closes, or the
  /// deadline passes. `done` may consume the buffer.
  Wait receive(const std::function<bool(std::string&)>& done, Clock::time_point deadline) {
    for (;;) {
      if (done(out_)) return Wait::Done;
      if (stdout_ < 0) return Wait::Eof;
      if (pump(deadline, false) == Wait::Timeout) return done(out_) ? Wait::Done : Wait::Timeout;
    }
  }

  void close_stdin() { close_fd(stdin_); }

  void kill() {
    if (pid_ > 0 && !reaped_) ::kill(pid_, SIGKILL);
  }

  /// Reaps the child, killing it if it outlives `deadline`. Returns the
  /// exit status (128 + signal for signaled children).
  int wait(Clock::time_point deadline) {
    if (reaped_) return exit_code_;
    for (;;) {
      int status = 0;
      pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        reaped_ = true;
        exit_code_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
        return exit_code_;
      }
      if (r < 0 && errno != EINTR) {
        reaped_ = true;
        return exit_code_ = -1;
      }
      if (Clock::now() >= deadline) {
        ::kill(pid_, SIGKILL);
        deadline = Clock::now() + std::chrono::seconds(5);
      }
      if (stdout_ >= 0 || stderr_ >= 0) {
        pump(std::min(deadline, Clock::now() + std::chrono::milliseconds(20)), false);
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
    }
  }

  std::string& output() { return out_; }
  const std::string& errors() const { return err_; }

 private:
  [[noreturn]] static void throw_errno(const char* what) {
    throw Error(ErrorKind::SolverError, std::string(what) + ": " + std::strerror(errno));
  }
  static void close_pair(int p[2]) {
    ::close(p[0]);
    ::close(p[1]);
  }
  static void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }

  /// One poll round over the open descriptors.
  Wait pump(Clock::time_point deadline, bool want_write) {
    auto now = Clock::now();
    if (now >= deadline) return Wait::Timeout;
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd fds[3];
    nfds_t n = 0;
    if (stdout_ >= 0) fds[n++] = {stdout_, POLLIN, 0};
    if (stderr_ >= 0) fds[n++] = {stderr_, POLLIN, 0};
    if (want_write && stdin_ >= 0) fds[n++] = {stdin_, POLLOUT, 0};
    if (n == 0) return Wait::Eof;
    int rc = ::poll(fds, n, static_cast<int>(std::min<long long>(ms + 1, 1000)));
    if (rc < 0 && errno != EINTR) return Wait::Eof;
    for (nfds_t i = 0; i < n && rc > 0; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      if (fds[i].fd == stdout_) drain(stdout_, out_);
      else if (fds[i].fd == stderr_) drain(stderr_, err_);
    }
    return Clock::now() >= deadline ? Wait::Timeout : Wait::Done;
  }

  static void drain(int& fd, std::string& sink) {
    char buf[8192];
    for (;;) {
      ssize_t n = ::read(fd, buf, sizeof buf);
      if (n > 0) {
        sink.append(buf, static_cast<std::size_t>(n));
        continue;
      }
      if (n < 0 && errno == EINTR) continue;
      if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) close_fd(fd);
      return;
    }
  }

  pid_t pid_ = -1;
  int stdin_ = -1, stdout_ = -1, stderr_ = -1;
  std::string out_, err_;
  bool reaped_ = false;
  int exit_code_ = -1;
};

}  // namespace knart::proc
