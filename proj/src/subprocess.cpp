#include "qrefine/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "qrefine/error.hpp"

namespace qrefine {

namespace fs = std::filesystem;

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(Errc::io_error, std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
  int read_end() const { return fds[0]; }
  int write_end() const { return fds[1]; }
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

}  // namespace

std::optional<fs::path> find_executable(std::string_view name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string_view::npos) {
    fs::path p(name);
    if (::access(p.c_str(), X_OK) == 0) return p;
    return std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  std::string_view dirs = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
  while (!dirs.empty()) {
    auto sep = dirs.find(':');
    auto dir = dirs.substr(0, sep);
    fs::path candidate = fs::path(dir.empty() ? "." : std::string(dir)) / std::string(name);
    if (::access(candidate.c_str(), X_OK) == 0 && !fs::is_directory(candidate)) return candidate;
    if (sep == std::string_view::npos) break;
    dirs.remove_prefix(sep + 1);
  }
  return std::nullopt;
}

ProcessResult run_process(const ProcessOptions& options) {
  static const bool sigpipe_ignored = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;
  if (options.argv.empty()) throw Error(Errc::invalid_argument, "empty command line");
  auto exe = find_executable(options.argv.front());
  if (!exe) throw Error(Errc::tool_not_found, "cannot find executable '" + options.argv.front() + "'");

  std::vector<char*> argv;
  for (const auto& a : options.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  std::vector<char*> envp;
  if (options.environment) {
    for (const auto& e : *options.environment) envp.push_back(const_cast<char*>(e.c_str()));
    envp.push_back(nullptr);
  }

  Pipe in, out, err, exec_status;
  const auto started = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::io_error, std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in.read_end(), STDIN_FILENO);
    ::dup2(out.write_end(), STDOUT_FILENO);
    ::dup2(err.write_end(), STDERR_FILENO);
    if (!options.working_directory.empty() && ::chdir(options.working_directory.c_str()) != 0) {
      int e = errno;
      (void)!::write(exec_status.write_end(), &e, sizeof e);
      ::_exit(127);
    }
    if (options.environment) {
      ::execve(exe->c_str(), argv.data(), envp.data());
    } else {
      ::execv(exe->c_str(), argv.data());
    }
    int e = errno;
    (void)!::write(exec_status.write_end(), &e, sizeof e);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  in.close_read();
  out.close_write();
  err.close_write();
  exec_status.close_write();

  int child_errno = 0;
  if (::read(exec_status.read_end(), &child_errno, sizeof child_errno) == sizeof child_errno) {
    ::waitpid(pid, nullptr, 0);
    throw Error(Errc::tool_not_found,
                "cannot start '" + options.argv.front() + "': " + std::strerror(child_errno));
  }

  ProcessResult result;
  std::string_view pending = options.stdin_data;
  if (pending.empty()) in.close_write();
  set_nonblocking(out.read_end());
  set_nonblocking(err.read_end());
  if (in.write_end() >= 0) set_nonblocking(in.write_end());

  const auto deadline = started + options.timeout;
  char buffer[65536];
  while (out.read_end() >= 0 || err.read_end() >= 0) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      ::kill(-pid, SIGKILL);
      break;
    }
    std::vector<pollfd> fds;
    if (out.read_end() >= 0) fds.push_back({out.read_end(), POLLIN, 0});
    if (err.read_end() >= 0) fds.push_back({err.read_end(), POLLIN, 0});
    if (in.write_end() >= 0) fds.push_back({in.write_end(), POLLOUT, 0});
    const auto wait_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
    if (::poll(fds.data(), fds.size(), static_cast<int>(std::min<long long>(wait_ms, 1000))) < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::io_error, std::string("poll failed: ") + std::strerror(errno));
    }
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == in.write_end()) {
        const auto n = ::write(p.fd, pending.data(), pending.size());
        if (n > 0) pending.remove_prefix(static_cast<std::size_t>(n));
        if (n < 0 && errno != EAGAIN) pending = {};
        if (pending.empty()) in.close_write();
        continue;
      }
      const auto n = ::read(p.fd, buffer, sizeof buffer);
      if (n > 0) {
        (p.fd == out.read_end() ? result.stdout_data : result.stderr_data).append(buffer, n);
      } else if (n == 0 || errno != EAGAIN) {
        if (p.fd == out.read_end()) out.close_read(); else err.close_read();
      }
    }
  }
  in.close_write();

  int status = 0;
  if (result.timed_out) {
    ::waitpid(pid, &status, 0);
  } else {
    // Output is closed; the child may still be running (e.g. closed its fds).
    while (true) {
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        result.timed_out = true;
        ::kill(-pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        break;
      }
      ::usleep(2000);
    }
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.signaled = true;
    result.exit_code = 128 + WTERMSIG(status);
  }
  result.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

TempDir::TempDir(std::string_view prefix) {
  std::string pattern = (fs::temp_directory_path() / (std::string(prefix) + "-XXXXXX")).string();
  if (::mkdtemp(pattern.data()) == nullptr) {
    throw Error(Errc::io_error, std::string("mkdtemp failed: ") + std::strerror(errno));
  }
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace qrefine
