#include <fcntl.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "peap/error.hpp"
#include "peap/metrics.hpp"

namespace peap {

namespace {

constexpr int kIsolationRefused = 125;
constexpr int kExecFailed = 127;

std::string find_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) return access(name.c_str(), X_OK) == 0 ? name : std::string();
  const char* path = std::getenv("PATH");
  std::stringstream dirs(path ? path : "/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    const std::string candidate = dir + "/" + name;
    if (access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return {};
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "peap-sandbox-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw Error(ErrorCode::SandboxUnavailable, "cannot create sandbox directory");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

SandboxPool::SandboxPool(SandboxConfig cfg)
    : cfg_(std::move(cfg)), slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, cfg_.max_concurrent))) {}

SandboxResult SandboxPool::run(std::string_view program, const std::vector<std::string>& tests,
                               std::string_view epilogue) const {
  const std::string interpreter = find_executable(cfg_.interpreter);
  if (interpreter.empty()) throw Error(ErrorCode::SandboxUnavailable, "interpreter '" + cfg_.interpreter + "' not found");

  SlotGuard slot(slots_);
  TempDir dir;
  const auto script = dir.path() / "program.py";
  const auto err_path = dir.path() / "stderr.txt";
  {
    std::ofstream out(script);
    out << program << "\n\n";
    for (const auto& t : tests) out << t << "\n";
    out << epilogue;
    if (!out) throw Error(ErrorCode::SandboxUnavailable, "cannot write sandbox script");
  }

  // Everything the child touches is prepared before fork.
  const std::string dir_str = dir.path().string();
  const std::string script_str = script.string();
  const std::string err_str = err_path.string();
  std::string env_path = "PATH=/usr/local/bin:/usr/bin:/bin";
  std::string env_home = "HOME=" + dir_str;
  std::string env_mpl = "MPLBACKEND=Agg";
  std::string env_mplcfg = "MPLCONFIGDIR=" + dir_str;
  std::vector<char*> argv{const_cast<char*>(interpreter.c_str()), const_cast<char*>("-I"),
                          const_cast<char*>(script_str.c_str()), nullptr};
  std::vector<char*> envp{env_path.data(), env_home.data(), env_mpl.data(), env_mplcfg.data(), nullptr};
  const rlim_t mem = static_cast<rlim_t>(cfg_.memory_limit_bytes);
  const bool require_isolation = cfg_.require_network_isolation;

  int status_pipe[2];
  if (pipe2(status_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::SandboxUnavailable, "pipe failed");

  const pid_t pid = fork();
  if (pid < 0) {
    close(status_pipe[0]);
    close(status_pipe[1]);
    throw Error(ErrorCode::SandboxUnavailable, "fork failed");
  }
  if (pid == 0) {
    setpgid(0, 0);
    close(status_pipe[0]);
    char isolated = '1';
    if (unshare(CLONE_NEWNET) != 0 && unshare(CLONE_NEWUSER | CLONE_NEWNET) != 0) isolated = '0';
    if (write(status_pipe[1], &isolated, 1) != 1) _exit(kExecFailed);
    if (isolated == '0' && require_isolation) _exit(kIsolationRefused);
    if (chdir(dir_str.c_str()) != 0) _exit(kExecFailed);
    const int devnull = open("/dev/null", O_RDWR);
    const int err_fd = open(err_str.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (devnull < 0 || err_fd < 0) _exit(kExecFailed);
    dup2(devnull, STDIN_FILENO);
    dup2(devnull, STDOUT_FILENO);
    dup2(err_fd, STDERR_FILENO);
    rlimit lim{mem, mem};
    setrlimit(RLIMIT_AS, &lim);
    rlimit core{0, 0};
    setrlimit(RLIMIT_CORE, &core);
    execve(argv[0], argv.data(), envp.data());
    _exit(kExecFailed);
  }
  close(status_pipe[1]);
  char isolated = '0';
  if (read(status_pipe[0], &isolated, 1) != 1) isolated = '0';
  close(status_pipe[0]);

  SandboxResult result;
  result.network_isolated = isolated == '1';
  const auto deadline = std::chrono::steady_clock::now() + cfg_.timeout;
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw Error(ErrorCode::SandboxUnavailable, "waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  // Any grandchildren left behind share the process group.
  kill(-pid, SIGKILL);

  if (!result.timed_out && WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    if (result.exit_code == kIsolationRefused && require_isolation) {
      throw Error(ErrorCode::SandboxUnavailable, "network namespace isolation refused by the kernel");
    }
    result.passed = result.exit_code == 0;
  }
  std::ifstream err(err_path);
  std::string text((std::istreambuf_iterator<char>(err)), std::istreambuf_iterator<char>());
  result.stderr_tail = text.size() > 2000 ? text.substr(text.size() - 2000) : text;
  return result;
}

}  // namespace peap
