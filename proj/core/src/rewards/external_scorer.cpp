#include "bgfn/rewards/external_scorer.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <csignal>
#include <cstdlib>

#include "bgfn/env/seq_env.hpp"
#include "bgfn/error.hpp"

namespace bgfn::rewards {

ExternalProcessScorer::ExternalProcessScorer(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw ConfigError("external scorer: pipe() failed");
  }
  std::signal(SIGPIPE, SIG_IGN);
  const pid_t pid = ::fork();
  if (pid < 0) {
    throw ConfigError("external scorer: fork() failed");
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    std::_Exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  pid_ = pid;
  to_child_ = ::fdopen(to_child[1], "w");
  from_child_ = ::fdopen(from_child[0], "r");
  if (to_child_ == nullptr || from_child_ == nullptr) {
    throw ConfigError("external scorer: fdopen() failed");
  }
}

ExternalProcessScorer::~ExternalProcessScorer() {
  if (to_child_ != nullptr) {
    std::fclose(to_child_);
  }
  if (from_child_ != nullptr) {
    std::fclose(from_child_);
  }
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

double ExternalProcessScorer::score(std::span<const int> tokens) const {
  const std::string request = env::tokens_to_string(tokens);
  std::lock_guard lock(mutex_);
  if (std::fprintf(to_child_, "%s\n", request.c_str()) < 0 || std::fflush(to_child_) != 0) {
    throw ConfigError("external scorer: write failed (process exited?)");
  }
  std::array<char, 256> line{};
  if (std::fgets(line.data(), static_cast<int>(line.size()), from_child_) == nullptr) {
    throw ConfigError("external scorer: no response for '" + request + "'");
  }
  char* end = nullptr;
  const double p = std::strtod(line.data(), &end);
  if (end == line.data() || !(p > 0.0 && p < 1.0)) {
    throw DomainError("external scorer returned an invalid probability for '" + request + "': " +
                      std::string(line.data()));
  }
  return p;
}

}  // namespace bgfn::rewards
