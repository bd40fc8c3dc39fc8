#pragma once

#include <cstdio>
#include <mutex>
#include <string>

#include "bgfn/rewards/seq_rewards.hpp"

namespace bgfn::rewards {

/// Scorer backed by a child process speaking a line protocol on its
/// standard streams: one sequence string (amino-acid letters) per request
/// line, one decimal probability per response line. Calls are serialized.
class ExternalProcessScorer final : public ProxyScorer {
 public:
  /// Launches `command` through /bin/sh. Throws ConfigError on failure.
  explicit ExternalProcessScorer(const std::string& command);
  ~ExternalProcessScorer() override;

  ExternalProcessScorer(const ExternalProcessScorer&) = delete;
  ExternalProcessScorer& operator=(const ExternalProcessScorer&) = delete;

  [[nodiscard]] double score(std::span<const int> tokens) const override;

 private:
  mutable std::mutex mutex_;
  int pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
};

}  // namespace bgfn::rewards
