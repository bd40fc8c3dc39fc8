#include "bgfn/rewards/seq_rewards.hpp"

#include <algorithm>
#include <cmath>

#include "bgfn/env/seq_env.hpp"
#include "bgfn/error.hpp"
#include "bgfn/numkit/logspace.hpp"

namespace bgfn::rewards {

void SeqRewardConfig::validate() const {
  if (!(cutoff > 0.0 && cutoff < 1.0)) {
    throw ConfigError("sequence reward cutoff must lie in (0,1)");
  }
  if (!(temperature > 0.0)) {
    throw ConfigError("sequence reward temperature must be > 0");
  }
  if (!(clip_min < clip_max)) {
    throw ConfigError("sequence reward clip bounds must satisfy min < max");
  }
}

double seq_log_reward(double p, int length, const SeqRewardConfig& cfg) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("seq_log_reward: probability must lie in (0,1), got " + std::to_string(p));
  }
  if (length <= 0) {
    return cfg.clip_min;
  }
  if (p >= cfg.cutoff) {
    return std::clamp(0.0, cfg.clip_min, cfg.clip_max);
  }
  const double margin = numkit::logit(p) - numkit::logit(cfg.cutoff);
  return std::clamp(length / cfg.temperature * margin, cfg.clip_min, cfg.clip_max);
}

int best_motif_matches(std::span<const int> tokens, std::span<const int> motif) {
  const int n = static_cast<int>(tokens.size());
  const int m = static_cast<int>(motif.size());
  int best = 0;
  for (int offset = -(m - 1); offset < n; ++offset) {
    int matches = 0;
    for (int k = 0; k < m; ++k) {
      const int pos = offset + k;
      if (pos >= 0 && pos < n && tokens[static_cast<std::size_t>(pos)] == motif[static_cast<std::size_t>(k)]) {
        ++matches;
      }
    }
    best = std::max(best, matches);
  }
  return best;
}

std::vector<std::vector<int>> SyntheticScorer::default_motifs() {
  const char* letters[] = {"KLW", "RRF", "WKI", "GLF", "HVR", "PYK"};
  std::vector<std::vector<int>> motifs;
  for (const char* s : letters) {
    motifs.push_back(env::string_to_tokens(s));
  }
  return motifs;
}

SyntheticScorer::SyntheticScorer() : SyntheticScorer(Options{default_motifs()}) {}

SyntheticScorer::SyntheticScorer(Options options) : options_(std::move(options)) {
  if (options_.motifs.empty()) {
    throw ConfigError("synthetic scorer needs at least one motif");
  }
  for (const auto& m : options_.motifs) {
    if (m.empty()) {
      throw ConfigError("synthetic scorer motif must be non-empty");
    }
  }
}

double SyntheticScorer::score(std::span<const int> tokens) const {
  double best = 0.0;
  for (const auto& motif : options_.motifs) {
    const int matches = best_motif_matches(tokens, motif);
    best = std::max(best, numkit::sigmoid(options_.slope * matches + options_.offset));
  }
  return best;
}

SeqReward::SeqReward(std::shared_ptr<const ProxyScorer> scorer, SeqRewardConfig cfg)
    : scorer_(std::move(scorer)), cfg_(cfg) {
  if (!scorer_) {
    throw ConfigError("sequence reward needs a scorer");
  }
  cfg_.validate();
}

double SeqReward::probability(std::span<const int> tokens) const {
  if (tokens.empty()) {
    return 0.0;
  }
  std::string key(tokens.size(), '\0');
  std::transform(tokens.begin(), tokens.end(), key.begin(), [](int t) { return static_cast<char>(t); });
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      return it->second;
    }
  }
  const double p = scorer_->score(tokens);
  std::lock_guard lock(mutex_);
  cache_.emplace(std::move(key), p);
  return p;
}

double SeqReward::log_reward(std::span<const int> tokens) const {
  if (tokens.empty()) {
    return cfg_.clip_min;
  }
  return seq_log_reward(probability(tokens), static_cast<int>(tokens.size()), cfg_);
}

}  // namespace bgfn::rewards
