#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace bgfn::rewards {

/// Probability-to-reward mapping for sequences.
struct SeqRewardConfig {
  double cutoff = 0.94;
  double temperature = 0.3;
  double clip_min = -30.0;
  double clip_max = 0.0;

  void validate() const;
};

/// Length-aware logistic margin: 0 when p >= cutoff, otherwise
/// (L / temperature) * (logit(p) - logit(cutoff)), clipped to
/// [clip_min, clip_max]. Length 0 maps to clip_min. Throws DomainError
/// unless 0 < p < 1.
double seq_log_reward(double p, int length, const SeqRewardConfig& cfg = {});

/// Deterministic sequence -> probability map in (0,1). Implementations must
/// be pure so concurrent calls are safe.
class ProxyScorer {
 public:
  virtual ~ProxyScorer() = default;
  [[nodiscard]] virtual double score(std::span<const int> tokens) const = 0;
};

/// Stand-in for a trained classifier bundle. Each motif is a sub-scorer
///   p_j(y) = sigmoid(slope * matches_j(y) + offset)
/// where matches_j is the best positional agreement between the motif and
/// any (possibly overhanging) alignment against y. The score is the max
/// over sub-scorers, so only sequences containing a full motif exceed 0.94.
class SyntheticScorer final : public ProxyScorer {
 public:
  struct Options {
    std::vector<std::vector<int>> motifs;
    double slope = 1.45;
    double offset = -0.85;
  };

  SyntheticScorer();
  explicit SyntheticScorer(Options options);

  [[nodiscard]] double score(std::span<const int> tokens) const override;
  [[nodiscard]] const std::vector<std::vector<int>>& motifs() const { return options_.motifs; }

  /// Built-in motif set over the 19-letter alphabet.
  static std::vector<std::vector<int>> default_motifs();

 private:
  Options options_;
};

/// Number of motif positions matched by the best alignment of `motif` against `tokens`.
int best_motif_matches(std::span<const int> tokens, std::span<const int> motif);

/// Log-reward for complete sequences; memoizes scorer calls (thread-safe).
class SeqReward {
 public:
  SeqReward(std::shared_ptr<const ProxyScorer> scorer, SeqRewardConfig cfg);

  [[nodiscard]] double log_reward(std::span<const int> tokens) const;
  /// Scorer probability (memoized). Empty sequences are not scored and return 0.
  [[nodiscard]] double probability(std::span<const int> tokens) const;
  [[nodiscard]] const SeqRewardConfig& config() const { return cfg_; }
  [[nodiscard]] const ProxyScorer& scorer() const { return *scorer_; }

 private:
  std::shared_ptr<const ProxyScorer> scorer_;
  SeqRewardConfig cfg_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, double> cache_;
};

}  // namespace bgfn::rewards
