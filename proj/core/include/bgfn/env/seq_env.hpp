#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bgfn::env {

inline constexpr int kStopToken = 0;
inline constexpr int kMaxSeqLength = 16;
inline constexpr int kMaxVocab = 32;

/// Amino-acid letters for token indices 1..19 (no cysteine). Index 0 is STOP/pad.
inline constexpr std::string_view kAminoAlphabet = "ADEFGHIKLMNPQRSTVWY";

/// Token-sequence environment: vocabulary index 0 doubles as STOP and padding.
struct SeqConfig {
  int vocab_size = 20;
  int max_length = 10;
  int window = 6;

  void validate() const;
};

/// Fixed-width right-padded buffer of written tokens.
struct SeqState {
  std::array<std::uint8_t, kMaxSeqLength> buffer{};
  int length = 0;
  bool terminated = false;

  bool operator==(const SeqState&) const = default;
  [[nodiscard]] std::vector<int> tokens() const;
};

using SeqMask = std::array<bool, kMaxVocab>;

/// Action 0 terminates (length unchanged); 1..V-1 appends. At length
/// max_length only action 0 is legal. Throws EnvironmentLogicError on a
/// terminated state or an illegal action.
[[nodiscard]] SeqState seq_step(const SeqState& s, int action, const SeqConfig& cfg);

/// Deterministic backward policy: the only predecessor is the popped state,
/// reached with probability one. Throws EnvironmentLogicError on the initial state.
[[nodiscard]] double seq_backward_logprob(const SeqState& s);

/// Undoes the last forward action (STOP first, then the last token).
[[nodiscard]] SeqState seq_pop(const SeqState& s);

/// Last `window` written tokens, left-filled with the pad token.
[[nodiscard]] std::vector<int> context_window(const SeqState& s, const SeqConfig& cfg);
void context_window(const SeqState& s, const SeqConfig& cfg, std::span<int> out);

/// All vocab entries allowed below max_length; only STOP at max_length.
/// Entries at or beyond vocab_size are false.
[[nodiscard]] SeqMask terminal_force_mask(const SeqState& s, const SeqConfig& cfg);

/// Letters for tokens 1..19; throws UsageError on tokens outside the alphabet.
[[nodiscard]] std::string tokens_to_string(std::span<const int> tokens);
[[nodiscard]] std::vector<int> string_to_tokens(std::string_view letters);

}  // namespace bgfn::env
