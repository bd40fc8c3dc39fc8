#include "bgfn/env/seq_env.hpp"

#include <string>

#include "bgfn/error.hpp"

namespace bgfn::env {

void SeqConfig::validate() const {
  if (vocab_size < 2 || vocab_size > kMaxVocab) {
    throw ConfigError("sequence vocab_size must be in [2, " + std::to_string(kMaxVocab) + "]");
  }
  if (max_length < 1 || max_length > kMaxSeqLength) {
    throw ConfigError("sequence max_length must be in [1, " + std::to_string(kMaxSeqLength) + "]");
  }
  if (window < 1 || window > max_length) {
    throw ConfigError("sequence window must be in [1, max_length]");
  }
}

std::vector<int> SeqState::tokens() const {
  return {buffer.begin(), buffer.begin() + length};
}

SeqState seq_step(const SeqState& s, int action, const SeqConfig& cfg) {
  if (s.terminated) {
    throw EnvironmentLogicError("seq_step on a terminated sequence");
  }
  if (action < 0 || action >= cfg.vocab_size) {
    throw EnvironmentLogicError("sequence action out of range: " + std::to_string(action));
  }
  SeqState next = s;
  if (action == kStopToken) {
    next.terminated = true;
    return next;
  }
  if (s.length >= cfg.max_length) {
    throw EnvironmentLogicError("sequence is full; only STOP is allowed");
  }
  next.buffer[static_cast<std::size_t>(s.length)] = static_cast<std::uint8_t>(action);
  next.length = s.length + 1;
  return next;
}

double seq_backward_logprob(const SeqState& s) {
  if (!s.terminated && s.length == 0) {
    throw EnvironmentLogicError("the initial sequence state has no predecessor");
  }
  return 0.0;
}

SeqState seq_pop(const SeqState& s) {
  (void)seq_backward_logprob(s);
  SeqState prev = s;
  if (s.terminated) {
    prev.terminated = false;
    return prev;
  }
  prev.length = s.length - 1;
  prev.buffer[static_cast<std::size_t>(prev.length)] = 0;
  return prev;
}

void context_window(const SeqState& s, const SeqConfig& cfg, std::span<int> out) {
  if (out.size() != static_cast<std::size_t>(cfg.window)) {
    throw UsageError("context_window: output size must equal the window");
  }
  for (int i = 0; i < cfg.window; ++i) {
    const int pos = s.length - cfg.window + i;
    out[static_cast<std::size_t>(i)] = pos >= 0 ? s.buffer[static_cast<std::size_t>(pos)] : kStopToken;
  }
}

std::vector<int> context_window(const SeqState& s, const SeqConfig& cfg) {
  std::vector<int> out(static_cast<std::size_t>(cfg.window));
  context_window(s, cfg, out);
  return out;
}

SeqMask terminal_force_mask(const SeqState& s, const SeqConfig& cfg) {
  SeqMask mask{};
  if (s.length >= cfg.max_length) {
    mask[kStopToken] = true;
    return mask;
  }
  for (int a = 0; a < cfg.vocab_size; ++a) {
    mask[static_cast<std::size_t>(a)] = true;
  }
  return mask;
}

std::string tokens_to_string(std::span<const int> tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (int t : tokens) {
    if (t < 1 || t > static_cast<int>(kAminoAlphabet.size())) {
      throw UsageError("token outside the amino-acid alphabet: " + std::to_string(t));
    }
    out.push_back(kAminoAlphabet[static_cast<std::size_t>(t - 1)]);
  }
  return out;
}

std::vector<int> string_to_tokens(std::string_view letters) {
  std::vector<int> out;
  out.reserve(letters.size());
  for (char c : letters) {
    const auto pos = kAminoAlphabet.find(c);
    if (pos == std::string_view::npos) {
      throw UsageError(std::string("letter outside the amino-acid alphabet: ") + c);
    }
    out.push_back(static_cast<int>(pos) + 1);
  }
  return out;
}

}  // namespace bgfn::env
