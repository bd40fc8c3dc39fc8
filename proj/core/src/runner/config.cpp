#include "bgfn/runner/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "bgfn/error.hpp"

namespace bgfn::runner {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

class Reader {
 public:
  explicit Reader(const ConfigMap& values) : values_(values) {}

  const std::string& text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
      throw ConfigError("config key '" + key + "' is missing");
    }
    return it->second;
  }

  double real(const std::string& key) const {
    const std::string& v = text(key);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      bad_value(key, v, "a number");
    }
    return out;
  }

  std::int64_t integer(const std::string& key) const {
    const std::string& v = text(key);
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      bad_value(key, v, "an integer");
    }
    return out;
  }

  std::int64_t positive(const std::string& key) const {
    const auto v = integer(key);
    if (v <= 0) {
      bad_value(key, text(key), "a positive integer");
    }
    return v;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(key)) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size()) {
        bad_value(key, text(key), "a comma-separated list of numbers");
      }
      out.push_back(v);
    }
    return out;
  }

  std::vector<std::int64_t> integers(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& item : split(key)) {
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size()) {
        bad_value(key, text(key), "a comma-separated list of integers");
      }
      out.push_back(v);
    }
    return out;
  }

 private:
  std::vector<std::string> split(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(text(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) {
        out.push_back(item);
      }
    }
    return out;
  }

  const ConfigMap& values_;
};

// Keys whose values fix the environment and parameter shapes.
const std::set<std::string>& environment_keys() {
  static const std::set<std::string> keys{
      "env.kind",        "grid.half_width",    "seq.vocab",       "seq.max_length", "seq.window",
      "policy.hidden",   "policy.layers",      "policy.frequencies", "policy.embed_dim", "policy.position_dim"};
  return keys;
}

// Wrap a config error with the key that caused it.
template <class F>
auto with_key(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.find("config key") == 0) {
      throw;
    }
    throw ConfigError("config key '" + key + "': " + what);
  }
}

}  // namespace

ConfigMap parse_config_text(std::string_view text, const std::string& origin) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string content = trim(line);
    if (content.empty()) {
      continue;
    }
    const auto eq = content.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(content).substr(0, eq));
    std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(where + ": empty key");
    }
    if (!out.emplace(key, value).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::pair<std::string, std::string> parse_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  }
  return {trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1))};
}

std::string format_config(const ConfigMap& values) {
  std::string out;
  for (const auto& [k, v] : values) {
    out += k + " = " + v + "\n";
  }
  return out;
}

ConfigMap default_config(std::string_view env_kind) {
  ConfigMap m{
      {"run.id", "run"},
      {"run.seed", "10"},
      {"run.output_dir", "runs"},
      {"env.kind", "grid"},
      {"grid.half_width", "15"},
      {"seq.vocab", "20"},
      {"seq.max_length", "10"},
      {"seq.window", "6"},
      {"policy.hidden", "128"},
      {"policy.layers", "2"},
      {"policy.frequencies", "8"},
      {"policy.embed_dim", "64"},
      {"policy.position_dim", "16"},
      {"reward.family", "rings"},
      {"reward.lambda", "1e-6"},
      {"reward.sigma", "1"},
      {"reward.8g.radius", "0.8"},
      {"reward.rings.radii", "0.4,0.8"},
      {"reward.rings.weights", "1,1"},
      {"reward.moons.radius", "0.6"},
      {"reward.moons.offset", "0.03"},
      {"reward.moons.gap", "0.018"},
      {"reward.moons.anchors", "256"},
      {"reward.cutoff", "0.94"},
      {"reward.temperature", "0.3"},
      {"reward.clip_min", "-30"},
      {"reward.clip_max", "0"},
      {"reward.scorer", "synthetic"},
      {"reward.scorer.command", ""},
      {"train.epochs", "10000"},
      {"train.batch_size", "128"},
      {"train.epsilon", "0"},
      {"train.lr.pf", "0.01"},
      {"train.lr.pb", "0.01"},
      {"train.lr.logz", "0.05"},
      {"train.adam.beta1", "0.9"},
      {"train.adam.beta2", "0.999"},
      {"train.adam.eps", "1e-8"},
      {"train.adam.weight_decay", "0.01"},
      {"loss.variant", "boosted"},
      {"boost.epochs", "3000,6000"},
      {"boost.alpha", "1"},
      {"boost.delta", "1e-12"},
      {"boost.k", "1"},
      {"eval.every", "100"},
      {"eval.b", "10"},
      {"eval.samples", "1000"},
      {"eval.threshold", "0.94"},
      {"checkpoint.every", "0"},
  };
  if (env_kind == "sequence") {
    m["env.kind"] = "sequence";
    m["train.epochs"] = "3000";
    m["train.batch_size"] = "4096";
    m["train.lr.pf"] = "0.05";
    m["train.lr.logz"] = "0.1";
    m["boost.epochs"] = "1200,2400";
    m["boost.alpha"] = "0";
    m["eval.every"] = "50";
  } else if (env_kind != "grid") {
    throw ConfigError("config key 'env.kind': expected 'grid' or 'sequence', got '" + std::string(env_kind) + "'");
  }
  return m;
}

double RunConfig::alpha_for_stage(int stage_id) const {
  if (boost_alpha.size() == 1) {
    return boost_alpha.front();
  }
  const auto index = static_cast<std::size_t>(stage_id - 2);
  if (stage_id < 2 || index >= boost_alpha.size()) {
    throw ConfigError("config key 'boost.alpha': no value for stage " + std::to_string(stage_id));
  }
  return boost_alpha[index];
}

RunConfig resolve_config(const ConfigMap& file_values, const ConfigMap& overrides) {
  std::string kind = "grid";
  if (auto it = overrides.find("env.kind"); it != overrides.end()) {
    kind = it->second;
  } else if (auto jt = file_values.find("env.kind"); jt != file_values.end()) {
    kind = jt->second;
  }
  ConfigMap values = default_config(kind);
  for (const auto* layer : {&file_values, &overrides}) {
    for (const auto& [k, v] : *layer) {
      if (!values.contains(k)) {
        throw ConfigError("unknown config key '" + k + "'");
      }
      values[k] = v;
    }
  }

  RunConfig cfg;
  cfg.values = values;
  const Reader r(values);
  cfg.run_id = r.text("run.id");
  if (cfg.run_id.empty() || cfg.run_id.find_first_of("/,\n") != std::string::npos) {
    bad_value("run.id", cfg.run_id, "a non-empty name without '/' or ','");
  }
  const auto seed = r.integer("run.seed");
  if (seed < 0) {
    bad_value("run.seed", r.text("run.seed"), "a non-negative integer");
  }
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.output_dir = r.text("run.output_dir");
  cfg.env = kind == "grid" ? EnvKind::kGrid : EnvKind::kSequence;

  cfg.grid.half_width = static_cast<int>(r.positive("grid.half_width"));
  with_key("grid.half_width", [&] { cfg.grid.validate(); return 0; });
  cfg.seq.vocab_size = static_cast<int>(r.integer("seq.vocab"));
  cfg.seq.max_length = static_cast<int>(r.integer("seq.max_length"));
  cfg.seq.window = static_cast<int>(r.integer("seq.window"));
  with_key("seq", [&] { cfg.seq.validate(); return 0; });
  if (cfg.env == EnvKind::kSequence && cfg.seq.vocab_size - 1 > static_cast<int>(env::kAminoAlphabet.size())) {
    bad_value("seq.vocab", r.text("seq.vocab"), "at most 20 (19 letters + STOP)");
  }

  cfg.grid_arch.hidden = static_cast<int>(r.positive("policy.hidden"));
  cfg.grid_arch.hidden_layers = static_cast<int>(r.integer("policy.layers"));
  cfg.grid_arch.frequencies = static_cast<int>(r.integer("policy.frequencies"));
  if (cfg.grid_arch.hidden_layers < 0) {
    bad_value("policy.layers", r.text("policy.layers"), "a non-negative integer");
  }
  if (cfg.grid_arch.frequencies < 0) {
    bad_value("policy.frequencies", r.text("policy.frequencies"), "a non-negative integer");
  }
  cfg.seq_arch.hidden = cfg.grid_arch.hidden;
  cfg.seq_arch.embed_dim = static_cast<int>(r.positive("policy.embed_dim"));
  cfg.seq_arch.position_dim = static_cast<int>(r.integer("policy.position_dim"));
  if (cfg.seq_arch.position_dim < 0 || cfg.seq_arch.position_dim % 2 != 0) {
    bad_value("policy.position_dim", r.text("policy.position_dim"), "a non-negative even integer");
  }

  auto& gr = cfg.grid_reward;
  gr.family = with_key("reward.family", [&] { return rewards::parse_grid_family(r.text("reward.family")); });
  gr.lambda = r.real("reward.lambda");
  if (!(gr.lambda > 0.0 && gr.lambda <= 1.0)) {
    bad_value("reward.lambda", r.text("reward.lambda"), "a value in (0, 1]");
  }
  const double sigma = r.real("reward.sigma");
  if (!(sigma > 0.0)) {
    bad_value("reward.sigma", r.text("reward.sigma"), "a positive number");
  }
  gr.eight_gaussians.sigma = gr.rings.sigma = gr.moons.sigma = sigma;
  gr.eight_gaussians.radius_frac = r.real("reward.8g.radius");
  gr.rings.radii_frac = r.reals("reward.rings.radii");
  gr.rings.weights = r.reals("reward.rings.weights");
  if (gr.rings.radii_frac.empty() || gr.rings.radii_frac.size() != gr.rings.weights.size()) {
    bad_value("reward.rings.weights", r.text("reward.rings.weights"), "one weight per ring radius");
  }
  gr.moons.radius_frac = r.real("reward.moons.radius");
  gr.moons.offset_frac = r.real("reward.moons.offset");
  gr.moons.gap_frac = r.real("reward.moons.gap");
  gr.moons.anchors = static_cast<int>(r.positive("reward.moons.anchors"));
  if (gr.moons.anchors % 2 != 0) {
    bad_value("reward.moons.anchors", r.text("reward.moons.anchors"), "an even integer");
  }

  cfg.seq_reward.cutoff = r.real("reward.cutoff");
  cfg.seq_reward.temperature = r.real("reward.temperature");
  cfg.seq_reward.clip_min = r.real("reward.clip_min");
  cfg.seq_reward.clip_max = r.real("reward.clip_max");
  with_key("reward.cutoff", [&] { cfg.seq_reward.validate(); return 0; });
  cfg.scorer = r.text("reward.scorer");
  cfg.scorer_command = r.text("reward.scorer.command");
  if (cfg.scorer != "synthetic" && cfg.scorer != "external") {
    bad_value("reward.scorer", cfg.scorer, "'synthetic' or 'external'");
  }
  if (cfg.scorer == "external" && cfg.scorer_command.empty()) {
    bad_value("reward.scorer.command", cfg.scorer_command, "a command for the external scorer");
  }

  cfg.epochs = r.positive("train.epochs");
  cfg.batch_size = static_cast<std::size_t>(r.positive("train.batch_size"));
  cfg.epsilon = r.real("train.epsilon");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) {
    bad_value("train.epsilon", r.text("train.epsilon"), "a value in [0, 1]");
  }
  cfg.optimizer.learning_rates = {{"pf", r.real("train.lr.pf")},
                                  {"pb", r.real("train.lr.pb")},
                                  {"logz", r.real("train.lr.logz")}};
  cfg.optimizer.beta1 = r.real("train.adam.beta1");
  cfg.optimizer.beta2 = r.real("train.adam.beta2");
  cfg.optimizer.eps = r.real("train.adam.eps");
  cfg.optimizer.weight_decay = r.real("train.adam.weight_decay");
  with_key("train.lr", [&] { cfg.optimizer.validate(); return 0; });

  const std::string variant = r.text("loss.variant");
  if (variant == "tb") {
    cfg.loss = LossVariant::kTb;
  } else if (variant == "boosted") {
    cfg.loss = LossVariant::kBoosted;
  } else {
    bad_value("loss.variant", variant, "'tb' or 'boosted'");
  }
  cfg.boost_epochs = r.integers("boost.epochs");
  for (std::size_t i = 0; i < cfg.boost_epochs.size(); ++i) {
    const auto e = cfg.boost_epochs[i];
    if (e <= 0 || e >= cfg.epochs || (i > 0 && e <= cfg.boost_epochs[i - 1])) {
      bad_value("boost.epochs", r.text("boost.epochs"), "strictly increasing epochs inside (0, train.epochs)");
    }
  }
  cfg.boost_alpha = r.reals("boost.alpha");
  if (cfg.boost_alpha.empty() ||
      (cfg.boost_alpha.size() != 1 && cfg.boost_alpha.size() != cfg.boost_epochs.size())) {
    bad_value("boost.alpha", r.text("boost.alpha"), "one value, or one per booster");
  }
  for (double a : cfg.boost_alpha) {
    if (!(a >= 0.0 && a <= 1.0)) {
      bad_value("boost.alpha", r.text("boost.alpha"), "values in [0, 1]");
    }
  }
  cfg.boost.alpha = cfg.boost_alpha.front();
  cfg.boost.delta = r.real("boost.delta");
  cfg.boost.k = static_cast<int>(r.positive("boost.k"));
  cfg.boost.eval_b = static_cast<int>(r.positive("eval.b"));
  with_key("boost", [&] { cfg.boost.validate(); return 0; });

  cfg.eval_every = r.integer("eval.every");
  if (cfg.eval_every < 0) {
    bad_value("eval.every", r.text("eval.every"), "a non-negative integer (0 disables)");
  }
  const auto samples = r.integer("eval.samples");
  if (samples < 0) {
    bad_value("eval.samples", r.text("eval.samples"), "a non-negative integer");
  }
  cfg.eval_samples = static_cast<std::size_t>(samples);
  cfg.eval_threshold = r.real("eval.threshold");
  if (!(cfg.eval_threshold > 0.0 && cfg.eval_threshold < 1.0)) {
    bad_value("eval.threshold", r.text("eval.threshold"), "a value in (0, 1)");
  }
  cfg.checkpoint_every = r.integer("checkpoint.every");
  if (cfg.checkpoint_every < 0) {
    bad_value("checkpoint.every", r.text("checkpoint.every"), "a non-negative integer (0 disables)");
  }
  return cfg;
}

bool same_environment(const ConfigMap& a, const ConfigMap& b, std::string* mismatch) {
  for (const auto& key : environment_keys()) {
    const auto ia = a.find(key);
    const auto ib = b.find(key);
    const std::string va = ia == a.end() ? "" : ia->second;
    const std::string vb = ib == b.end() ? "" : ib->second;
    if (va != vb) {
      if (mismatch != nullptr) {
        *mismatch = key + ": '" + va + "' vs '" + vb + "'";
      }
      return false;
    }
  }
  return true;
}

}  // namespace bgfn::runner
