#pragma once

// Experiment configuration: a flat key=value text format with [section]
// headers.  One [experiment] section, one [environment] section, and one
// [policy] section per policy (order defines display order).  Full-line
// comments start with '#' or ';'.  Every key is typed and validated;
// unknown keys are hard errors naming the offending key.

#include "l1bandit/core.hpp"
#include "l1bandit/environments.hpp"
#include "l1bandit/policies.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <variant>

namespace l1bandit {

/// Configuration problem; `key` is the section-qualified offender when the
/// problem is tied to one key.
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string key_, const std::string& what_)
      : std::runtime_error(key_.empty() ? what_
                                        : "key '" + key_ + "': " + what_),
        key(std::move(key_)) {}
};

struct ReplaySpec {
  std::string path;
  int num_arms = 2;
};

using EnvironmentSpec =
    std::variant<SyntheticSpec, MarginSpec, HardInstanceSpec, ReplaySpec>;

enum class ConstantMode { kPractical, kTheoretical };

enum class PolicyKind {
  kL1Ball,
  kGreedy,
  kOful,
  kLassoBandit,
  kOlsBandit,
  kRandom,
  kConstant,
  kOracle,
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::kL1Ball;
  std::string label;  ///< unique display/seed id; defaults to the kind name
  L1BallConfig l1ball;
  OfulConfig oful;
  LassoBanditConfig lasso_bandit;
  OlsBanditConfig ols_bandit;
  int constant_arm = -1;  ///< -1 means "majority label" (replay only)
};

struct ExperimentSettings {
  long horizon = 0;
  int repetitions = 1;
  std::uint64_t master_seed = 1;
  ConstantMode constant_mode = ConstantMode::kPractical;
  bool diagnostics = false;
  bool chart = false;
  int checkpoint_every = 10;
  std::string out_dir = "out";
  int replay_permutations = 10;
  int diag_n_starts = 64;
  std::optional<double> delta_star;  ///< separation for conditional moments
};

struct ExperimentConfig {
  ExperimentSettings exp;
  EnvironmentSpec env;
  std::vector<PolicySpec> policies;
};

inline const char* policy_kind_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::kL1Ball: return "l1ball";
    case PolicyKind::kGreedy: return "greedy";
    case PolicyKind::kOful: return "oful";
    case PolicyKind::kLassoBandit: return "lasso_bandit";
    case PolicyKind::kOlsBandit: return "ols_bandit";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kConstant: return "constant";
    case PolicyKind::kOracle: return "oracle";
  }
  return "?";
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct RawSection {
  std::string name;
  std::map<std::string, std::string> kv;
};

inline std::vector<RawSection> parse_raw_sections(std::istream& in,
                                                  const std::string& origin) {
  std::vector<RawSection> sections;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("", origin + " line " + std::to_string(line_no) +
                                  ": malformed section header");
      sections.push_back({trim(t.substr(1, t.size() - 2)), {}});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", origin + " line " + std::to_string(line_no) +
                                ": expected key=value");
    if (sections.empty())
      throw ConfigError("", origin + " line " + std::to_string(line_no) +
                                ": key before any [section]");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("", origin + " line " + std::to_string(line_no) +
                                ": empty key");
    auto& kv = sections.back().kv;
    if (!kv.emplace(key, val).second)
      throw ConfigError(sections.back().name + "." + key, "duplicate key");
  }
  return sections;
}

/// Typed, consume-tracking view of one section; finish() rejects leftovers.
class KeyBag {
 public:
  KeyBag(const RawSection& sec, std::string qualifier)
      : sec_(sec), qual_(std::move(qualifier)) {}

  std::optional<std::string> take(const std::string& key) {
    auto it = sec_.kv.find(key);
    if (it == sec_.kv.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
  }

  std::string require(const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigError(qual_ + "." + key, "missing required key");
    return *v;
  }

  std::string take_string(const std::string& key, const std::string& dflt) {
    auto v = take(key);
    return v ? *v : dflt;
  }

  long take_long(const std::string& key, long dflt) {
    auto v = take(key);
    return v ? to_long(key, *v) : dflt;
  }
  long require_long(const std::string& key) { return to_long(key, require(key)); }

  int take_int(const std::string& key, int dflt) {
    return static_cast<int>(take_long(key, dflt));
  }

  std::uint64_t take_u64(const std::string& key, std::uint64_t dflt) {
    auto v = take(key);
    if (!v) return dflt;
    try {
      std::size_t pos = 0;
      const std::uint64_t x = std::stoull(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw ConfigError(qual_ + "." + key, "expected unsigned integer, got '" + *v + "'");
    }
  }

  double take_double(const std::string& key, double dflt) {
    auto v = take(key);
    return v ? to_double(key, *v) : dflt;
  }

  bool take_bool(const std::string& key, bool dflt) {
    auto v = take(key);
    if (!v) return dflt;
    if (*v == "on" || *v == "true" || *v == "1") return true;
    if (*v == "off" || *v == "false" || *v == "0") return false;
    throw ConfigError(qual_ + "." + key, "expected on/off, got '" + *v + "'");
  }

  [[noreturn]] void bad_value(const std::string& key, const std::string& got,
                              const std::string& expect) const {
    throw ConfigError(qual_ + "." + key, "expected " + expect + ", got '" + got + "'");
  }

  void finish() const {
    for (const auto& [key, value] : sec_.kv)
      if (consumed_.find(key) == consumed_.end())
        throw ConfigError(qual_ + "." + key, "unknown key");
  }

 private:
  long to_long(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const long x = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw ConfigError(qual_ + "." + key, "expected integer, got '" + v + "'");
    }
  }
  double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw ConfigError(qual_ + "." + key, "expected number, got '" + v + "'");
    }
  }

  const RawSection& sec_;
  std::string qual_;
  std::set<std::string> consumed_;
};

inline EnvironmentSpec parse_environment(KeyBag& bag, long default_horizon) {
  const std::string kind = bag.require("kind");
  if (kind == "synthetic") {
    SyntheticSpec s;
    s.K = bag.take_int("arms", s.K);
    s.d = bag.take_int("d", s.d);
    s.s0 = bag.take_int("s0", s.s0);
    const std::string bd = bag.take_string("beta_dist", "uniform01");
    if (bd == "uniform01")
      s.beta_dist = BetaDist::kUniform01;
    else if (bd == "uniform002")
      s.beta_dist = BetaDist::kUniform002;
    else
      bag.bad_value("beta_dist", bd, "uniform01|uniform002");
    s.cov_decay = bag.take_double("cov_decay", s.cov_decay);
    s.sigma = bag.take_double("sigma", s.sigma);
    s.x_max = bag.take_double("x_max", s.x_max);
    s.normalize_linf = bag.take_bool("normalize_linf", s.normalize_linf);
    return s;
  }
  if (kind == "margin") {
    MarginSpec s;
    s.alpha = bag.take_double("alpha", s.alpha);
    s.d = bag.take_int("d", s.d);
    s.cov_decay = bag.take_double("cov_decay", s.cov_decay);
    s.sigma = bag.take_double("sigma", s.sigma);
    s.base_x_max = bag.take_double("base_x_max", s.base_x_max);
    return s;
  }
  if (kind == "hard") {
    HardInstanceSpec s;
    s.d = bag.take_int("d", s.d);
    s.T = static_cast<int>(bag.take_long("tuned_horizon", default_horizon));
    s.alpha = bag.take_double("alpha", s.alpha);
    s.c_x0 = bag.take_double("c_x0", s.c_x0);
    s.sigma = bag.take_double("sigma", s.sigma);
    s.x_max = bag.take_double("x_max", s.x_max);
    return s;
  }
  if (kind == "replay") {
    ReplaySpec s;
    s.path = bag.require("path");
    s.num_arms = static_cast<int>(bag.require_long("arms"));
    if (s.num_arms < 1)
      bag.bad_value("arms", std::to_string(s.num_arms), "a positive count");
    return s;
  }
  bag.bad_value("kind", kind, "synthetic|margin|hard|replay");
}

inline PolicySpec parse_policy(KeyBag& bag) {
  PolicySpec p;
  const std::string kind = bag.require("kind");
  if (kind == "l1ball") {
    p.kind = PolicyKind::kL1Ball;
    p.l1ball.lambda0 = bag.take_double("lambda0", p.l1ball.lambda0);
    p.l1ball.tau0 = bag.take_double("tau0", p.l1ball.tau0);
    p.l1ball.resolve_doubling =
        bag.take_bool("resolve_doubling", p.l1ball.resolve_doubling);
  } else if (kind == "greedy") {
    p.kind = PolicyKind::kGreedy;
    p.l1ball.lambda0 = bag.take_double("lambda0", p.l1ball.lambda0);
    p.l1ball.tau0 = 0.0;
  } else if (kind == "oful") {
    p.kind = PolicyKind::kOful;
    p.oful.lambda = bag.take_double("lambda_ridge", p.oful.lambda);
    p.oful.delta = bag.take_double("delta", p.oful.delta);
    p.oful.noise_scale = bag.take_double("noise_scale", p.oful.noise_scale);
    p.oful.param_bound = bag.take_double("param_bound", p.oful.param_bound);
  } else if (kind == "lasso_bandit") {
    p.kind = PolicyKind::kLassoBandit;
    p.lasso_bandit.q = bag.take_int("q", p.lasso_bandit.q);
    p.lasso_bandit.h = bag.take_double("h", p.lasso_bandit.h);
    p.lasso_bandit.lambda1 = bag.take_double("lambda1", p.lasso_bandit.lambda1);
    p.lasso_bandit.lambda20 = bag.take_double("lambda20", p.lasso_bandit.lambda20);
  } else if (kind == "ols_bandit") {
    p.kind = PolicyKind::kOlsBandit;
    p.ols_bandit.q = bag.take_int("q", p.ols_bandit.q);
    p.ols_bandit.h = bag.take_double("h", p.ols_bandit.h);
  } else if (kind == "random") {
    p.kind = PolicyKind::kRandom;
  } else if (kind == "constant") {
    p.kind = PolicyKind::kConstant;
    const std::string arm = bag.take_string("arm", "majority");
    if (arm == "majority") {
      p.constant_arm = -1;
    } else {
      try {
        std::size_t pos = 0;
        p.constant_arm = std::stoi(arm, &pos);
        if (pos != arm.size() || p.constant_arm < 0)
          throw std::invalid_argument("bad");
      } catch (const std::exception&) {
        bag.bad_value("arm", arm, "a non-negative arm index or 'majority'");
      }
    }
  } else if (kind == "oracle") {
    p.kind = PolicyKind::kOracle;
  } else {
    bag.bad_value("kind", kind,
                  "l1ball|greedy|oful|lasso_bandit|ols_bandit|random|constant|oracle");
  }
  p.label = bag.take_string("label", policy_kind_name(p.kind));
  if (p.label.empty() || p.label.find(',') != std::string::npos)
    throw ConfigError("policy.label", "label must be non-empty and comma-free");
  return p;
}

}  // namespace detail

inline ExperimentConfig parse_config_stream(std::istream& in,
                                            const std::string& origin) {
  const auto sections = detail::parse_raw_sections(in, origin);
  const detail::RawSection* exp_sec = nullptr;
  const detail::RawSection* env_sec = nullptr;
  std::vector<const detail::RawSection*> policy_secs;
  for (const auto& sec : sections) {
    if (sec.name == "experiment") {
      if (exp_sec) throw ConfigError("experiment", "duplicate [experiment] section");
      exp_sec = &sec;
    } else if (sec.name == "environment") {
      if (env_sec) throw ConfigError("environment", "duplicate [environment] section");
      env_sec = &sec;
    } else if (sec.name == "policy") {
      policy_secs.push_back(&sec);
    } else {
      throw ConfigError(sec.name, "unknown section");
    }
  }
  if (!exp_sec) throw ConfigError("experiment", "missing [experiment] section");
  if (!env_sec) throw ConfigError("environment", "missing [environment] section");
  if (policy_secs.empty()) throw ConfigError("policy", "no [policy] sections");

  ExperimentConfig cfg;
  {
    detail::KeyBag bag(*exp_sec, "experiment");
    cfg.exp.horizon = bag.require_long("horizon");
    if (cfg.exp.horizon < 1)
      throw ConfigError("experiment.horizon", "must be >= 1");
    cfg.exp.repetitions = bag.take_int("repetitions", cfg.exp.repetitions);
    if (cfg.exp.repetitions < 1)
      throw ConfigError("experiment.repetitions", "must be >= 1");
    cfg.exp.master_seed = bag.take_u64("master_seed", cfg.exp.master_seed);
    const std::string mode = bag.take_string("constant_mode", "practical");
    if (mode == "practical")
      cfg.exp.constant_mode = ConstantMode::kPractical;
    else if (mode == "theoretical")
      cfg.exp.constant_mode = ConstantMode::kTheoretical;
    else
      bag.bad_value("constant_mode", mode, "practical|theoretical");
    cfg.exp.diagnostics = bag.take_bool("diagnostics", cfg.exp.diagnostics);
    cfg.exp.chart = bag.take_bool("chart", cfg.exp.chart);
    cfg.exp.checkpoint_every = bag.take_int("checkpoint_every", cfg.exp.checkpoint_every);
    if (cfg.exp.checkpoint_every < 1)
      throw ConfigError("experiment.checkpoint_every", "must be >= 1");
    cfg.exp.out_dir = bag.take_string("out_dir", cfg.exp.out_dir);
    cfg.exp.replay_permutations =
        bag.take_int("replay_permutations", cfg.exp.replay_permutations);
    if (cfg.exp.replay_permutations < 1)
      throw ConfigError("experiment.replay_permutations", "must be >= 1");
    cfg.exp.diag_n_starts = bag.take_int("diag_n_starts", cfg.exp.diag_n_starts);
    if (auto v = bag.take("delta_star")) {
      std::size_t pos = 0;
      double x = 0.0;
      try {
        x = std::stod(*v, &pos);
      } catch (const std::exception&) {
        pos = std::string::npos;
      }
      if (pos != v->size() || x <= 0.0)
        bag.bad_value("delta_star", *v, "a positive number");
      cfg.exp.delta_star = x;
    }
    bag.finish();
  }
  {
    detail::KeyBag bag(*env_sec, "environment");
    cfg.env = detail::parse_environment(bag, cfg.exp.horizon);
    bag.finish();
  }
  std::set<std::string> labels;
  for (const auto* sec : policy_secs) {
    detail::KeyBag bag(*sec, "policy");
    PolicySpec p = detail::parse_policy(bag);
    bag.finish();
    if (!labels.insert(p.label).second)
      throw ConfigError("policy.label",
                        "duplicate policy label '" + p.label +
                            "' (set label= to disambiguate)");
    cfg.policies.push_back(std::move(p));
  }

  // Structural validation of the environment spec itself.
  std::visit(
      [](const auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (!std::is_same_v<T, ReplaySpec>) spec.validate();
      },
      cfg.env);
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::string& origin = "config") {
  std::istringstream in(text);
  return parse_config_stream(in, origin);
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse_config_stream(in, path);
}

namespace detail {
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Serializes a config so that parsing it back reproduces every resolved
/// value; used to pin the exact setup next to the outputs of a run.
inline std::string write_config(const ExperimentConfig& cfg) {
  using detail::fmt_double;
  std::ostringstream out;
  out << "[experiment]\n";
  out << "horizon = " << cfg.exp.horizon << "\n";
  out << "repetitions = " << cfg.exp.repetitions << "\n";
  out << "master_seed = " << cfg.exp.master_seed << "\n";
  out << "constant_mode = "
      << (cfg.exp.constant_mode == ConstantMode::kTheoretical ? "theoretical"
                                                              : "practical")
      << "\n";
  out << "diagnostics = " << (cfg.exp.diagnostics ? "on" : "off") << "\n";
  out << "chart = " << (cfg.exp.chart ? "on" : "off") << "\n";
  out << "checkpoint_every = " << cfg.exp.checkpoint_every << "\n";
  out << "out_dir = " << cfg.exp.out_dir << "\n";
  out << "replay_permutations = " << cfg.exp.replay_permutations << "\n";
  out << "diag_n_starts = " << cfg.exp.diag_n_starts << "\n";
  if (cfg.exp.delta_star)
    out << "delta_star = " << fmt_double(*cfg.exp.delta_star) << "\n";
  out << "\n[environment]\n";
  std::visit(
      [&](const auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, SyntheticSpec>) {
          out << "kind = synthetic\n";
          out << "arms = " << spec.K << "\n";
          out << "d = " << spec.d << "\n";
          out << "s0 = " << spec.s0 << "\n";
          out << "beta_dist = "
              << (spec.beta_dist == BetaDist::kUniform002 ? "uniform002"
                                                          : "uniform01")
              << "\n";
          out << "cov_decay = " << fmt_double(spec.cov_decay) << "\n";
          out << "sigma = " << fmt_double(spec.sigma) << "\n";
          out << "x_max = " << fmt_double(spec.x_max) << "\n";
          out << "normalize_linf = " << (spec.normalize_linf ? "on" : "off") << "\n";
        } else if constexpr (std::is_same_v<T, MarginSpec>) {
          out << "kind = margin\n";
          out << "alpha = " << fmt_double(spec.alpha) << "\n";
          out << "d = " << spec.d << "\n";
          out << "cov_decay = " << fmt_double(spec.cov_decay) << "\n";
          out << "sigma = " << fmt_double(spec.sigma) << "\n";
          out << "base_x_max = " << fmt_double(spec.base_x_max) << "\n";
        } else if constexpr (std::is_same_v<T, HardInstanceSpec>) {
          out << "kind = hard\n";
          out << "d = " << spec.d << "\n";
          out << "tuned_horizon = " << spec.T << "\n";
          out << "alpha = " << fmt_double(spec.alpha) << "\n";
          out << "c_x0 = " << fmt_double(spec.c_x0) << "\n";
          out << "sigma = " << fmt_double(spec.sigma) << "\n";
          out << "x_max = " << fmt_double(spec.x_max) << "\n";
        } else {
          out << "kind = replay\n";
          out << "path = " << spec.path << "\n";
          out << "arms = " << spec.num_arms << "\n";
        }
      },
      cfg.env);
  for (const PolicySpec& p : cfg.policies) {
    out << "\n[policy]\n";
    out << "kind = " << policy_kind_name(p.kind) << "\n";
    out << "label = " << p.label << "\n";
    switch (p.kind) {
      case PolicyKind::kL1Ball:
        out << "lambda0 = " << fmt_double(p.l1ball.lambda0) << "\n";
        out << "tau0 = " << fmt_double(p.l1ball.tau0) << "\n";
        out << "resolve_doubling = " << (p.l1ball.resolve_doubling ? "on" : "off")
            << "\n";
        break;
      case PolicyKind::kGreedy:
        out << "lambda0 = " << fmt_double(p.l1ball.lambda0) << "\n";
        break;
      case PolicyKind::kOful:
        out << "lambda_ridge = " << fmt_double(p.oful.lambda) << "\n";
        out << "delta = " << fmt_double(p.oful.delta) << "\n";
        out << "noise_scale = " << fmt_double(p.oful.noise_scale) << "\n";
        out << "param_bound = " << fmt_double(p.oful.param_bound) << "\n";
        break;
      case PolicyKind::kLassoBandit:
        out << "q = " << p.lasso_bandit.q << "\n";
        out << "h = " << fmt_double(p.lasso_bandit.h) << "\n";
        out << "lambda1 = " << fmt_double(p.lasso_bandit.lambda1) << "\n";
        out << "lambda20 = " << fmt_double(p.lasso_bandit.lambda20) << "\n";
        break;
      case PolicyKind::kOlsBandit:
        out << "q = " << p.ols_bandit.q << "\n";
        out << "h = " << fmt_double(p.ols_bandit.h) << "\n";
        break;
      case PolicyKind::kConstant:
        if (p.constant_arm < 0)
          out << "arm = majority\n";
        else
          out << "arm = " << p.constant_arm << "\n";
        break;
      case PolicyKind::kRandom:
      case PolicyKind::kOracle:
        break;
    }
  }
  return out.str();
}

}  // namespace l1bandit
