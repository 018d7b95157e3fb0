#include "potforge/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "potforge/digest.hpp"
#include "potforge/error.hpp"
#include "potforge/http_backend.hpp"
#include "toml_lite.hpp"

namespace potforge {

const std::string_view kDefaultObjective =
    "Generate prompts that induce significant extension of reasoning chains.";

const std::string_view kDefaultInstructions =
    "Write {m} new guiding phrases that are different from the phrases above and would achieve "
    "a higher score. A strong phrase asks the reader to work through the problem step by step, "
    "consider multiple perspectives, explore each possible interpretation, verify every "
    "intermediate result, question hidden assumptions and reflect on alternative approaches "
    "before answering. Keep each phrase to one or two natural sentences that do not change the "
    "meaning of the question. Return the phrases as a numbered list, one per line.";

const std::string_view kDefaultSeedTemplate =
    "Write {n} guiding phrases, one per line, that a user could place before a question. Each "
    "should generate prompts that induce the model to unfold more complex and multi-step "
    "reasoning processes without changing what the question asks. Return a numbered list.";

namespace {

using nlohmann::json;

constexpr std::string_view kSimScheme = "sim://";
constexpr std::string_view kSimEmbedScheme = "sim-embed://";
constexpr std::string_view kSimOptimizerScheme = "sim-optimizer://";

// Collects every schema and invariant violation before failing.
class Issues {
 public:
  void add(std::string msg) { list_.push_back(std::move(msg)); }
  bool empty() const { return list_.empty(); }
  const std::vector<std::string>& list() const { return list_; }

  void raise() const {
    if (list_.empty()) return;
    std::string msg = fmt::format("{} problem(s) in config:", list_.size());
    for (const auto& m : list_) msg += "\n  - " + m;
    throw Error(ErrorCode::kConfigInvalid, msg);
  }

 private:
  std::vector<std::string> list_;
};

bool is_credential_key(std::string_view key) {
  for (std::string_view bad : {"api_key", "apikey", "key", "token", "secret", "password",
                               "authorization", "bearer"}) {
    if (key == bad) return true;
  }
  return false;
}

template <typename T>
void read_number(const json& obj, const std::string& key, T& out, const std::string& where,
                 Issues& issues) {
  const json& v = obj.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) {
      issues.add(fmt::format("{}{} must be a number", where, key));
      return;
    }
    out = v.get<T>();
  } else {
    if (!v.is_number_integer()) {
      issues.add(fmt::format("{}{} must be an integer", where, key));
      return;
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) {
        out = v.get<T>();
      } else {
        issues.add(fmt::format("{}{} must be non-negative", where, key));
      }
    } else {
      out = v.get<T>();
    }
  }
}

void read_string(const json& obj, const std::string& key, std::string& out,
                 const std::string& where, Issues& issues) {
  const json& v = obj.at(key);
  if (!v.is_string()) {
    issues.add(fmt::format("{}{} must be a string", where, key));
    return;
  }
  out = v.get<std::string>();
}

template <typename E>
void read_enum(const json& obj, const std::string& key, E& out,
               std::initializer_list<std::pair<std::string_view, E>> choices, Issues& issues) {
  std::string s;
  read_string(obj, key, s, "", issues);
  std::string names;
  for (const auto& [name, value] : choices) {
    if (name == s) {
      out = value;
      return;
    }
    names += names.empty() ? "" : ", ";
    names += name;
  }
  if (obj.at(key).is_string()) issues.add(fmt::format("{} must be one of: {}", key, names));
}

const std::initializer_list<std::pair<std::string_view, AssemblyMode>> kAssemblyModes = {
    {"auto", AssemblyMode::kAuto},   {"prepend", AssemblyMode::kPrepend},
    {"clause", AssemblyMode::kClause}, {"embed", AssemblyMode::kEmbed},
    {"llm", AssemblyMode::kLlm}};
const std::initializer_list<std::pair<std::string_view, CandidateMode>> kCandidateModes = {
    {"batched", CandidateMode::kBatched}, {"per_call", CandidateMode::kPerCall}};
const std::initializer_list<std::pair<std::string_view, DiversitySelector>> kSelectors = {
    {"greedy", DiversitySelector::kGreedy}, {"exact", DiversitySelector::kExact}};
const std::initializer_list<std::pair<std::string_view, PhrasePolicy>> kPolicies = {
    {"best", PhrasePolicy::kBest}, {"round_robin", PhrasePolicy::kRoundRobin}};

template <typename E>
std::string enum_name(E value, std::initializer_list<std::pair<std::string_view, E>> choices) {
  for (const auto& [name, v] : choices) {
    if (v == value) return std::string(name);
  }
  return {};
}

template <typename E>
E enum_value(const std::string& name,
             std::initializer_list<std::pair<std::string_view, E>> choices) {
  for (const auto& [n, v] : choices) {
    if (n == name) return v;
  }
  throw Error(ErrorCode::kConfigInvalid, "unknown value '" + name + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return (base / path).lexically_normal();
}

void apply_sim_profile(const json& obj, const std::string& where, SimTargetConfig& profile,
                       Issues& issues) {
  for (const auto& [key, value] : obj.items()) {
    if (key == "base_reasoning_tokens") {
      read_number(obj, key, profile.base_reasoning_tokens, where, issues);
    } else if (key == "noise_amplitude") {
      read_number(obj, key, profile.noise_amplitude, where, issues);
    } else if (key == "rng_seed") {
      read_number(obj, key, profile.rng_seed, where, issues);
    } else if (key == "corruption_patterns") {
      if (!value.is_array()) {
        issues.add(where + "corruption_patterns must be an array of strings");
        continue;
      }
      profile.corruption_patterns.clear();
      for (const auto& p : value) {
        if (p.is_string()) {
          profile.corruption_patterns.push_back(p.get<std::string>());
        } else {
          issues.add(where + "corruption_patterns must be an array of strings");
        }
      }
    } else if (key == "triggers") {
      if (!value.is_object()) {
        issues.add(where + "triggers must be a table of \"pattern\" = weight");
        continue;
      }
      profile.trigger_lexicon.clear();
      for (const auto& [pattern, weight] : value.items()) {
        if (!weight.is_number_integer()) {
          issues.add(fmt::format("{}triggers.\"{}\" must be an integer weight", where, pattern));
          continue;
        }
        profile.trigger_lexicon.push_back({pattern, weight.get<std::int64_t>()});
      }
    } else if (!value.is_object()) {
      issues.add(fmt::format("unknown key {}{}", where, key));
    }
  }
}

void apply_endpoint(const std::string& id, const json& obj, RunConfig& cfg, Issues& issues) {
  const std::string where = "endpoints." + id + ".";
  if (!obj.is_object()) {
    issues.add("endpoints." + id + " must be a table");
    return;
  }
  ModelEndpoint ep;
  if (auto it = cfg.endpoints.find(id); it != cfg.endpoints.end()) ep = it->second;
  ep.id = id;
  for (const auto& [key, value] : obj.items()) {
    if (key == "kind") {
      std::string kind;
      read_string(obj, key, kind, where, issues);
      if (kind == "completion") {
        ep.kind = EndpointKind::kCompletion;
      } else if (kind == "embedding") {
        ep.kind = EndpointKind::kEmbedding;
      } else if (value.is_string()) {
        issues.add(where + "kind must be \"completion\" or \"embedding\"");
      }
    } else if (key == "base_url") {
      read_string(obj, key, ep.base_url, where, issues);
    } else if (key == "model_name") {
      read_string(obj, key, ep.model_name, where, issues);
    } else if (key == "auth_ref") {
      read_string(obj, key, ep.auth_ref, where, issues);
    } else if (key == "max_retries") {
      read_number(obj, key, ep.max_retries, where, issues);
    } else if (key == "timeout") {
      read_number(obj, key, ep.timeout_s, where, issues);
    } else if (key == "requests_per_minute") {
      read_number(obj, key, ep.requests_per_minute, where, issues);
    } else if (key == "dimension") {
      read_number(obj, key, ep.dimension, where, issues);
    } else if (is_credential_key(key)) {
      issues.add(fmt::format(
          "{}{}: credentials are not accepted in config files; set auth_ref to the name of an "
          "environment variable instead",
          where, key));
    } else {
      issues.add("unknown key " + where + key);
    }
  }
  if (ep.model_name.empty()) {
    if (ep.base_url.starts_with(kSimScheme)) {
      ep.model_name = "sim/" + ep.base_url.substr(kSimScheme.size());
    } else if (ep.base_url.starts_with(kSimEmbedScheme)) {
      ep.model_name = fmt::format("sim-embed/{}", ep.dimension > 0 ? ep.dimension : 256);
    } else if (ep.base_url.starts_with(kSimOptimizerScheme)) {
      ep.model_name = "sim-optimizer";
    }
  }
  cfg.endpoints[id] = std::move(ep);
}

void apply(const json& root, const std::filesystem::path& base_dir, RunConfig& cfg,
           Issues& issues) {
  for (const auto& [key, value] : root.items()) {
    if (key == "alpha") read_number(root, key, cfg.alpha, "", issues);
    else if (key == "beta") read_number(root, key, cfg.beta, "", issues);
    else if (key == "rounds") read_number(root, key, cfg.rounds, "", issues);
    else if (key == "candidates_per_round") read_number(root, key, cfg.candidates_per_round, "", issues);
    else if (key == "k_init") read_number(root, key, cfg.k_init, "", issues);
    else if (key == "k_score") read_number(root, key, cfg.k_score, "", issues);
    else if (key == "temperature") read_number(root, key, cfg.temperature, "", issues);
    else if (key == "hit_threshold") read_number(root, key, cfg.hit_threshold, "", issues);
    else if (key == "q_train") read_number(root, key, cfg.q_train, "", issues);
    else if (key == "rng_seed") read_number(root, key, cfg.rng_seed, "", issues);
    else if (key == "epsilon") read_number(root, key, cfg.epsilon, "", issues);
    else if (key == "patience") read_number(root, key, cfg.patience, "", issues);
    else if (key == "max_phrase_chars") read_number(root, key, cfg.max_phrase_chars, "", issues);
    else if (key == "n_seeds") read_number(root, key, cfg.n_seeds, "", issues);
    else if (key == "min_seeds") read_number(root, key, cfg.min_seeds, "", issues);
    else if (key == "overhead_chars") read_number(root, key, cfg.overhead_chars, "", issues);
    else if (key == "exact_limit") read_number(root, key, cfg.exact_limit, "", issues);
    else if (key == "workers") read_number(root, key, cfg.workers, "", issues);
    else if (key == "assembly") read_enum(root, key, cfg.assembly, kAssemblyModes, issues);
    else if (key == "candidate_mode") read_enum(root, key, cfg.candidate_mode, kCandidateModes, issues);
    else if (key == "diversity_selector") read_enum(root, key, cfg.diversity_selector, kSelectors, issues);
    else if (key == "phrase_policy") read_enum(root, key, cfg.phrase_policy, kPolicies, issues);
    else if (key == "objective") read_string(root, key, cfg.objective, "", issues);
    else if (key == "instructions") read_string(root, key, cfg.instructions, "", issues);
    else if (key == "seed_template") read_string(root, key, cfg.seed_template, "", issues);
    else if (key == "output_dir") {
      std::string p;
      read_string(root, key, p, "", issues);
      cfg.output_dir = resolve(base_dir, p);
    } else if (key == "roles") {
      if (!value.is_object()) {
        issues.add("roles must be a table");
        continue;
      }
      for (const auto& [role, id] : value.items()) {
        std::string* slot = role == "generator"       ? &cfg.roles.generator
                            : role == "assembler"     ? &cfg.roles.assembler
                            : role == "scorer_target" ? &cfg.roles.scorer_target
                            : role == "optimizer"     ? &cfg.roles.optimizer
                            : role == "embedder"      ? &cfg.roles.embedder
                                                      : nullptr;
        if (!slot) {
          issues.add("unknown key roles." + role);
          continue;
        }
        read_string(value, role, *slot, "roles.", issues);
      }
    } else if (key == "data") {
      if (!value.is_object()) {
        issues.add("data must be a table");
        continue;
      }
      for (const auto& [name, p] : value.items()) {
        std::filesystem::path* slot = name == "seeds"   ? &cfg.data.seeds
                                      : name == "train" ? &cfg.data.train
                                      : name == "eval"  ? &cfg.data.eval
                                                        : nullptr;
        if (!slot) {
          issues.add("unknown key data." + name);
          continue;
        }
        std::string s;
        read_string(value, name, s, "data.", issues);
        *slot = resolve(base_dir, s);
      }
    } else if (key == "endpoints") {
      if (!value.is_object()) {
        issues.add("endpoints must be a table");
        continue;
      }
      for (const auto& [id, ep] : value.items()) apply_endpoint(id, ep, cfg, issues);
    } else if (key == "sim") {
      if (!value.is_object()) {
        issues.add("sim must be a table");
        continue;
      }
      apply_sim_profile(value, "sim.", cfg.sim_profiles["default"], issues);
      for (const auto& [name, sub] : value.items()) {
        if (!sub.is_object() || name == "triggers") continue;
        auto [it, fresh] = cfg.sim_profiles.try_emplace(name, default_sim_target_config());
        apply_sim_profile(sub, "sim." + name + ".", it->second, issues);
      }
    } else if (is_credential_key(key)) {
      issues.add(key + ": credentials are not accepted in config files; use auth_ref");
    } else {
      issues.add("unknown key " + key);
    }
  }
}

json endpoint_json(const ModelEndpoint& ep) {
  return json{{"kind", to_string(ep.kind)},
              {"base_url", ep.base_url},
              {"model_name", ep.model_name},
              {"auth_ref", ep.auth_ref},
              {"max_retries", ep.max_retries},
              {"timeout", ep.timeout_s},
              {"requests_per_minute", ep.requests_per_minute},
              {"dimension", ep.dimension}};
}

json sim_json(const SimTargetConfig& s) {
  json triggers = json::array();
  for (const auto& t : s.trigger_lexicon) triggers.push_back(json::array({t.pattern, t.weight}));
  return json{{"base_reasoning_tokens", s.base_reasoning_tokens},
              {"trigger_lexicon", triggers},
              {"corruption_patterns", s.corruption_patterns},
              {"noise_amplitude", s.noise_amplitude},
              {"rng_seed", s.rng_seed}};
}

void check_role(const RunConfig& cfg, const std::string& role, const std::string& id,
                EndpointKind kind, std::vector<std::string>& errors) {
  auto it = cfg.endpoints.find(id);
  if (it == cfg.endpoints.end()) {
    errors.push_back(fmt::format("roles.{} names unknown endpoint '{}'", role, id));
  } else if (it->second.kind != kind) {
    errors.push_back(fmt::format("roles.{} needs a {} endpoint, '{}' is {}", role, to_string(kind),
                                 id, to_string(it->second.kind)));
  }
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.endpoints["sim"] = ModelEndpoint{"sim", EndpointKind::kCompletion, "sim://default",
                                       "sim/default", "", 0, 60.0, 0, 0};
  cfg.endpoints["sim-embed"] = ModelEndpoint{"sim-embed", EndpointKind::kEmbedding, "sim-embed://",
                                             "sim-embed/256", "", 0, 60.0, 0, 256};
  cfg.endpoints["sim-optimizer"] = ModelEndpoint{"sim-optimizer", EndpointKind::kCompletion,
                                                 "sim-optimizer://", "sim-optimizer", "", 0,
                                                 60.0, 0, 0};
  cfg.sim_profiles["default"] = default_sim_target_config();
  return cfg;
}

std::vector<std::string> validate(const RunConfig& cfg) {
  std::vector<std::string> e;
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(cfg.alpha) || cfg.alpha < 0) e.push_back("alpha must be a finite value >= 0");
  if (!finite(cfg.beta) || cfg.beta < 0) e.push_back("beta must be a finite value >= 0");
  if (cfg.rounds < 0) e.push_back("rounds must be >= 0");
  if (cfg.candidates_per_round < 1) e.push_back("candidates_per_round must be >= 1");
  if (cfg.k_init < 1) e.push_back("k_init must be >= 1");
  if (cfg.k_score < cfg.k_init) {
    e.push_back(fmt::format("k_score ({}) must be >= k_init ({})", cfg.k_score, cfg.k_init));
  }
  if (!finite(cfg.temperature) || cfg.temperature < 0 || cfg.temperature > 2) {
    e.push_back("temperature must be in [0, 2]");
  }
  if (!finite(cfg.hit_threshold) || cfg.hit_threshold <= 0) e.push_back("hit_threshold must be > 0");
  if (cfg.q_train < 1) e.push_back("q_train must be >= 1");
  if (!finite(cfg.epsilon) || cfg.epsilon < 0) e.push_back("epsilon must be >= 0");
  if (cfg.patience < 1) e.push_back("patience must be >= 1");
  if (cfg.max_phrase_chars < 1) e.push_back("max_phrase_chars must be >= 1");
  if (cfg.n_seeds < 1) e.push_back("n_seeds must be >= 1");
  if (cfg.min_seeds < 1) e.push_back("min_seeds must be >= 1");
  if (cfg.exact_limit < 1) e.push_back("exact_limit must be >= 1");
  if (cfg.workers < 1) e.push_back("workers must be >= 1");
  if (cfg.objective.empty()) e.push_back("objective must not be empty");
  if (cfg.instructions.empty()) e.push_back("instructions must not be empty");

  for (const auto& [id, ep] : cfg.endpoints) {
    if (ep.base_url.empty()) {
      e.push_back(fmt::format("endpoints.{}.base_url is required", id));
      continue;
    }
    const bool http = ep.base_url.starts_with("http://") || ep.base_url.starts_with("https://");
    if (ep.base_url.starts_with(kSimScheme)) {
      const std::string profile = ep.base_url.substr(kSimScheme.size());
      if (!cfg.sim_profiles.contains(profile)) {
        e.push_back(fmt::format("endpoints.{} uses unknown sim profile '{}'", id, profile));
      }
    } else if (!http && !ep.base_url.starts_with(kSimEmbedScheme) &&
               !ep.base_url.starts_with(kSimOptimizerScheme)) {
      e.push_back(fmt::format("endpoints.{}.base_url has an unsupported scheme", id));
    }
    if (http && ep.model_name.empty()) e.push_back(fmt::format("endpoints.{}.model_name is required", id));
    if (ep.max_retries < 0) e.push_back(fmt::format("endpoints.{}.max_retries must be >= 0", id));
    if (!(ep.timeout_s > 0)) e.push_back(fmt::format("endpoints.{}.timeout must be > 0", id));
    if (ep.requests_per_minute < 0) {
      e.push_back(fmt::format("endpoints.{}.requests_per_minute must be >= 0", id));
    }
    if (ep.dimension < 0 || ep.dimension == 1) {
      e.push_back(fmt::format("endpoints.{}.dimension must be 0 or >= 2", id));
    }
  }
  for (const auto& [name, profile] : cfg.sim_profiles) {
    for (const auto& msg : validate(profile)) e.push_back(fmt::format("sim.{}: {}", name, msg));
  }

  check_role(cfg, "scorer_target", cfg.roles.scorer_target, EndpointKind::kCompletion, e);
  check_role(cfg, "optimizer", cfg.roles.optimizer, EndpointKind::kCompletion, e);
  check_role(cfg, "embedder", cfg.roles.embedder, EndpointKind::kEmbedding, e);
  if (!cfg.roles.generator.empty()) {
    check_role(cfg, "generator", cfg.roles.generator, EndpointKind::kCompletion, e);
  }
  if (!cfg.roles.assembler.empty()) {
    check_role(cfg, "assembler", cfg.roles.assembler, EndpointKind::kCompletion, e);
  } else if (cfg.assembly == AssemblyMode::kLlm) {
    e.push_back("assembly = \"llm\" needs roles.assembler");
  }
  return e;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json root = detail::parse_toml(text);
  RunConfig cfg = default_run_config();
  Issues issues;
  apply(root, base_dir, cfg, issues);
  for (auto& msg : validate(cfg)) issues.add(std::move(msg));
  issues.raise();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigInvalid, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), std::filesystem::absolute(path).parent_path());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kConfigInvalid) throw;
    throw Error(ErrorCode::kConfigInvalid, path.string() + ": " + e.detail());
  }
}

AssemblyStrategy effective_strategy(const RunConfig& cfg) {
  switch (cfg.assembly) {
    case AssemblyMode::kAuto:
      return cfg.roles.assembler.empty() ? AssemblyStrategy::kPrepend : AssemblyStrategy::kLlm;
    case AssemblyMode::kPrepend: return AssemblyStrategy::kPrepend;
    case AssemblyMode::kClause: return AssemblyStrategy::kClause;
    case AssemblyMode::kEmbed: return AssemblyStrategy::kEmbed;
    case AssemblyMode::kLlm: return AssemblyStrategy::kLlm;
  }
  return AssemblyStrategy::kPrepend;
}

std::int64_t scoring_seed(const RunConfig& cfg) {
  return static_cast<std::int64_t>(cfg.rng_seed & 0x7fffffffffffffffULL);
}

void to_json(nlohmann::json& j, const RunConfig& cfg) {
  json endpoints = json::object();
  for (const auto& [id, ep] : cfg.endpoints) endpoints[id] = endpoint_json(ep);
  json sims = json::object();
  for (const auto& [name, s] : cfg.sim_profiles) sims[name] = sim_json(s);
  j = json{{"alpha", cfg.alpha},
           {"beta", cfg.beta},
           {"rounds", cfg.rounds},
           {"candidates_per_round", cfg.candidates_per_round},
           {"k_init", cfg.k_init},
           {"k_score", cfg.k_score},
           {"temperature", cfg.temperature},
           {"hit_threshold", cfg.hit_threshold},
           {"q_train", cfg.q_train},
           {"rng_seed", cfg.rng_seed},
           {"epsilon", cfg.epsilon},
           {"patience", cfg.patience},
           {"max_phrase_chars", cfg.max_phrase_chars},
           {"n_seeds", cfg.n_seeds},
           {"min_seeds", cfg.min_seeds},
           {"overhead_chars", cfg.overhead_chars},
           {"exact_limit", cfg.exact_limit},
           {"workers", cfg.workers},
           {"assembly", enum_name(cfg.assembly, kAssemblyModes)},
           {"candidate_mode", enum_name(cfg.candidate_mode, kCandidateModes)},
           {"diversity_selector", enum_name(cfg.diversity_selector, kSelectors)},
           {"phrase_policy", enum_name(cfg.phrase_policy, kPolicies)},
           {"objective", cfg.objective},
           {"instructions", cfg.instructions},
           {"seed_template", cfg.seed_template},
           {"roles",
            {{"generator", cfg.roles.generator},
             {"assembler", cfg.roles.assembler},
             {"scorer_target", cfg.roles.scorer_target},
             {"optimizer", cfg.roles.optimizer},
             {"embedder", cfg.roles.embedder}}},
           {"data",
            {{"seeds", cfg.data.seeds.generic_string()},
             {"train", cfg.data.train.generic_string()},
             {"eval", cfg.data.eval.generic_string()}}},
           {"endpoints", endpoints},
           {"sim", sims}};
}

void from_json(const nlohmann::json& j, RunConfig& cfg) {
  cfg = RunConfig{};
  cfg.alpha = j.at("alpha").get<double>();
  cfg.beta = j.at("beta").get<double>();
  cfg.rounds = j.at("rounds").get<int>();
  cfg.candidates_per_round = j.at("candidates_per_round").get<int>();
  cfg.k_init = j.at("k_init").get<int>();
  cfg.k_score = j.at("k_score").get<int>();
  cfg.temperature = j.at("temperature").get<double>();
  cfg.hit_threshold = j.at("hit_threshold").get<double>();
  cfg.q_train = j.at("q_train").get<int>();
  cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  cfg.epsilon = j.at("epsilon").get<double>();
  cfg.patience = j.at("patience").get<int>();
  cfg.max_phrase_chars = j.at("max_phrase_chars").get<std::size_t>();
  cfg.n_seeds = j.at("n_seeds").get<int>();
  cfg.min_seeds = j.at("min_seeds").get<int>();
  cfg.overhead_chars = j.at("overhead_chars").get<std::size_t>();
  cfg.exact_limit = j.at("exact_limit").get<int>();
  cfg.workers = j.at("workers").get<int>();
  cfg.assembly = enum_value(j.at("assembly").get<std::string>(), kAssemblyModes);
  cfg.candidate_mode = enum_value(j.at("candidate_mode").get<std::string>(), kCandidateModes);
  cfg.diversity_selector = enum_value(j.at("diversity_selector").get<std::string>(), kSelectors);
  cfg.phrase_policy = enum_value(j.at("phrase_policy").get<std::string>(), kPolicies);
  cfg.objective = j.at("objective").get<std::string>();
  cfg.instructions = j.at("instructions").get<std::string>();
  cfg.seed_template = j.at("seed_template").get<std::string>();
  const auto& roles = j.at("roles");
  cfg.roles = {roles.at("generator").get<std::string>(), roles.at("assembler").get<std::string>(),
               roles.at("scorer_target").get<std::string>(),
               roles.at("optimizer").get<std::string>(), roles.at("embedder").get<std::string>()};
  const auto& data = j.at("data");
  cfg.data = {data.at("seeds").get<std::string>(), data.at("train").get<std::string>(),
              data.at("eval").get<std::string>()};
  for (const auto& [id, e] : j.at("endpoints").items()) {
    ModelEndpoint ep;
    ep.id = id;
    ep.kind = endpoint_kind_from_string(e.at("kind").get<std::string>());
    ep.base_url = e.at("base_url").get<std::string>();
    ep.model_name = e.at("model_name").get<std::string>();
    ep.auth_ref = e.at("auth_ref").get<std::string>();
    ep.max_retries = e.at("max_retries").get<int>();
    ep.timeout_s = e.at("timeout").get<double>();
    ep.requests_per_minute = e.at("requests_per_minute").get<int>();
    ep.dimension = e.at("dimension").get<int>();
    cfg.endpoints[id] = std::move(ep);
  }
  for (const auto& [name, s] : j.at("sim").items()) {
    SimTargetConfig sim;
    sim.base_reasoning_tokens = s.at("base_reasoning_tokens").get<std::int64_t>();
    for (const auto& t : s.at("trigger_lexicon")) {
      sim.trigger_lexicon.push_back({t.at(0).get<std::string>(), t.at(1).get<std::int64_t>()});
    }
    sim.corruption_patterns = s.at("corruption_patterns").get<std::vector<std::string>>();
    sim.noise_amplitude = s.at("noise_amplitude").get<std::int64_t>();
    sim.rng_seed = s.at("rng_seed").get<std::uint64_t>();
    cfg.sim_profiles[name] = std::move(sim);
  }
}

std::string config_digest(const RunConfig& cfg) {
  const json j = cfg;
  return sha256_hex(j.dump());
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& cfg, GatewayOptions options) {
  auto gateway = std::make_unique<Gateway>(std::move(options));
  std::shared_ptr<ModelBackend> http;
  for (const auto& [id, ep] : cfg.endpoints) {
    std::shared_ptr<ModelBackend> backend;
    if (ep.base_url.starts_with(kSimScheme)) {
      const std::string profile = ep.base_url.substr(kSimScheme.size());
      auto it = cfg.sim_profiles.find(profile);
      if (it == cfg.sim_profiles.end()) {
        throw Error(ErrorCode::kConfigInvalid, "unknown sim profile '" + profile + "'");
      }
      backend = std::make_shared<SimTargetBackend>(it->second);
    } else if (ep.base_url.starts_with(kSimEmbedScheme)) {
      backend = std::make_shared<SimEmbedBackend>();
    } else if (ep.base_url.starts_with(kSimOptimizerScheme)) {
      backend = std::make_shared<SimOptimizerBackend>();
    } else {
      if (!http) {
        http = std::make_shared<HttpBackend>(make_http_transport(), process_environment());
      }
      backend = http;
    }
    gateway->add_endpoint(ep, std::move(backend));
  }
  return gateway;
}

}  // namespace potforge
