#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "potforge/assembler.hpp"
#include "potforge/gateway.hpp"
#include "potforge/sim_target.hpp"

namespace potforge {

enum class AssemblyMode { kAuto, kPrepend, kClause, kEmbed, kLlm };
enum class CandidateMode { kBatched, kPerCall };
enum class DiversitySelector { kGreedy, kExact };
enum class PhrasePolicy { kBest, kRoundRobin };

struct RoleBindings {
  std::string generator;  // empty = use the seed corpus
  std::string assembler;  // empty = deterministic placement
  std::string scorer_target = "sim";
  std::string optimizer = "sim-optimizer";
  std::string embedder = "sim-embed";

  bool operator==(const RoleBindings&) const = default;
};

struct DataPaths {
  std::filesystem::path seeds;
  std::filesystem::path train;
  std::filesystem::path eval;

  bool operator==(const DataPaths&) const = default;
};

extern const std::string_view kDefaultObjective;
extern const std::string_view kDefaultInstructions;
extern const std::string_view kDefaultSeedTemplate;

struct RunConfig {
  double alpha = 1.0;
  double beta = 2.0;
  int rounds = 50;
  int candidates_per_round = 30;
  int k_init = 30;
  int k_score = 40;
  double temperature = 1.0;
  double hit_threshold = 1.2;
  int q_train = 8;
  std::uint64_t rng_seed = 0;
  double epsilon = 0.05;
  int patience = 5;

  std::size_t max_phrase_chars = kDefaultMaxPhraseChars;
  int n_seeds = 50;
  int min_seeds = 5;
  std::size_t overhead_chars = kDefaultOverheadChars;
  int exact_limit = 15;
  int workers = 1;

  AssemblyMode assembly = AssemblyMode::kAuto;
  CandidateMode candidate_mode = CandidateMode::kBatched;
  DiversitySelector diversity_selector = DiversitySelector::kGreedy;
  PhrasePolicy phrase_policy = PhrasePolicy::kBest;

  std::string objective{kDefaultObjective};
  std::string instructions{kDefaultInstructions};
  std::string seed_template{kDefaultSeedTemplate};

  RoleBindings roles;
  DataPaths data;
  std::map<std::string, ModelEndpoint> endpoints;
  std::map<std::string, SimTargetConfig> sim_profiles;
  std::filesystem::path output_dir;

  bool operator==(const RunConfig&) const = default;
};

// Built-in defaults: the "sim", "sim-embed" and "sim-optimizer" endpoints
// and the "default" sim profile.
RunConfig default_run_config();

// Every violated invariant, empty when valid.
std::vector<std::string> validate(const RunConfig& cfg);

// Reads a TOML-subset config file and overlays it on the defaults.
// Unknown keys and invariant violations are reported together as one
// kConfigInvalid. Relative data paths resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

// The assembly strategy a run actually uses once kAuto is resolved.
AssemblyStrategy effective_strategy(const RunConfig& cfg);

// Temperature-0 seed used for every scoring and evaluation call.
std::int64_t scoring_seed(const RunConfig& cfg);

void to_json(nlohmann::json& j, const RunConfig& cfg);
void from_json(const nlohmann::json& j, RunConfig& cfg);

// SHA-256 of the canonical JSON snapshot (output_dir excluded).
std::string config_digest(const RunConfig& cfg);

// Builds a gateway with one backend per configured endpoint.
// "sim://<profile>" endpoints use the named sim profile, "sim-embed://" the
// hash embedder, "sim-optimizer://" the recombination stub, and http(s)
// URLs the OpenAI-compatible client.
std::unique_ptr<Gateway> make_gateway(const RunConfig& cfg, GatewayOptions options);

}  // namespace potforge
