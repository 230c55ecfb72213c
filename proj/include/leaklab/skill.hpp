#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "leaklab/dsl.hpp"
#include "leaklab/theme.hpp"

namespace leaklab {

enum class Objective {
  kDataExfiltration,
  kPersistence,
  kPrivilegeEscalation,
  kCleanupDestruction,
  kGuidanceInjection,
  kSupplyChainAbuse,
  kCrossSkillChain,
};

constexpr int kObjectiveCount = 7;

const char* objective_name(Objective objective);
Objective parse_objective(const std::string& name);  // throws ParseError

struct Topology {
  enum class Kind { kSingle, kChain };
  Kind kind = Kind::kSingle;
  int k = 1;

  bool operator==(const Topology&) const = default;
};

struct CodeArtifact {
  std::string entry_script;
  std::map<std::string, std::string> scripts;
  std::set<std::string> declared_apis;
  std::set<std::string> deps;

  bool operator==(const CodeArtifact&) const = default;
};

struct VariantMetadata {
  std::vector<std::string> tool_chain_prefix;
  std::set<std::string> file_access;
  ThemeVec theme_vector{};

  bool operator==(const VariantMetadata&) const = default;
};

struct SkillVariant {
  Objective objective = Objective::kDataExfiltration;
  Topology topology;
  CodeArtifact code;
  std::set<std::string> channels;
  std::string documentation;
  std::vector<std::string> chain;
  int poison_index = 0;
  VariantMetadata metadata;

  // The poisoned member's id is the variant's identity.
  const std::string& id() const;

  bool operator==(const SkillVariant&) const = default;
};

struct CostWeights {
  double w = 0.3;
  double alpha = 0.01;
  double beta = 0.005;
  double gamma = 1.0;
  double delta = 0.5;
  double b_search = 200.0;
  double b_artifact = 50.0;
};

struct MotifReport {
  bool kappa_overlap = false;
  bool prefix_overlap = false;
  bool file_access_overlap = false;
  bool fallback_used = false;
  int axes_shared = 0;
  bool passes = false;
};

enum class SubspaceMode { kS1, kS2, kS3 };

enum class LoadStatus { kOk, kParseError, kAlignFailed };

struct LoadReport {
  LoadStatus status = LoadStatus::kOk;
  std::string detail;
};

// Channel tags a variant may declare; mirrors the sandbox side-effect
// taxonomy plus the two execution tags used by graph sinks.
const std::set<std::string>& channel_vocabulary();

// Serialization. Field names are part of the harvest contract:
// o, tau{kind,k}, c{entry_script, scripts, declared_apis, deps}, kappa, d,
// chain, poison_index, metadata{tool_chain_prefix, file_access, theme_vector}.
nlohmann::json variant_to_json(const SkillVariant& variant);
SkillVariant variant_from_json(const nlohmann::json& value);  // throws ParseError
std::string canonical_variant_dump(const SkillVariant& variant);
std::string variant_hash(const SkillVariant& variant);

// Program text for chain member at position index: the entry script for the
// poisoned member, a bundled script keyed by the member id otherwise.
std::string member_script(const SkillVariant& variant, std::size_t index);

// All member programs concatenated in chain order; capture registers are
// positional across the whole sequence.
PrimitiveProgram assemble_program(const SkillVariant& variant);

// Lowercase verb names used across the entry script and every bundled
// script; a guard wrapper does not count as an invocation of its own.
std::set<std::string> invoked_apis(const SkillVariant& variant);

// Side-effect channels actually exercised by the variant's scripts.
std::set<std::string> observed_channels(const SkillVariant& variant);

// True iff declared surface covers invocations, header deps are declared,
// the manifest invariants hold, and register flow is valid. Throws
// ParseError when any script fails to parse (a load error, not Align=0).
bool validate_align(const SkillVariant& variant);

// Non-throwing wrapper separating parse errors from alignment failures.
LoadReport validate_load(const SkillVariant& variant);

MotifReport shared_motif(const SkillVariant& parent, const SkillVariant& candidate);

bool in_subspace(const SkillVariant& candidate, const SkillVariant& parent,
                 SubspaceMode mode, bool s1_strict = false);

double artifact_cost(const SkillVariant& variant, const CostWeights& weights);

struct RoundCost {
  int n_llm = 0;
  int n_tool = 0;
};

double search_cost(const std::vector<RoundCost>& ledger, const CostWeights& weights);

}  // namespace leaklab
