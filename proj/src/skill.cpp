#include "leaklab/skill.hpp"

#include <algorithm>
#include <cmath>

#include "leaklab/errors.hpp"
#include "leaklab/hash.hpp"

namespace leaklab {

namespace {

constexpr const char* kObjectiveNames[kObjectiveCount] = {
    "data_exfiltration",   "persistence",        "privilege_escalation",
    "cleanup_destruction", "guidance_injection", "supply_chain_abuse",
    "cross_skill_chain",
};

bool path_is_clean(const std::string& path) {
  if (path.empty() || path.front() == '/') return false;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t slash = path.find('/', start);
    const std::size_t end = slash == std::string::npos ? path.size() : slash;
    if (path.substr(start, end - start) == "..") return false;
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return true;
}

std::string manifest_violation(const SkillVariant& v) {
  if (v.topology.k < 1) return "topology k must be positive";
  if ((v.topology.kind == Topology::Kind::kSingle) != (v.topology.k == 1))
    return "topology kind and k disagree";
  if (v.chain.size() != static_cast<std::size_t>(v.topology.k))
    return "chain length differs from topology k";
  if (v.poison_index < 0 || v.poison_index >= v.topology.k)
    return "poison_index out of range";
  {
    std::set<std::string> ids(v.chain.begin(), v.chain.end());
    if (ids.size() != v.chain.size()) return "chain ids are not distinct";
  }
  for (const std::string& tag : v.channels) {
    if (!channel_vocabulary().count(tag)) return "unknown channel tag " + tag;
  }
  const double norm = theme_norm(v.metadata.theme_vector);
  if (norm != 0.0 && std::abs(norm - 1.0) > 1e-9)
    return "theme_vector is neither zero nor unit length";
  for (const auto& [path, body] : v.code.scripts) {
    (void)body;
    if (!path_is_clean(path)) return "script path " + path + " is not a clean relative path";
  }
  return "";
}

std::vector<PrimitiveProgram> parse_all_scripts(const SkillVariant& v) {
  std::vector<PrimitiveProgram> out;
  try {
    out.push_back(parse_primitives(v.code.entry_script));
  } catch (const ParseError& e) {
    throw ParseError(std::string("entry_script: ") + e.what());
  }
  for (const auto& [path, body] : v.code.scripts) {
    try {
      out.push_back(parse_primitives(body));
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json string_set_to_json(const std::set<std::string>& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const std::string& v : s) arr.push_back(v);
  return arr;
}

std::set<std::string> string_set_from_json(const nlohmann::json& arr, const char* field) {
  if (!arr.is_array()) throw ParseError(std::string(field) + " must be an array");
  std::set<std::string> out;
  for (const auto& v : arr) {
    if (!v.is_string()) throw ParseError(std::string(field) + " holds a non-string");
    out.insert(v.get<std::string>());
  }
  return out;
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field ") + key);
  return *it;
}

}  // namespace

const char* objective_name(Objective objective) {
  return kObjectiveNames[static_cast<int>(objective)];
}

Objective parse_objective(const std::string& name) {
  for (int i = 0; i < kObjectiveCount; ++i) {
    if (name == kObjectiveNames[i]) return static_cast<Objective>(i);
  }
  throw ParseError("unknown objective " + name);
}

const std::string& SkillVariant::id() const {
  static const std::string kUnnamed = "";
  if (poison_index < 0 || static_cast<std::size_t>(poison_index) >= chain.size())
    return kUnnamed;
  return chain[static_cast<std::size_t>(poison_index)];
}

const std::set<std::string>& channel_vocabulary() {
  static const std::set<std::string> kVocab = {
      "file_read",       "filesystem_write", "filesystem_delete",
      "shell_execution", "network_egress",   "setuid",
      "schedule",        "code_execution",   "sql_execution",
  };
  return kVocab;
}

nlohmann::json variant_to_json(const SkillVariant& v) {
  nlohmann::json tau;
  tau["kind"] = v.topology.kind == Topology::Kind::kSingle ? "single" : "chain";
  tau["k"] = v.topology.k;

  nlohmann::json code;
  code["entry_script"] = v.code.entry_script;
  code["scripts"] = nlohmann::json::object();
  for (const auto& [path, body] : v.code.scripts) code["scripts"][path] = body;
  code["declared_apis"] = string_set_to_json(v.code.declared_apis);
  code["deps"] = string_set_to_json(v.code.deps);

  nlohmann::json meta;
  meta["tool_chain_prefix"] = v.metadata.tool_chain_prefix;
  meta["file_access"] = string_set_to_json(v.metadata.file_access);
  meta["theme_vector"] = v.metadata.theme_vector;

  nlohmann::json out;
  out["o"] = objective_name(v.objective);
  out["tau"] = tau;
  out["c"] = code;
  out["kappa"] = string_set_to_json(v.channels);
  out["d"] = v.documentation;
  out["chain"] = v.chain;
  out["poison_index"] = v.poison_index;
  out["metadata"] = meta;
  return out;
}

SkillVariant variant_from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw ParseError("variant record must be an object");
  SkillVariant v;
  v.objective = parse_objective(require(value, "o").get<std::string>());

  const auto& tau = require(value, "tau");
  const std::string kind = require(tau, "kind").get<std::string>();
  if (kind == "single") {
    v.topology.kind = Topology::Kind::kSingle;
  } else if (kind == "chain") {
    v.topology.kind = Topology::Kind::kChain;
  } else {
    throw ParseError("unknown topology kind " + kind);
  }
  v.topology.k = require(tau, "k").get<int>();

  const auto& code = require(value, "c");
  v.code.entry_script = require(code, "entry_script").get<std::string>();
  const auto& scripts = require(code, "scripts");
  if (!scripts.is_object()) throw ParseError("c.scripts must be an object");
  for (auto it = scripts.begin(); it != scripts.end(); ++it) {
    v.code.scripts[it.key()] = it.value().get<std::string>();
  }
  v.code.declared_apis = string_set_from_json(require(code, "declared_apis"), "c.declared_apis");
  v.code.deps = string_set_from_json(require(code, "deps"), "c.deps");

  v.channels = string_set_from_json(require(value, "kappa"), "kappa");
  v.documentation = require(value, "d").get<std::string>();
  v.chain = require(value, "chain").get<std::vector<std::string>>();
  v.poison_index = require(value, "poison_index").get<int>();

  const auto& meta = require(value, "metadata");
  v.metadata.tool_chain_prefix =
      require(meta, "tool_chain_prefix").get<std::vector<std::string>>();
  v.metadata.file_access =
      string_set_from_json(require(meta, "file_access"), "metadata.file_access");
  const auto& theme = require(meta, "theme_vector");
  if (!theme.is_array() || theme.size() != kThemeDim)
    throw ParseError("metadata.theme_vector must have 64 components");
  for (int i = 0; i < kThemeDim; ++i) v.metadata.theme_vector[i] = theme[i].get<double>();
  return v;
}

std::string canonical_variant_dump(const SkillVariant& variant) {
  return variant_to_json(variant).dump();
}

std::string variant_hash(const SkillVariant& variant) {
  return sha256_hex(canonical_variant_dump(variant));
}

std::string member_script(const SkillVariant& variant, std::size_t index) {
  if (index == static_cast<std::size_t>(variant.poison_index))
    return variant.code.entry_script;
  const auto it = variant.code.scripts.find(variant.chain[index]);
  return it == variant.code.scripts.end() ? std::string() : it->second;
}

PrimitiveProgram assemble_program(const SkillVariant& variant) {
  PrimitiveProgram out;
  for (std::size_t i = 0; i < variant.chain.size(); ++i) {
    const PrimitiveProgram part = parse_primitives(member_script(variant, i));
    for (const std::string& dep : part.header_deps) out.header_deps.push_back(dep);
    for (const Primitive& prim : part.prims) out.prims.push_back(prim);
  }
  return out;
}

std::set<std::string> invoked_apis(const SkillVariant& variant) {
  std::set<std::string> out;
  for (const PrimitiveProgram& program : parse_all_scripts(variant)) {
    for (const Primitive& prim : program.prims) {
      std::string name = verb_name(prim.verb);
      std::transform(name.begin(), name.end(), name.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      out.insert(std::move(name));
    }
  }
  return out;
}

std::set<std::string> observed_channels(const SkillVariant& variant) {
  std::set<std::string> out;
  for (const PrimitiveProgram& program : parse_all_scripts(variant)) {
    for (const Primitive& prim : program.prims) out.insert(verb_channel(prim.verb));
  }
  return out;
}

bool validate_align(const SkillVariant& variant) {
  const std::vector<PrimitiveProgram> programs = parse_all_scripts(variant);
  if (!manifest_violation(variant).empty()) return false;

  for (const std::string& api : invoked_apis(variant)) {
    if (!variant.code.declared_apis.count(api)) return false;
  }
  for (const PrimitiveProgram& program : programs) {
    for (const std::string& dep : program.header_deps) {
      if (!variant.code.deps.count(dep)) return false;
    }
  }
  return !validate_register_flow(assemble_program(variant)).has_value();
}

LoadReport validate_load(const SkillVariant& variant) {
  try {
    if (validate_align(variant)) return {LoadStatus::kOk, ""};
    std::string why = manifest_violation(variant);
    if (why.empty()) {
      for (const std::string& api : invoked_apis(variant)) {
        if (!variant.code.declared_apis.count(api)) {
          why = "invoked api " + api + " is not declared";
          break;
        }
      }
    }
    if (why.empty()) {
      const auto flow = validate_register_flow(assemble_program(variant));
      why = flow.value_or("script header dependency not declared");
    }
    return {LoadStatus::kAlignFailed, why};
  } catch (const ParseError& e) {
    return {LoadStatus::kParseError, e.what()};
  }
}

MotifReport shared_motif(const SkillVariant& parent, const SkillVariant& candidate) {
  MotifReport report;

  for (const std::string& tag : parent.channels) {
    if (candidate.channels.count(tag)) {
      report.kappa_overlap = true;
      break;
    }
  }

  const auto& pa = parent.metadata.tool_chain_prefix;
  const auto& pb = candidate.metadata.tool_chain_prefix;
  if (!pa.empty() && !pb.empty()) {
    const auto& shorter = pa.size() <= pb.size() ? pa : pb;
    const auto& longer = pa.size() <= pb.size() ? pb : pa;
    report.prefix_overlap = std::equal(shorter.begin(), shorter.end(), longer.begin());
  }

  for (const std::string& path : parent.metadata.file_access) {
    if (candidate.metadata.file_access.count(path)) {
      report.file_access_overlap = true;
      break;
    }
  }

  const bool both_bare = pa.empty() && pb.empty() &&
                         parent.metadata.file_access.empty() &&
                         candidate.metadata.file_access.empty();
  if (both_bare) {
    report.fallback_used = true;
    report.axes_shared = static_cast<int>(report.kappa_overlap) +
                         static_cast<int>(parent.code.entry_script == candidate.code.entry_script);
  } else {
    report.axes_shared = static_cast<int>(report.kappa_overlap) +
                         static_cast<int>(report.prefix_overlap) +
                         static_cast<int>(report.file_access_overlap);
  }
  report.passes = report.axes_shared >= 2;
  return report;
}

bool in_subspace(const SkillVariant& candidate, const SkillVariant& parent,
                 SubspaceMode mode, bool s1_strict) {
  bool aligned = false;
  try {
    aligned = validate_align(candidate);
  } catch (const ParseError&) {
    return false;
  }
  if (!aligned) return false;

  switch (mode) {
    case SubspaceMode::kS1: {
      if (candidate.objective != parent.objective || !(candidate.topology == parent.topology))
        return false;
      if (s1_strict) {
        SkillVariant doc_neutral = candidate;
        doc_neutral.documentation = parent.documentation;
        return canonical_variant_dump(doc_neutral) == canonical_variant_dump(parent);
      }
      return true;
    }
    case SubspaceMode::kS2: {
      if (!in_subspace(candidate, parent, SubspaceMode::kS1)) return false;
      const bool same_triple = candidate.code == parent.code &&
                               candidate.channels == parent.channels &&
                               candidate.chain == parent.chain &&
                               candidate.poison_index == parent.poison_index;
      return !same_triple;
    }
    case SubspaceMode::kS3:
      return shared_motif(parent, candidate).passes;
  }
  throw UsageError("unknown subspace mode");
}

double artifact_cost(const SkillVariant& variant, const CostWeights& weights) {
  const std::vector<PrimitiveProgram> programs = parse_all_scripts(variant);

  std::size_t code_tokens = whitespace_token_count(variant.code.entry_script);
  for (const auto& [path, body] : variant.code.scripts) {
    (void)path;
    code_tokens += whitespace_token_count(body);
  }
  int guards = 0;
  for (const PrimitiveProgram& program : programs) guards += guard_count(program);
  const int cyclomatic = 1 + guards;

  return weights.alpha * static_cast<double>(code_tokens) +
         weights.beta * static_cast<double>(whitespace_token_count(variant.documentation)) +
         weights.gamma * static_cast<double>(variant.code.deps.size()) +
         weights.delta * static_cast<double>(cyclomatic);
}

double search_cost(const std::vector<RoundCost>& ledger, const CostWeights& weights) {
  double total = 0.0;
  for (const RoundCost& round : ledger) {
    total += static_cast<double>(round.n_llm) + weights.w * static_cast<double>(round.n_tool);
  }
  return total;
}

}  // namespace leaklab
