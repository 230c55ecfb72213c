#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "leaklab/theme.hpp"

namespace leaklab {

const std::set<std::string>& source_tag_vocabulary();
const std::set<std::string>& sink_tag_vocabulary();

struct NodeFingerprint {
  std::set<std::string> kappa;
  std::vector<std::string> tool_chain_prefix;
  std::set<std::string> file_access;
};

struct SkillNode {
  std::string id;
  std::set<std::string> source_tags;
  std::set<std::string> sink_tags;
  std::string theme;
  ThemeVec theme_vector{};
  NodeFingerprint fingerprint;
};

struct RiskRule {
  int index;
  const char* source_tag;
  const char* sink_tag;
  const char* risk_type;
};

// The fixed 16-row source→sink catalog, in rule-index order.
const std::vector<RiskRule>& rule_catalog();

struct TypedEdge {
  std::string from_id;
  std::string to_id;
  int rule_index;
  double similarity;
};

struct ChainPath {
  std::vector<std::string> node_ids;   // entry first, exit last
  std::vector<int> rule_indices;       // one per hop
  double aggregate_similarity;         // minimum edge similarity
  std::string risk_type;               // from the terminal hop's rule
};

struct Endpoints {
  bool is_entry = false;
  bool is_exit = false;
};

Endpoints classify_endpoints(const SkillNode& node);

double theme_similarity(const SkillNode& a, const SkillNode& b);

// Every (u, v, rule) admissible under the catalog with cos ≥ threshold and
// u ≠ v. Ordered by (u position, v position, rule index).
std::vector<TypedEdge> build_edges(const std::vector<SkillNode>& nodes, double threshold);

// Single-threaded reference with the identical output contract.
std::vector<TypedEdge> build_edges_serial(const std::vector<SkillNode>& nodes,
                                          double threshold);

struct SkillGraph {
  std::vector<SkillNode> nodes;
  std::vector<TypedEdge> edges;
  double threshold = 0.30;

  const SkillNode* find(const std::string& id) const;
};

SkillGraph build_graph(std::vector<SkillNode> nodes, double threshold = 0.30);

// Negative caps disable the corresponding pruning step.
struct PruneConfig {
  double min_aggregate_sim = -1.0;
  int per_bucket_cap = -1;
  int per_pair_budget = -1;
};

// All simple entry→exit paths of 1..max_hops hops. Each hop is annotated
// with the lowest admissible rule index for that node pair. Output is
// ranked by aggregate similarity descending, ties by node-id sequence;
// pruning applies similarity floor, then entry-theme bucket caps, then
// (first-hop source_tag, last-hop sink_tag) budgets.
std::vector<ChainPath> enumerate_paths(const SkillGraph& graph, int max_hops,
                                       const PruneConfig& prune = {});

// Bridge w for source→w→sink: both legs clear the similarity threshold and
// are rule-admissible; maximizes the weaker leg, ties to the smaller id.
std::optional<SkillNode> select_bridge(const SkillGraph& graph,
                                       const std::string& source_id,
                                       const std::string& sink_id,
                                       double threshold);

nlohmann::json node_to_json(const SkillNode& node);
SkillNode node_from_json(const nlohmann::json& value);  // throws ParseError

std::vector<SkillNode> corpus_from_jsonl(const std::string& text);
std::string corpus_to_jsonl(const std::vector<SkillNode>& nodes);
std::string edges_to_jsonl(const SkillGraph& graph);

// Seeded corpus with tags drawn from fixed marginals and themes from a
// fixed phrase pool; stands in for a marketplace crawl.
std::vector<SkillNode> synthetic_corpus(int count, std::uint64_t seed);

}  // namespace leaklab
