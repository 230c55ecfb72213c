#include "leaklab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "leaklab/errors.hpp"

namespace leaklab {

namespace {

nlohmann::json tags_to_json(const std::set<std::string>& tags) {
  nlohmann::json arr = nlohmann::json::array();
  for (const std::string& t : tags) arr.push_back(t);
  return arr;
}

std::set<std::string> tags_from_json(const nlohmann::json& arr, const char* field,
                                     const std::set<std::string>* vocab) {
  if (!arr.is_array()) throw ParseError(std::string(field) + " must be an array");
  std::set<std::string> out;
  for (const auto& v : arr) {
    const std::string tag = v.get<std::string>();
    if (vocab && !vocab->count(tag))
      throw ParseError(std::string(field) + " holds unknown tag " + tag);
    out.insert(tag);
  }
  return out;
}

struct PairHop {
  int to;
  int rule_index;
  double similarity;
};

}  // namespace

const std::set<std::string>& source_tag_vocabulary() {
  static const std::set<std::string> kVocab = {
      "user_input", "network_input", "external_code", "credentials", "local_files"};
  return kVocab;
}

const std::set<std::string>& sink_tag_vocabulary() {
  static const std::set<std::string> kVocab = {
      "shell_execution", "code_execution", "network_egress", "sql_execution",
      "filesystem_write"};
  return kVocab;
}

const std::vector<RiskRule>& rule_catalog() {
  static const std::vector<RiskRule> kRules = {
      {1, "user_input", "shell_execution", "command_injection"},
      {2, "external_code", "shell_execution", "remote_code_execution"},
      {3, "external_code", "code_execution", "remote_code_execution"},
      {4, "credentials", "network_egress", "data_exfiltration"},
      {5, "credentials", "filesystem_write", "credential_persistence"},
      {6, "local_files", "network_egress", "repo_exfiltration"},
      {7, "local_files", "shell_execution", "privilege_escalation"},
      {8, "local_files", "sql_execution", "data_poisoning"},
      {9, "user_input", "code_execution", "code_injection"},
      {10, "user_input", "sql_execution", "sql_injection"},
      {11, "credentials", "shell_execution", "credential_abuse"},
      {12, "local_files", "filesystem_write", "persistence_write"},
      {13, "network_input", "shell_execution", "remote_command_injection"},
      {14, "network_input", "code_execution", "remote_code_injection"},
      {15, "network_input", "filesystem_write", "remote_file_write"},
      {16, "network_input", "sql_execution", "remote_sql_injection"},
  };
  return kRules;
}

Endpoints classify_endpoints(const SkillNode& node) {
  Endpoints out;
  for (const std::string& t : node.source_tags) {
    if (source_tag_vocabulary().count(t)) {
      out.is_entry = true;
      break;
    }
  }
  for (const std::string& t : node.sink_tags) {
    if (sink_tag_vocabulary().count(t)) {
      out.is_exit = true;
      break;
    }
  }
  return out;
}

double theme_similarity(const SkillNode& a, const SkillNode& b) {
  return theme_cosine(a.theme_vector, b.theme_vector);
}

std::vector<TypedEdge> build_edges_serial(const std::vector<SkillNode>& nodes,
                                          double threshold) {
  std::vector<TypedEdge> out;
  for (const SkillNode& u : nodes) {
    for (const SkillNode& v : nodes) {
      if (u.id == v.id) continue;
      const double sim = theme_similarity(u, v);
      if (sim < threshold) continue;
      for (const RiskRule& rule : rule_catalog()) {
        if (u.source_tags.count(rule.source_tag) && v.sink_tags.count(rule.sink_tag)) {
          out.push_back({u.id, v.id, rule.index, sim});
        }
      }
    }
  }
  return out;
}

std::vector<TypedEdge> build_edges(const std::vector<SkillNode>& nodes, double threshold) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<TypedEdge>> per_u(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    const SkillNode& u = nodes[static_cast<std::size_t>(i)];
    auto& local = per_u[static_cast<std::size_t>(i)];
    for (const SkillNode& v : nodes) {
      if (u.id == v.id) continue;
      const double sim = theme_similarity(u, v);
      if (sim < threshold) continue;
      for (const RiskRule& rule : rule_catalog()) {
        if (u.source_tags.count(rule.source_tag) && v.sink_tags.count(rule.sink_tag)) {
          local.push_back({u.id, v.id, rule.index, sim});
        }
      }
    }
  }

  std::vector<TypedEdge> out;
  for (auto& local : per_u) {
    out.insert(out.end(), local.begin(), local.end());
  }
  return out;
}

const SkillNode* SkillGraph::find(const std::string& id) const {
  for (const SkillNode& node : nodes) {
    if (node.id == id) return &node;
  }
  return nullptr;
}

SkillGraph build_graph(std::vector<SkillNode> nodes, double threshold) {
  SkillGraph graph;
  graph.nodes = std::move(nodes);
  graph.threshold = threshold;
  graph.edges = build_edges(graph.nodes, threshold);
  return graph;
}

std::vector<ChainPath> enumerate_paths(const SkillGraph& graph, int max_hops,
                                       const PruneConfig& prune) {
  if (max_hops < 1) throw UsageError("max_hops must be at least 1");
  const int n = static_cast<int>(graph.nodes.size());

  std::map<std::string, int> index_of;
  for (int i = 0; i < n; ++i) index_of[graph.nodes[static_cast<std::size_t>(i)].id] = i;

  // One hop per node pair; the annotation keeps the lowest rule index,
  // which is the first seen since edges are emitted in rule order.
  std::vector<std::vector<PairHop>> adj(static_cast<std::size_t>(n));
  std::map<std::pair<int, int>, std::size_t> hop_at;
  for (const TypedEdge& edge : graph.edges) {
    const int u = index_of.at(edge.from_id);
    const int v = index_of.at(edge.to_id);
    if (!hop_at.count({u, v})) {
      hop_at[{u, v}] = adj[static_cast<std::size_t>(u)].size();
      adj[static_cast<std::size_t>(u)].push_back({v, edge.rule_index, edge.similarity});
    }
  }

  std::vector<Endpoints> ends(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    ends[static_cast<std::size_t>(i)] = classify_endpoints(graph.nodes[static_cast<std::size_t>(i)]);

  std::vector<ChainPath> paths;
  std::vector<int> stack_nodes;
  std::vector<int> stack_rules;
  std::vector<char> visited(static_cast<std::size_t>(n), 0);

  auto record = [&](double aggregate) {
    ChainPath path;
    for (int idx : stack_nodes)
      path.node_ids.push_back(graph.nodes[static_cast<std::size_t>(idx)].id);
    path.rule_indices = stack_rules;
    path.aggregate_similarity = aggregate;
    path.risk_type = rule_catalog()[static_cast<std::size_t>(stack_rules.back() - 1)].risk_type;
    paths.push_back(std::move(path));
  };

  std::function<void(int, double)> dfs = [&](int at, double aggregate) {
    const int hops = static_cast<int>(stack_rules.size());
    if (hops >= 1 && ends[static_cast<std::size_t>(at)].is_exit) record(aggregate);
    if (hops == max_hops) return;
    for (const PairHop& hop : adj[static_cast<std::size_t>(at)]) {
      if (visited[static_cast<std::size_t>(hop.to)]) continue;
      visited[static_cast<std::size_t>(hop.to)] = 1;
      stack_nodes.push_back(hop.to);
      stack_rules.push_back(hop.rule_index);
      dfs(hop.to, std::min(aggregate, hop.similarity));
      stack_rules.pop_back();
      stack_nodes.pop_back();
      visited[static_cast<std::size_t>(hop.to)] = 0;
    }
  };

  for (int start = 0; start < n; ++start) {
    if (!ends[static_cast<std::size_t>(start)].is_entry) continue;
    visited[static_cast<std::size_t>(start)] = 1;
    stack_nodes.push_back(start);
    dfs(start, 2.0);
    stack_nodes.pop_back();
    visited[static_cast<std::size_t>(start)] = 0;
  }

  std::sort(paths.begin(), paths.end(), [](const ChainPath& a, const ChainPath& b) {
    if (a.aggregate_similarity != b.aggregate_similarity)
      return a.aggregate_similarity > b.aggregate_similarity;
    return a.node_ids < b.node_ids;
  });

  if (prune.min_aggregate_sim > -1.0) {
    std::erase_if(paths, [&](const ChainPath& p) {
      return p.aggregate_similarity < prune.min_aggregate_sim;
    });
  }

  if (prune.per_bucket_cap >= 0) {
    std::map<int, int> kept_per_bucket;
    std::vector<ChainPath> kept;
    for (ChainPath& path : paths) {
      const SkillNode* entry = graph.find(path.node_ids.front());
      int bucket = 0;
      double best = -1.0;
      for (int i = 0; i < kThemeDim; ++i) {
        const double mag = std::abs(entry->theme_vector[static_cast<std::size_t>(i)]);
        if (mag > best) {
          best = mag;
          bucket = i;
        }
      }
      if (kept_per_bucket[bucket] < prune.per_bucket_cap) {
        ++kept_per_bucket[bucket];
        kept.push_back(std::move(path));
      }
    }
    paths = std::move(kept);
  }

  if (prune.per_pair_budget >= 0) {
    std::map<std::pair<std::string, std::string>, int> kept_per_pair;
    std::vector<ChainPath> kept;
    for (ChainPath& path : paths) {
      const RiskRule& first = rule_catalog()[static_cast<std::size_t>(path.rule_indices.front() - 1)];
      const RiskRule& last = rule_catalog()[static_cast<std::size_t>(path.rule_indices.back() - 1)];
      const auto key = std::make_pair(std::string(first.source_tag), std::string(last.sink_tag));
      if (kept_per_pair[key] < prune.per_pair_budget) {
        ++kept_per_pair[key];
        kept.push_back(std::move(path));
      }
    }
    paths = std::move(kept);
  }

  return paths;
}

std::optional<SkillNode> select_bridge(const SkillGraph& graph,
                                       const std::string& source_id,
                                       const std::string& sink_id,
                                       double threshold) {
  const SkillNode* source = graph.find(source_id);
  const SkillNode* sink = graph.find(sink_id);
  if (!source || !sink) throw UsageError("bridge endpoints must be graph nodes");

  auto admissible = [](const std::set<std::string>& from_tags,
                       const std::set<std::string>& to_tags) {
    for (const RiskRule& rule : rule_catalog()) {
      if (from_tags.count(rule.source_tag) && to_tags.count(rule.sink_tag)) return true;
    }
    return false;
  };

  const SkillNode* best = nullptr;
  double best_score = -2.0;
  for (const SkillNode& w : graph.nodes) {
    if (w.id == source_id || w.id == sink_id) continue;
    const double in_leg = theme_similarity(*source, w);
    const double out_leg = theme_similarity(w, *sink);
    if (in_leg < threshold || out_leg < threshold) continue;
    if (!admissible(source->source_tags, w.sink_tags)) continue;
    if (!admissible(w.source_tags, sink->sink_tags)) continue;
    const double score = std::min(in_leg, out_leg);
    if (score > best_score || (score == best_score && best && w.id < best->id)) {
      best_score = score;
      best = &w;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

nlohmann::json node_to_json(const SkillNode& node) {
  nlohmann::json out;
  out["id"] = node.id;
  out["source_tags"] = tags_to_json(node.source_tags);
  out["sink_tags"] = tags_to_json(node.sink_tags);
  out["theme"] = node.theme;
  out["kappa"] = tags_to_json(node.fingerprint.kappa);
  out["tool_chain_prefix"] = node.fingerprint.tool_chain_prefix;
  out["file_access"] = tags_to_json(node.fingerprint.file_access);
  return out;
}

SkillNode node_from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw ParseError("corpus record must be an object");
  SkillNode node;
  if (!value.contains("id") || !value["id"].is_string())
    throw ParseError("corpus record needs a string id");
  node.id = value["id"].get<std::string>();
  node.source_tags = tags_from_json(value.value("source_tags", nlohmann::json::array()),
                                    "source_tags", &source_tag_vocabulary());
  node.sink_tags = tags_from_json(value.value("sink_tags", nlohmann::json::array()),
                                  "sink_tags", &sink_tag_vocabulary());
  node.theme = value.value("theme", std::string());
  node.theme_vector = theme_embed(node.theme);
  node.fingerprint.kappa =
      tags_from_json(value.value("kappa", nlohmann::json::array()), "kappa", nullptr);
  node.fingerprint.tool_chain_prefix =
      value.value("tool_chain_prefix", std::vector<std::string>{});
  node.fingerprint.file_access = tags_from_json(
      value.value("file_access", nlohmann::json::array()), "file_access", nullptr);
  return node;
}

std::vector<SkillNode> corpus_from_jsonl(const std::string& text) {
  std::vector<SkillNode> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded())
      throw ParseError("corpus line " + std::to_string(line_no) + ": invalid json");
    SkillNode node = node_from_json(record);
    if (!seen.insert(node.id).second)
      throw ParseError("corpus line " + std::to_string(line_no) + ": duplicate id " + node.id);
    out.push_back(std::move(node));
  }
  return out;
}

std::string corpus_to_jsonl(const std::vector<SkillNode>& nodes) {
  std::string out;
  for (const SkillNode& node : nodes) {
    out += node_to_json(node).dump();
    out += '\n';
  }
  return out;
}

std::string edges_to_jsonl(const SkillGraph& graph) {
  std::string out;
  for (const TypedEdge& edge : graph.edges) {
    nlohmann::json record;
    record["from_id"] = edge.from_id;
    record["to_id"] = edge.to_id;
    record["rule_index"] = edge.rule_index;
    record["risk_type"] = rule_catalog()[static_cast<std::size_t>(edge.rule_index - 1)].risk_type;
    record["similarity"] = edge.similarity;
    out += record.dump();
    out += '\n';
  }
  return out;
}

std::vector<SkillNode> synthetic_corpus(int count, std::uint64_t seed) {
  static const std::vector<std::string> kTopics = {
      "credential vault",  "repository backup", "log shipping",  "package registry",
      "calendar digest",   "database report",   "env settings",  "webhook relay",
      "release notes",     "artifact cache",
  };
  static const std::vector<std::string> kActions = {
      "sync", "mirror", "export", "cleanup", "monitor", "publish",
  };
  static const std::vector<std::string> kTools = {
      "read_file", "list_dir", "fetch_url", "run_query",
  };
  static const std::vector<std::string> kPaths = {
      "$HOME/.config/app.toml", "$HOME/.ssh/known_hosts", "/var/log/app.log",
      "package.json",           "$HOME/notes.md",
  };

  std::mt19937_64 rng(seed);
  auto pick = [&rng](const std::vector<std::string>& pool) {
    return pool[rng() % pool.size()];
  };

  std::vector<SkillNode> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SkillNode node;
    char buf[16];
    std::snprintf(buf, sizeof buf, "sk-%04d", i);
    node.id = buf;
    node.theme = pick(kTopics) + " " + pick(kActions);
    node.theme_vector = theme_embed(node.theme);

    for (const std::string& tag : source_tag_vocabulary()) {
      if (rng() % 10 < 3) node.source_tags.insert(tag);
    }
    for (const std::string& tag : sink_tag_vocabulary()) {
      if (rng() % 10 < 3) node.sink_tags.insert(tag);
    }
    for (const std::string& tag : node.sink_tags) {
      node.fingerprint.kappa.insert(tag == "shell_execution" ? "shell_execution"
                                    : tag == "network_egress" ? "network_egress"
                                                              : "filesystem_write");
    }
    if (node.source_tags.count("local_files") || node.source_tags.count("credentials"))
      node.fingerprint.kappa.insert("file_read");

    const std::size_t prefix_len = rng() % 3;
    for (std::size_t j = 0; j < prefix_len; ++j)
      node.fingerprint.tool_chain_prefix.push_back(kTools[rng() % kTools.size()]);
    const std::size_t access_n = rng() % 3;
    for (std::size_t j = 0; j < access_n; ++j)
      node.fingerprint.file_access.insert(pick(kPaths));

    out.push_back(std::move(node));
  }
  return out;
}

}  // namespace leaklab
