#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "leaklab/errors.hpp"
#include "leaklab/graph.hpp"

using namespace leaklab;

namespace {

SkillNode make_node(std::string id, std::set<std::string> sources,
                    std::set<std::string> sinks, std::string theme) {
  SkillNode node;
  node.id = std::move(id);
  node.source_tags = std::move(sources);
  node.sink_tags = std::move(sinks);
  node.theme = std::move(theme);
  node.theme_vector = theme_embed(node.theme);
  return node;
}

// Exhaustive simple-path enumeration straight off node data; shares no
// traversal code with enumerate_paths.
std::vector<ChainPath> oracle_paths(const std::vector<SkillNode>& nodes,
                                    double threshold, int max_hops) {
  std::vector<ChainPath> out;
  const std::size_t n = nodes.size();

  auto lowest_rule = [&](const SkillNode& u, const SkillNode& v) -> int {
    if (theme_similarity(u, v) < threshold) return 0;
    for (const RiskRule& rule : rule_catalog()) {
      if (u.source_tags.count(rule.source_tag) && v.sink_tags.count(rule.sink_tag))
        return rule.index;
    }
    return 0;
  };

  std::vector<std::size_t> seq;
  std::vector<char> used(n, 0);
  std::function<void()> extend = [&]() {
    const SkillNode& tail = nodes[seq.back()];
    if (seq.size() >= 2 && classify_endpoints(tail).is_exit) {
      ChainPath path;
      double aggregate = 2.0;
      bool ok = true;
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        const int rule = lowest_rule(nodes[seq[i]], nodes[seq[i + 1]]);
        if (rule == 0) {
          ok = false;
          break;
        }
        path.rule_indices.push_back(rule);
        aggregate = std::min(aggregate, theme_similarity(nodes[seq[i]], nodes[seq[i + 1]]));
      }
      if (ok) {
        for (std::size_t idx : seq) path.node_ids.push_back(nodes[idx].id);
        path.aggregate_similarity = aggregate;
        path.risk_type =
            rule_catalog()[static_cast<std::size_t>(path.rule_indices.back() - 1)].risk_type;
        out.push_back(std::move(path));
      }
    }
    if (seq.size() > static_cast<std::size_t>(max_hops)) return;
    for (std::size_t next = 0; next < n; ++next) {
      if (used[next]) continue;
      if (lowest_rule(nodes[seq.back()], nodes[next]) == 0) continue;
      used[next] = 1;
      seq.push_back(next);
      extend();
      seq.pop_back();
      used[next] = 0;
    }
  };

  for (std::size_t start = 0; start < n; ++start) {
    if (!classify_endpoints(nodes[start]).is_entry) continue;
    used[start] = 1;
    seq.push_back(start);
    extend();
    seq.pop_back();
    used[start] = 0;
  }

  std::sort(out.begin(), out.end(), [](const ChainPath& a, const ChainPath& b) {
    if (a.aggregate_similarity != b.aggregate_similarity)
      return a.aggregate_similarity > b.aggregate_similarity;
    return a.node_ids < b.node_ids;
  });
  return out;
}

bool same_paths(const std::vector<ChainPath>& a, const std::vector<ChainPath>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].node_ids != b[i].node_ids) return false;
    if (a[i].rule_indices != b[i].rule_indices) return false;
    if (a[i].risk_type != b[i].risk_type) return false;
    if (std::abs(a[i].aggregate_similarity - b[i].aggregate_similarity) > 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rule catalog is the fixed 16-row table") {
  const auto& rules = rule_catalog();
  REQUIRE(rules.size() == 16);
  struct Row {
    int index;
    const char* source;
    const char* sink;
    const char* risk;
  };
  const Row expected[] = {
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
  for (int i = 0; i < 16; ++i) {
    CHECK(rules[i].index == expected[i].index);
    CHECK(std::string(rules[i].source_tag) == expected[i].source);
    CHECK(std::string(rules[i].sink_tag) == expected[i].sink);
    CHECK(std::string(rules[i].risk_type) == expected[i].risk);
  }
}

TEST_CASE("endpoint classification") {
  const auto entry_only = classify_endpoints(make_node("a", {"credentials"}, {}, "t"));
  CHECK(entry_only.is_entry);
  CHECK(!entry_only.is_exit);

  const auto neither = classify_endpoints(make_node("b", {}, {}, "t"));
  CHECK(!neither.is_entry);
  CHECK(!neither.is_exit);

  const auto both = classify_endpoints(make_node("c", {"local_files"}, {"network_egress"}, "t"));
  CHECK(both.is_entry);
  CHECK(both.is_exit);
}

TEST_CASE("edges require rule match, threshold, and distinct endpoints") {
  std::vector<SkillNode> nodes = {
      make_node("u", {"credentials"}, {}, "credential vault sync"),
      make_node("v", {}, {"network_egress"}, "credential vault sync"),
  };
  auto edges = build_edges(nodes, 0.30);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].from_id == "u");
  CHECK(edges[0].to_id == "v");
  CHECK(edges[0].rule_index == 4);
  CHECK(edges[0].similarity == doctest::Approx(1.0));

  CHECK(build_edges(nodes, 1.1).empty());

  std::vector<SkillNode> self = {
      make_node("w", {"credentials"}, {"network_egress"}, "same theme")};
  CHECK(build_edges(self, 0.30).empty());
}

TEST_CASE("one pair can carry several typed edges") {
  std::vector<SkillNode> nodes = {
      make_node("u", {"user_input"}, {}, "terminal helper"),
      make_node("v", {}, {"shell_execution", "code_execution"}, "terminal helper"),
  };
  const auto edges = build_edges(nodes, 0.30);
  REQUIRE(edges.size() == 2);
  CHECK(edges[0].rule_index == 1);
  CHECK(edges[1].rule_index == 9);
}

TEST_CASE("parallel edge kernel matches the serial reference") {
  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    const auto nodes = synthetic_corpus(60, seed);
    const auto fast = build_edges(nodes, 0.30);
    const auto slow = build_edges_serial(nodes, 0.30);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i) {
      CHECK(fast[i].from_id == slow[i].from_id);
      CHECK(fast[i].to_id == slow[i].to_id);
      CHECK(fast[i].rule_index == slow[i].rule_index);
      CHECK(fast[i].similarity == slow[i].similarity);
    }
  }
}

TEST_CASE("theme similarity extremes") {
  SkillNode a = make_node("a", {}, {}, "alpha beta");
  SkillNode b = a;
  CHECK(theme_similarity(a, b) == doctest::Approx(1.0));

  SkillNode neg = a;
  for (auto& x : neg.theme_vector) x = -x;
  CHECK(theme_similarity(a, neg) == doctest::Approx(-1.0));

  SkillNode zero = make_node("z", {}, {}, "");
  CHECK(theme_similarity(a, zero) == 0.0);
}

TEST_CASE("three-node line yields the expected path set") {
  std::vector<SkillNode> nodes = {
      make_node("entry", {"credentials"}, {}, "vault sync"),
      make_node("bridge", {"credentials"}, {"filesystem_write"}, "vault sync"),
      make_node("exit", {}, {"network_egress"}, "vault sync"),
  };
  auto graph = build_graph(nodes, 0.30);
  const auto paths = enumerate_paths(graph, 2);

  // entry→exit, entry→bridge (bridge carries a sink tag), entry→bridge→exit,
  // and bridge→exit since bridge is an entry in its own right.
  REQUIRE(paths.size() == 4);
  bool saw_direct = false, saw_two_hop = false;
  for (const auto& path : paths) {
    if (path.node_ids == std::vector<std::string>{"entry", "exit"}) saw_direct = true;
    if (path.node_ids == std::vector<std::string>{"entry", "bridge", "exit"}) {
      saw_two_hop = true;
      CHECK(path.rule_indices == std::vector<int>{5, 4});
      CHECK(path.risk_type == "data_exfiltration");
    }
  }
  CHECK(saw_direct);
  CHECK(saw_two_hop);
}

TEST_CASE("no exit nodes means no paths") {
  std::vector<SkillNode> nodes = {
      make_node("a", {"user_input"}, {}, "t"),
      make_node("b", {"credentials"}, {}, "t"),
  };
  CHECK(enumerate_paths(build_graph(nodes, 0.30), 3).empty());
}

TEST_CASE("enumeration matches the exhaustive oracle on seeded graphs") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int count = 4 + static_cast<int>(seed % 7);
    const int max_hops = 1 + static_cast<int>(seed % 4);
    const auto nodes = synthetic_corpus(count, seed * 31 + 5);
    const auto graph = build_graph(nodes, 0.30);
    const auto got = enumerate_paths(graph, max_hops);
    const auto want = oracle_paths(nodes, 0.30, max_hops);
    CHECK(same_paths(got, want));
  }
}

TEST_CASE("pruning applies floor, bucket cap, and pair budget in order") {
  std::vector<SkillNode> nodes = {
      make_node("e1", {"credentials"}, {}, "vault sync export"),
      make_node("x1", {}, {"network_egress"}, "vault sync export"),
      make_node("x2", {}, {"network_egress"}, "vault sync backup"),
      make_node("x3", {}, {"shell_execution"}, "vault sync export"),
  };
  auto graph = build_graph(nodes, 0.30);
  const auto all = enumerate_paths(graph, 1);
  REQUIRE(all.size() == 3);
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    CHECK(all[i].aggregate_similarity >= all[i + 1].aggregate_similarity);
  }

  PruneConfig floor;
  floor.min_aggregate_sim = 0.99;
  const auto floored = enumerate_paths(graph, 1, floor);
  CHECK(floored.size() == 2);

  PruneConfig bucket;
  bucket.per_bucket_cap = 1;
  const auto bucketed = enumerate_paths(graph, 1, bucket);
  CHECK(bucketed.size() == 1);  // all paths share the single entry's bucket

  PruneConfig pair;
  pair.per_pair_budget = 1;
  const auto budgeted = enumerate_paths(graph, 1, pair);
  // keys: (credentials, network_egress) capped to 1, (credentials, shell_execution) kept
  CHECK(budgeted.size() == 2);
}

TEST_CASE("bridge selection maximizes the weaker leg and splices validly") {
  std::vector<SkillNode> nodes = {
      make_node("source", {"credentials"}, {}, "credential vault reader"),
      make_node("sink", {}, {"network_egress"}, "credential vault relay"),
      make_node("sync", {"credentials"}, {"filesystem_write"}, "credential vault reader"),
      make_node("far", {"credentials"}, {"filesystem_write"}, "unrelated calendar digest"),
  };
  auto graph = build_graph(nodes, 0.30);
  const auto bridge = select_bridge(graph, "source", "sink", 0.30);
  REQUIRE(bridge.has_value());
  CHECK(bridge->id == "sync");

  bool found = false;
  for (const auto& path : enumerate_paths(graph, 2)) {
    if (path.node_ids == std::vector<std::string>{"source", "sync", "sink"}) found = true;
  }
  CHECK(found);
}

TEST_CASE("bridge ties break to the smaller id") {
  std::vector<SkillNode> nodes = {
      make_node("source", {"credentials"}, {}, "vault sync"),
      make_node("sink", {}, {"network_egress"}, "vault sync"),
      make_node("bridge-b", {"credentials"}, {"filesystem_write"}, "vault sync"),
      make_node("bridge-a", {"credentials"}, {"filesystem_write"}, "vault sync"),
  };
  auto graph = build_graph(nodes, 0.30);
  const auto bridge = select_bridge(graph, "source", "sink", 0.30);
  REQUIRE(bridge.has_value());
  CHECK(bridge->id == "bridge-a");
}

TEST_CASE("no qualifying bridge returns none") {
  std::vector<SkillNode> nodes = {
      make_node("source", {"credentials"}, {}, "vault sync"),
      make_node("sink", {}, {"network_egress"}, "vault sync"),
      make_node("w", {}, {}, "vault sync"),
  };
  auto graph = build_graph(nodes, 0.30);
  CHECK(!select_bridge(graph, "source", "sink", 0.30).has_value());
  CHECK_THROWS_AS(select_bridge(graph, "missing", "sink", 0.30), UsageError);
}

TEST_CASE("corpus jsonl round-trips and validates") {
  const auto nodes = synthetic_corpus(12, 9);
  const std::string text = corpus_to_jsonl(nodes);
  const auto back = corpus_from_jsonl(text);
  REQUIRE(back.size() == nodes.size());
  CHECK(corpus_to_jsonl(back) == text);

  CHECK_THROWS_AS(corpus_from_jsonl("{\"id\":\"a\"}\n{\"id\":\"a\"}\n"), ParseError);
  CHECK_THROWS_AS(corpus_from_jsonl("{\"id\":\"a\",\"source_tags\":[\"magic\"]}\n"), ParseError);
  CHECK_THROWS_AS(corpus_from_jsonl("not json\n"), ParseError);
}

TEST_CASE("synthetic corpus is deterministic per seed") {
  CHECK(corpus_to_jsonl(synthetic_corpus(25, 77)) == corpus_to_jsonl(synthetic_corpus(25, 77)));
  CHECK(corpus_to_jsonl(synthetic_corpus(25, 77)) != corpus_to_jsonl(synthetic_corpus(25, 78)));
}

TEST_CASE("edge export carries rule and similarity") {
  std::vector<SkillNode> nodes = {
      make_node("u", {"credentials"}, {}, "vault"),
      make_node("v", {}, {"network_egress"}, "vault"),
  };
  const std::string text = edges_to_jsonl(build_graph(nodes, 0.30));
  CHECK(text.find("\"rule_index\":4") != std::string::npos);
  CHECK(text.find("\"risk_type\":\"data_exfiltration\"") != std::string::npos);
}
