#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "support.hpp"

using namespace bamsdn;
using namespace testing_support;

namespace {

// All simple paths src->dst by DFS; returns the shortest, ties broken by
// the sequence of link ids.
std::vector<std::string> brute_path(const Topology& t, NodeIndex src, NodeIndex dst) {
  std::vector<std::vector<std::string>> found;
  std::vector<bool> seen(t.nodes().size());
  std::vector<std::string> cur;
  std::function<void(NodeIndex)> dfs = [&](NodeIndex at) {
    if (at == dst) {
      found.push_back(cur);
      return;
    }
    seen[at] = true;
    for (LinkIndex l = 0; l < t.links().size(); ++l) {
      const Link& k = t.link(l);
      NodeIndex a = k.a, b = k.b;
      NodeIndex next = a == at ? b : (b == at ? a : at);
      if (next == at || seen[next]) continue;
      cur.push_back(k.id);
      dfs(next);
      cur.pop_back();
    }
    seen[at] = false;
  };
  dfs(src);
  if (found.empty()) return {"<none>"};
  return *std::min_element(found.begin(), found.end(), [](const auto& x, const auto& y) {
    return x.size() != y.size() ? x.size() < y.size() : x < y;
  });
}

std::vector<std::string> ids(const Topology& t, const Path& p) {
  std::vector<std::string> out;
  for (LinkIndex l : p) out.push_back(t.link(l).id);
  return out;
}

}  // namespace

TEST(Path, ChainFromEachHost) {
  Topology t = chain_topology();
  NodeIndex dst = t.node_index("DST");
  EXPECT_EQ(ids(t, path_for(t, t.node_index("HS1"), dst)), (std::vector<std::string>{"L1", "L4", "L5", "L6"}));
  EXPECT_EQ(ids(t, path_for(t, t.node_index("HS2"), dst)), (std::vector<std::string>{"L2", "L5", "L6"}));
  EXPECT_EQ(ids(t, path_for(t, t.node_index("HS3"), dst)), (std::vector<std::string>{"L3", "L6"}));
}

TEST(Path, SameNodeIsEmpty) {
  Topology t = chain_topology();
  EXPECT_TRUE(path_for(t, 2, 2).empty());
}

TEST(Path, DisconnectedThrows) {
  Topology t = chain_topology();
  t.add_node("X", NodeKind::Host, "10.0.0.9");
  EXPECT_THROW(path_for(t, t.node_index("HS1"), t.node_index("X")), NoRoute);
}

TEST(Path, RingMatchesEnumeration) {
  Topology t;
  for (const char* n : {"A", "B", "C", "D"}) t.add_node(n, NodeKind::Switch);
  t.add_link("ab", "A", "B", Bandwidth::mbps(10));
  t.add_link("bc", "B", "C", Bandwidth::mbps(10));
  t.add_link("cd", "C", "D", Bandwidth::mbps(10));
  t.add_link("da", "D", "A", Bandwidth::mbps(10));
  for (NodeIndex s = 0; s < 4; ++s)
    for (NodeIndex d = 0; d < 4; ++d)
      if (s != d) EXPECT_EQ(ids(t, path_for(t, s, d)), brute_path(t, s, d)) << s << "->" << d;
}

TEST(Path, RandomGraphsMatchEnumeration) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 60; ++round) {
    Topology t;
    int n = 3 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) t.add_node("n" + std::to_string(i), NodeKind::Switch);
    int links = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng() % 3 == 0)
          t.add_link("k" + std::to_string(links++ * 7 % 11) + std::to_string(i) + std::to_string(j),
                     "n" + std::to_string(i), "n" + std::to_string(j), Bandwidth::mbps(1));
    for (NodeIndex s = 0; s < static_cast<NodeIndex>(n); ++s)
      for (NodeIndex d = 0; d < static_cast<NodeIndex>(n); ++d) {
        if (s == d) continue;
        auto expect = brute_path(t, s, d);
        if (expect == std::vector<std::string>{"<none>"}) {
          EXPECT_THROW(path_for(t, s, d), NoRoute);
        } else {
          EXPECT_EQ(ids(t, path_for(t, s, d)), expect);
        }
      }
  }
}

TEST(Topology, DuplicateAndUnknown) {
  Topology t = chain_topology();
  EXPECT_THROW(t.add_node("S1", NodeKind::Switch), Error);
  EXPECT_THROW(t.add_link("L9", "S1", "NOPE", Bandwidth::mbps(1)), Error);
  EXPECT_FALSE(t.find_link("L9"));
}

TEST(State, CommitGrowsEveryPathLink) {
  Topology t = chain_topology();
  NodeIndex src = t.node_index("HS1"), dst = t.node_index("DST");
  Path p = path_for(t, src, dst);
  NetworkState st(t, classes(), bc(BamModel::Mam, {250, 150, 100}));
  Lsp l;
  l.id = 1;
  l.demand = Bandwidth::mbps(5);
  l.path = p;
  l.source_host = src;
  l.dest_host = dst;
  st.commit(l, 0);
  for (LinkIndex k = 0; k < st.topology().links().size(); ++k) {
    bool on = std::find(p.begin(), p.end(), k) != p.end();
    EXPECT_EQ(st.alloc(k, 0), on ? Bandwidth::mbps(5) : Bandwidth::zero());
  }
  EXPECT_EQ(st.counters().admitted[0], 1u);
  EXPECT_EQ(st.lsp(1).state, LspState::Active);
}

TEST(State, CommitOnTopOfExisting) {
  NetworkState st(single_link(500), classes(), bc(BamModel::Mam, {250, 150, 100}));
  put(st, 1, 0, 245);
  put(st, 2, 0, 5);
  EXPECT_EQ(st.alloc(0, 0), Bandwidth::mbps(250));
  EXPECT_EQ(st.alloc(0, 1), Bandwidth::zero());
}

TEST(State, ReleaseIsInverseOfCommit) {
  NetworkState st(single_link(500), classes(), bc(BamModel::Rdm, {500, 250, 100}));
  put(st, 1, 0, 40);
  put(st, 2, 1, 10);
  auto before = std::vector<Bandwidth>{st.alloc(0, 0), st.alloc(0, 1), st.alloc(0, 2)};
  put(st, 3, 2, 20);
  st.release(3, ReleaseReason::Completed, 10);
  EXPECT_EQ((std::vector<Bandwidth>{st.alloc(0, 0), st.alloc(0, 1), st.alloc(0, 2)}), before);
  EXPECT_EQ(st.counters().completed[2], 1u);
  EXPECT_EQ(st.lsp(3).state, LspState::Completed);
  EXPECT_EQ(st.lsp(3).end_time, 10);
}

TEST(State, ReleaseLastLeavesZero) {
  NetworkState st(single_link(500), classes(), bc(BamModel::Mam, {250, 150, 100}));
  put(st, 1, 1, 10);
  st.release(1, ReleaseReason::Preempted, 5);
  EXPECT_EQ(st.total_alloc(0), Bandwidth::zero());
  EXPECT_EQ(st.counters().preempted[1], 1u);
  EXPECT_TRUE(st.active().empty());
}

TEST(State, Errors) {
  NetworkState st(single_link(50), classes(), bc(BamModel::Mam, {50, 50, 50}));
  EXPECT_THROW(st.release(9, ReleaseReason::Completed, 0), UnknownLsp);
  put(st, 1, 0, 30);
  st.release(1, ReleaseReason::Completed, 1);
  EXPECT_THROW(st.release(1, ReleaseReason::Completed, 2), NotActive);
  put(st, 2, 0, 30);
  EXPECT_THROW(put(st, 3, 1, 30), CapacityViolation);
  EXPECT_EQ(st.total_alloc(0), Bandwidth::mbps(30));
  EXPECT_THROW(st.lsp(3), UnknownLsp);
}

TEST(State, Transitions) {
  EXPECT_TRUE(is_valid_transition(LspState::Requested, LspState::Active));
  EXPECT_TRUE(is_valid_transition(LspState::Requested, LspState::Blocked));
  EXPECT_TRUE(is_valid_transition(LspState::Active, LspState::Preempted));
  EXPECT_TRUE(is_valid_transition(LspState::Active, LspState::Completed));
  EXPECT_FALSE(is_valid_transition(LspState::Blocked, LspState::Active));
  EXPECT_FALSE(is_valid_transition(LspState::Completed, LspState::Active));
  EXPECT_FALSE(is_valid_transition(LspState::Preempted, LspState::Active));
}

TEST(BcConfigCheck, Invalid) {
  Topology t = single_link(500);
  EXPECT_THROW(validate(bc(BamModel::Rdm, {250, 300, 100}), t, 3), InvalidBc);
  EXPECT_THROW(validate(bc(BamModel::Mam, {600, 0, 0}), t, 3), InvalidBc);
  EXPECT_THROW(validate(bc(BamModel::Mam, {100, 0}), t, 3), InvalidBc);
  EXPECT_NO_THROW(validate(bc(BamModel::Rdm, {500, 250, 100}), t, 3));
  EXPECT_NO_THROW(validate(bc(BamModel::Mam, {250, 300, 100}), t, 3));
}

TEST(BcConfigCheck, PercentResolvesAgainstCapacity) {
  EXPECT_EQ(BcValue::percent(5000).resolve(Bandwidth::mbps(500)), Bandwidth::mbps(250));
  EXPECT_EQ(BcValue::percent(10000).resolve(Bandwidth::mbps(40)), Bandwidth::mbps(40));
}

TEST(Units, MbpsRoundTrip) {
  EXPECT_EQ(parse_mbps("2.5"), Bandwidth::kbps(2500));
  EXPECT_EQ(format_mbps(Bandwidth::kbps(2500)), "2.5");
  EXPECT_EQ(format_mbps(Bandwidth::mbps(250)), "250");
  EXPECT_FALSE(parse_mbps("abc"));
  EXPECT_EQ(format_seconds(1500), "1.500");
}
