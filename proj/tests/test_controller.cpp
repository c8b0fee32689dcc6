#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace bamsdn;
using namespace testing_support;

namespace {

Controller make(BcConfig cfg) {
  Topology t = chain_topology();
  ClassifierTable table;
  table.add_rule({5000, 5999, 0});
  table.add_rule({6000, 6999, 1});
  table.add_rule({7000, 7999, 2});
  NodeIndex dst = t.node_index("DST");
  for (const char* h : {"HS1", "HS2", "HS3"}) {
    NodeIndex s = t.node_index(h);
    table.add_route(t, s, dst, path_for(t, s, dst));
  }
  return Controller(NetworkState(t, classes(), std::move(cfg)), std::move(table));
}

std::uint16_t port_for(ClassIndex c) { return static_cast<std::uint16_t>(5000 + 1000 * c); }

LspRequest req(const char* src_ip, ClassIndex c, std::uint16_t sport, Millis at = 0, Millis life = seconds(300)) {
  return {{*parse_ipv4(src_ip), *parse_ipv4("10.0.0.100"), sport, port_for(c), 6}, at, life};
}

// Switches each active LSP crosses, counted from the topology.
std::size_t expected_rules(const Controller& ctl) {
  std::size_t n = 0;
  const Topology& t = ctl.state().topology();
  for (LspId id : ctl.state().active())
    for (NodeIndex v : t.walk(ctl.state().lsp(id).source_host, ctl.state().lsp(id).path))
      n += t.node(v).kind == NodeKind::Switch;
  return n;
}

}  // namespace

TEST(Controller, FirstRequestInstallsEverySwitch) {
  Controller ctl = make(bc(BamModel::Mam, {250, 150, 100}));
  InvariantChecker inv;
  auto out = ctl.handle_request(req("10.0.0.1", 0, 1024));
  ASSERT_TRUE(out.established());
  EXPECT_TRUE(out.preempted.empty());
  EXPECT_EQ(ctl.fabric().rule_count(), 3u);
  const MatchTuple* m = ctl.match_of(out.lsp);
  ASSERT_TRUE(m);
  for (const char* sw : {"S1", "S2", "S3"}) {
    auto r = ctl.fabric().lookup(sw, *m);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->rate_limit, Bandwidth::mbps(5));
  }
  // Out ports follow the path: S1->L4, S2->L5, S3->L6.
  EXPECT_EQ(ctl.fabric().lookup("S3", *m)->out_port, ctl.fabric().port_of("S3", ctl.state().topology().link_index("L6")));
  EXPECT_NO_THROW(inv.check(ctl));
}

TEST(Controller, MamBlockSendsDropAtIngress) {
  Controller ctl = make(bc(BamModel::Mam, {250, 150, 100}));
  for (std::uint16_t i = 0; i < 50; ++i) ASSERT_TRUE(ctl.handle_request(req("10.0.0.3", 0, 1024 + i)).established());
  auto out = ctl.handle_request(req("10.0.0.3", 0, 2000, 7));
  EXPECT_FALSE(out.established());
  ASSERT_EQ(ctl.fabric().drops().size(), 1u);
  EXPECT_EQ(ctl.fabric().drops()[0].switch_id, "S3");
  EXPECT_EQ(ctl.state().lsp(out.lsp).state, LspState::Blocked);
  EXPECT_EQ(ctl.state().counters().blocked[0], 1u);
  EXPECT_EQ(ctl.fabric().rule_count(), expected_rules(ctl));
}

TEST(Controller, RdmPreemptionRemovesVictimRules) {
  Controller ctl = make(bc(BamModel::Rdm, {500, 250, 100}));
  InvariantChecker inv;
  std::vector<LspId> ids;
  for (std::uint16_t i = 0; i < 100; ++i) ids.push_back(ctl.handle_request(req("10.0.0.2", 0, 1024 + i)).lsp);
  EXPECT_EQ(ctl.fabric().rule_count(), 200u);
  auto out = ctl.handle_request(req("10.0.0.2", 1, 3000));
  ASSERT_TRUE(out.established());
  std::vector<LspId> v = out.preempted;
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<LspId>{ids[98], ids[99]}));
  for (LspId x : v) {
    EXPECT_EQ(ctl.state().lsp(x).state, LspState::Preempted);
    EXPECT_FALSE(ctl.match_of(x));
  }
  EXPECT_EQ(ctl.fabric().rule_count(), expected_rules(ctl));
  EXPECT_EQ(ctl.fabric().rule_count(), 98u * 2u + 2u);
  EXPECT_NO_THROW(inv.check(ctl));
}

TEST(Controller, ExpiryRemovesRulesAndFreesHeadroom) {
  Controller ctl = make(bc(BamModel::Mam, {250, 150, 100}));
  std::vector<LspId> ids;
  for (std::uint16_t i = 0; i < 50; ++i) ids.push_back(ctl.handle_request(req("10.0.0.3", 0, 1024 + i)).lsp);
  EXPECT_FALSE(ctl.handle_request(req("10.0.0.3", 0, 2000)).established());
  ctl.handle_expiry(ids[0], seconds(300));
  EXPECT_EQ(ctl.state().lsp(ids[0]).state, LspState::Completed);
  EXPECT_EQ(ctl.fabric().rule_count(), 49u);
  EXPECT_TRUE(ctl.handle_request(req("10.0.0.3", 0, 2001, seconds(300))).established());
}

TEST(Controller, EarlyExpiryRejected) {
  Controller ctl = make(bc(BamModel::Mam, {250, 150, 100}));
  LspId id = ctl.handle_request(req("10.0.0.1", 0, 1024, 0, seconds(10))).lsp;
  EXPECT_THROW(ctl.handle_expiry(id, seconds(5)), Error);
  EXPECT_THROW(ctl.handle_expiry(999, seconds(5)), UnknownLsp);
}

TEST(Controller, SameTimeExpiriesCommute) {
  auto run = [](bool reversed) {
    Controller ctl = make(bc(BamModel::Mam, {250, 150, 100}));
    LspId a = ctl.handle_request(req("10.0.0.1", 0, 1024)).lsp;
    LspId b = ctl.handle_request(req("10.0.0.2", 1, 1025)).lsp;
    ctl.handle_request(req("10.0.0.3", 2, 1026));
    if (reversed) std::swap(a, b);
    ctl.handle_expiry(a, seconds(300));
    ctl.handle_expiry(b, seconds(300));
    std::vector<Bandwidth> out;
    for (LinkIndex l = 0; l < 6; ++l)
      for (ClassIndex c = 0; c < 3; ++c) out.push_back(ctl.state().alloc(l, c));
    return std::pair{out, ctl.fabric().rules()};
  };
  EXPECT_EQ(run(false), run(true));
}

TEST(Controller, DuplicateFlowConflicts) {
  Controller ctl = make(bc(BamModel::Mam, {250, 150, 100}));
  ctl.handle_request(req("10.0.0.1", 0, 1024));
  EXPECT_THROW(ctl.handle_request(req("10.0.0.1", 0, 1024)), Conflict);
}

TEST(Controller, ClassificationFailures) {
  Controller ctl = make(bc(BamModel::Mam, {250, 150, 100}));
  LspRequest r = req("10.0.0.1", 0, 1024);
  r.match.dst_port = 80;
  EXPECT_THROW(ctl.handle_request(r), ClassificationFailure);
  EXPECT_THROW(ctl.handle_request(req("10.9.9.9", 0, 1024)), ClassificationFailure);
  EXPECT_THROW(ctl.handle_request(req("10.0.0.1", 0, 1024, 0, 0)), ClassificationFailure);
}

TEST(Controller, HardReconfigDropsVictimRules) {
  Controller ctl = make(bc(BamModel::Mam, {300, 50, 100}));
  for (std::uint16_t i = 0; i < 60; ++i) ASSERT_TRUE(ctl.handle_request(req("10.0.0.1", 0, 1024 + i)).established());
  EXPECT_EQ(ctl.fabric().rule_count(), 180u);
  auto v = ctl.apply_reconfig({bc(BamModel::Mam, {250, 150, 100}), ReconfigMode::Hard, 5});
  EXPECT_EQ(v.size(), 10u);
  EXPECT_EQ(ctl.fabric().rule_count(), 180u - 10u * 3u);
  EXPECT_EQ(ctl.fabric().rule_count(), expected_rules(ctl));
}

TEST(Controller, SoftReconfigKeepsRules) {
  Controller ctl = make(bc(BamModel::Mam, {300, 50, 100}));
  InvariantChecker inv;
  for (std::uint16_t i = 0; i < 60; ++i) ctl.handle_request(req("10.0.0.3", 0, 1024 + i));
  EXPECT_TRUE(ctl.apply_reconfig({bc(BamModel::Mam, {250, 150, 100}), ReconfigMode::Soft, 5}).empty());
  inv.start_soft_drain(ctl.state());
  EXPECT_EQ(ctl.fabric().rule_count(), 60u);
  EXPECT_NO_THROW(inv.check(ctl));
  EXPECT_FALSE(ctl.handle_request(req("10.0.0.3", 0, 3000, 6)).established());
  EXPECT_TRUE(ctl.handle_request(req("10.0.0.3", 1, 3001, 6)).established());
  EXPECT_NO_THROW(inv.check(ctl));
}

TEST(Invariants, DetectsBrokenSoftDrain) {
  Controller ctl = make(bc(BamModel::Mam, {300, 50, 100}));
  InvariantChecker inv;
  for (std::uint16_t i = 0; i < 60; ++i) ctl.handle_request(req("10.0.0.3", 0, 1024 + i));
  ctl.apply_reconfig({bc(BamModel::Mam, {250, 150, 100}), ReconfigMode::Soft, 5});
  // Without a drain baseline the over-allocation counts as a violation.
  EXPECT_THROW(inv.check(ctl), InvariantViolation);
}

TEST(Invariants, PreemptionDirection) {
  Controller ctl = make(bc(BamModel::Rdm, {500, 250, 100}));
  InvariantChecker inv;
  LspId a = ctl.handle_request(req("10.0.0.1", 1, 1024)).lsp;
  EXPECT_THROW(inv.check_preemption(ctl.state(), 1, {a}), InvariantViolation);
  EXPECT_NO_THROW(inv.check_preemption(ctl.state(), 2, {a}));
}
