#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bamsdn/bam.hpp"
#include "bamsdn/controller.hpp"

namespace bamsdn {

/// Full rescan of the controller after an event. Any failure throws
/// InvariantViolation naming the broken property.
class InvariantChecker {
 public:
  void check(const Controller& ctl) {
    const NetworkState& st = ctl.state();
    check_registry(st);
    check_conservation(st);
    check_model(st);
    check_fabric(ctl);
    check_counters(st);
    ++checks_;
  }

  /// Preemptions triggered by a request must point strictly downwards under RDM.
  void check_preemption(const NetworkState& st, ClassIndex requester, const std::vector<LspId>& victims) const {
    if (st.bc_config().model == BamModel::Mam && !victims.empty())
      fail("MAM admission preempted LSPs");
    for (LspId v : victims)
      if (st.lsp(v).class_index >= requester)
        fail("class " + std::to_string(requester) + " preempted LSP " + std::to_string(v) + " of class " +
             std::to_string(st.lsp(v).class_index));
  }

  /// Takes the current over-allocation as the baseline a soft drain must
  /// shrink from.
  void start_soft_drain(const NetworkState& st) {
    drain_.clear();
    for (const Deficit& d : violations(st, st.bc_config())) drain_[{d.link, d.eligible}] = d.amount;
  }

  std::uint64_t checks() const { return checks_; }

 private:
  [[noreturn]] static void fail(const std::string& what) { throw InvariantViolation(what); }

  void check_registry(const NetworkState& st) const {
    for (LspId id : st.active())
      if (st.lsp(id).state != LspState::Active) fail("LSP " + std::to_string(id) + " listed active but is not");
    ClassCounters recount(st.class_count());
    for (const auto& [id, lsp] : st.lsps()) {
      switch (lsp.state) {
        case LspState::Active:
          if (!st.active().count(id)) fail("active LSP " + std::to_string(id) + " missing from active set");
          ++recount.admitted[lsp.class_index];
          break;
        case LspState::Preempted:
          ++recount.admitted[lsp.class_index];
          ++recount.preempted[lsp.class_index];
          break;
        case LspState::Completed:
          ++recount.admitted[lsp.class_index];
          ++recount.completed[lsp.class_index];
          break;
        case LspState::Blocked: ++recount.blocked[lsp.class_index]; break;
        case LspState::Requested: fail("LSP " + std::to_string(id) + " left in Requested state");
      }
    }
    if (recount != st.counters()) fail("counters disagree with the LSP registry");
  }

  static void check_conservation(const NetworkState& st) {
    const Topology& topo = st.topology();
    std::vector<std::vector<Bandwidth>> expect(topo.links().size(), std::vector<Bandwidth>(st.class_count()));
    for (LspId id : st.active()) {
      const Lsp& lsp = st.lsp(id);
      for (LinkIndex l : lsp.path) expect[l][lsp.class_index] += lsp.demand;
    }
    for (LinkIndex l = 0; l < topo.links().size(); ++l) {
      Bandwidth total;
      for (ClassIndex c = 0; c < st.class_count(); ++c) {
        if (st.alloc(l, c) != expect[l][c])
          fail("alloc on link '" + topo.link(l).id + "' class " + std::to_string(c) + " is " +
               format_mbps(st.alloc(l, c)) + ", active LSPs sum to " + format_mbps(expect[l][c]));
        if (st.alloc(l, c) < Bandwidth::zero()) fail("negative allocation");
        total += st.alloc(l, c);
      }
      if (total > topo.link(l).capacity) fail("capacity exceeded on link '" + topo.link(l).id + "'");
    }
  }

  void check_model(const NetworkState& st) {
    std::vector<Deficit> over = violations(st, st.bc_config());
    if (!st.pending_soft_bc()) {
      if (!over.empty())
        fail(std::string(to_string(st.bc_config().model)) + " constraint exceeded on link '" +
             st.topology().link(over.front().link).id + "'");
      drain_.clear();
      return;
    }
    // A soft drain may leave groups over their limit, but only groups that
    // were over at reconfiguration time, and never by more than before.
    std::map<std::pair<LinkIndex, ClassMask>, Bandwidth> now;
    for (const Deficit& d : over) {
      auto key = std::make_pair(d.link, d.eligible);
      auto it = drain_.find(key);
      if (it == drain_.end()) fail("soft drain: new over-allocation on link '" + st.topology().link(d.link).id + "'");
      if (d.amount > it->second) fail("soft drain: over-allocation grew on link '" + st.topology().link(d.link).id + "'");
      now[key] = d.amount;
    }
    drain_ = std::move(now);
  }

  static void check_fabric(const Controller& ctl) {
    const NetworkState& st = ctl.state();
    const Fabric& fab = ctl.fabric();
    const Topology& topo = st.topology();
    std::size_t expected = 0;
    for (LspId id : st.active()) {
      const Lsp& lsp = st.lsp(id);
      const MatchTuple* m = ctl.match_of(id);
      if (!m) fail("active LSP " + std::to_string(id) + " has no installed match");
      std::vector<NodeIndex> nodes = topo.walk(lsp.source_host, lsp.path);
      for (NodeIndex n : nodes) {
        if (topo.node(n).kind != NodeKind::Switch) continue;
        ++expected;
        auto rule = fab.lookup(topo.node(n).id, *m);
        if (!rule || rule->owner != id || rule->action != RuleAction::Forward || rule->rate_limit != lsp.demand)
          fail("switch '" + topo.node(n).id + "' lacks the rule for LSP " + std::to_string(id));
      }
    }
    if (fab.rule_count() != expected)
      fail("fabric holds " + std::to_string(fab.rule_count()) + " rules, active LSPs need " +
           std::to_string(expected));
  }

  void check_counters(const NetworkState& st) {
    const ClassCounters& c = st.counters();
    if (prev_) {
      for (ClassIndex i = 0; i < st.class_count(); ++i) {
        if (c.admitted[i] < prev_->admitted[i] || c.blocked[i] < prev_->blocked[i] ||
            c.preempted[i] < prev_->preempted[i] || c.completed[i] < prev_->completed[i])
          fail("counter decreased for class " + std::to_string(i));
      }
    }
    prev_ = c;
  }

  std::optional<ClassCounters> prev_;
  std::map<std::pair<LinkIndex, ClassMask>, Bandwidth> drain_;
  std::uint64_t checks_ = 0;
};

}  // namespace bamsdn
