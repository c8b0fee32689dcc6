#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bamsdn/bam.hpp"
#include "bamsdn/core.hpp"
#include "bamsdn/fabric.hpp"

namespace bamsdn {

/// A flow arriving at the network edge and asking for an LSP.
struct LspRequest {
  MatchTuple match;
  Millis arrival_time = 0;
  Millis lifetime = 0;
};

/// Maps destination-port ranges to classes (first match wins).
struct ClassRule {
  std::uint16_t dst_port_lo = 0;
  std::uint16_t dst_port_hi = 0;
  ClassIndex class_index = 0;

  bool matches(const MatchTuple& m) const { return m.dst_port >= dst_port_lo && m.dst_port <= dst_port_hi; }
};

struct Route {
  NodeIndex source_host = 0;
  NodeIndex dest_host = 0;
  Path path;
  std::vector<NodeIndex> switches;  // in path order
};

struct Classification {
  ClassIndex class_index = 0;
  const Route* route = nullptr;
};

class ClassifierTable {
 public:
  void add_rule(ClassRule rule) { rules_.push_back(rule); }

  /// Registers the route for traffic from `src` to `dst` (hosts with IPs).
  void add_route(const Topology& topo, NodeIndex src, NodeIndex dst, Path path) {
    const Node& s = topo.node(src);
    const Node& d = topo.node(dst);
    auto sip = parse_ipv4(s.ip);
    auto dip = parse_ipv4(d.ip);
    if (!sip || !dip) throw ValidationError("route endpoints must be hosts with IPv4 addresses");
    Route r{src, dst, std::move(path), {}};
    std::vector<NodeIndex> nodes = topo.walk(src, r.path);
    if (nodes.back() != dst) throw NoRoute("route does not reach '" + d.id + "'");
    for (NodeIndex n : nodes)
      if (topo.node(n).kind == NodeKind::Switch) r.switches.push_back(n);
    if (r.switches.empty()) throw ValidationError("route " + s.id + "->" + d.id + " crosses no switch");
    routes_[{*sip, *dip}] = std::move(r);
  }

  Classification classify(const MatchTuple& m) const {
    const ClassRule* rule = nullptr;
    for (const ClassRule& r : rules_) {
      if (r.matches(m)) {
        rule = &r;
        break;
      }
    }
    if (!rule) throw ClassificationFailure("no class rule matches " + to_string(m));
    auto it = routes_.find({m.src_ip, m.dst_ip});
    if (it == routes_.end()) throw ClassificationFailure("no route for host pair of " + to_string(m));
    return {rule->class_index, &it->second};
  }

  const std::vector<ClassRule>& rules() const { return rules_; }
  const std::map<std::pair<Ipv4, Ipv4>, Route>& routes() const { return routes_; }

 private:
  std::vector<ClassRule> rules_;
  std::map<std::pair<Ipv4, Ipv4>, Route> routes_;
};

struct RequestOutcome {
  enum class Kind { Established, Blocked };

  Kind kind = Kind::Blocked;
  LspId lsp = 0;
  ClassIndex class_index = 0;
  std::vector<LspId> preempted;  // victims released to make room

  bool established() const { return kind == Kind::Established; }
};

/// The admission pipeline: classify a request, consult the BAM, and
/// execute the verdict on the network state and the switch fabric.
class Controller {
 public:
  Controller(NetworkState state, ClassifierTable table)
      : state_(std::move(state)), fabric_(state_.topology()), table_(std::move(table)) {}

  const NetworkState& state() const { return state_; }
  const Fabric& fabric() const { return fabric_; }
  const ClassifierTable& classifier() const { return table_; }

  RequestOutcome handle_request(const LspRequest& req) {
    if (req.lifetime <= 0) throw ClassificationFailure("request lifetime must be positive");

    // PacketIn: the ingress switch has no rule for this flow yet.
    Classification cls = table_.classify(req.match);
    const Route& route = *cls.route;
    const std::string& ingress = state_.topology().node(route.switches.front()).id;
    if (fabric_.lookup(ingress, req.match))
      throw Conflict("flow " + to_string(req.match) + " already has an installed LSP");

    Lsp lsp;
    lsp.id = next_id_++;
    lsp.class_index = cls.class_index;
    lsp.demand = state_.classes().at(cls.class_index).max_lsp_bandwidth;
    lsp.path = route.path;
    lsp.source_host = route.source_host;
    lsp.dest_host = route.dest_host;
    lsp.end_time = req.arrival_time + req.lifetime;

    AdmissionDecision decision = check(state_, lsp.path, lsp.class_index, lsp.demand);
    if (check(state_, lsp.path, lsp.class_index, lsp.demand) != decision)
      throw InvariantViolation("admission decision is not reproducible");

    RequestOutcome out;
    out.lsp = lsp.id;
    out.class_index = lsp.class_index;

    if (decision.verdict == Verdict::Deny) {
      state_.record_blocked(std::move(lsp), req.arrival_time);
      fabric_.send_drop(ingress, req.match, req.arrival_time);
      out.kind = RequestOutcome::Kind::Blocked;
      return out;
    }

    for (LspId victim : decision.victims) {
      state_.release(victim, ReleaseReason::Preempted, req.arrival_time);
      fabric_.remove_by_owner(victim);
      matches_.erase(victim);
    }
    out.preempted = decision.victims;
    if (!out.preempted.empty()) refresh_soft_drain(state_);

    matches_[lsp.id] = req.match;
    install_rules(lsp, route, req.match);
    state_.commit(std::move(lsp), req.arrival_time);
    out.kind = RequestOutcome::Kind::Established;
    return out;
  }

  void handle_expiry(LspId id, Millis now) {
    const Lsp& lsp = state_.lsp(id);
    if (lsp.state == LspState::Active && now < lsp.end_time)
      throw Error("LSP " + std::to_string(id) + " expired before its lifetime");
    state_.release(id, ReleaseReason::Completed, now);
    fabric_.remove_by_owner(id);
    matches_.erase(id);
    refresh_soft_drain(state_);
  }

  std::vector<LspId> apply_reconfig(const ReconfigEvent& event) {
    std::vector<LspId> victims = reconfigure(state_, event);
    for (LspId v : victims) {
      fabric_.remove_by_owner(v);
      matches_.erase(v);
    }
    return victims;
  }

  /// Match tuple an active LSP was installed under.
  const MatchTuple* match_of(LspId id) const {
    auto it = matches_.find(id);
    return it == matches_.end() ? nullptr : &it->second;
  }

 private:
  // FlowMod to every switch on the path, rate-limited to the LSP demand.
  void install_rules(const Lsp& lsp, const Route& route, const MatchTuple& match) {
    const Topology& topo = state_.topology();
    std::vector<NodeIndex> nodes = topo.walk(route.source_host, route.path);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const Node& n = topo.node(nodes[i]);
      if (n.kind != NodeKind::Switch) continue;
      FlowRule rule;
      rule.switch_id = n.id;
      rule.match = match;
      rule.action = RuleAction::Forward;
      rule.out_port = fabric_.port_of(n.id, route.path[i]);
      rule.rate_limit = lsp.demand;
      rule.owner = lsp.id;
      fabric_.install(rule);
    }
  }

  NetworkState state_;
  Fabric fabric_;
  ClassifierTable table_;
  std::map<LspId, MatchTuple> matches_;
  LspId next_id_ = 0;
};

}  // namespace bamsdn
