#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bamsdn/error.hpp"
#include "bamsdn/units.hpp"

namespace bamsdn {

using ClassIndex = std::size_t;
using NodeIndex = std::size_t;
using LinkIndex = std::size_t;
using LspId = std::uint64_t;

/// Ordered list of links from source to destination.
using Path = std::vector<LinkIndex>;

struct TrafficClass {
  ClassIndex index = 0;
  Bandwidth max_lsp_bandwidth;
};

enum class BamModel { Mam, Rdm };

inline std::string_view to_string(BamModel m) { return m == BamModel::Mam ? "MAM" : "RDM"; }

/// One bandwidth constraint, either absolute or a share of the governed
/// link's capacity (basis points, 10000 = 100 %).
struct BcValue {
  enum class Unit { Mbps, Percent };

  Unit unit = Unit::Mbps;
  Bandwidth amount;
  std::int64_t basis_points = 0;

  static BcValue absolute(Bandwidth b) { return BcValue{Unit::Mbps, b, 0}; }
  static BcValue percent(std::int64_t bp) { return BcValue{Unit::Percent, {}, bp}; }

  Bandwidth resolve(Bandwidth capacity) const {
    if (unit == Unit::Mbps) return amount;
    return Bandwidth::kbps(capacity.as_kbps() * basis_points / 10000);
  }

  friend bool operator==(const BcValue&, const BcValue&) = default;
};

enum class NodeKind { Host, Switch };

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Switch;
  std::string ip;  // hosts only
};

struct Link {
  std::string id;
  NodeIndex a = 0;
  NodeIndex b = 0;
  Bandwidth capacity;
  std::vector<Bandwidth> alloc;  // per class index
};

class Topology {
 public:
  NodeIndex add_node(std::string id, NodeKind kind, std::string ip = {}) {
    if (find_node(id)) throw ValidationError("duplicate node '" + id + "'");
    nodes_.push_back(Node{std::move(id), kind, std::move(ip)});
    incident_.emplace_back();
    return nodes_.size() - 1;
  }

  LinkIndex add_link(std::string id, std::string_view a, std::string_view b, Bandwidth capacity) {
    if (find_link(id)) throw ValidationError("duplicate link '" + id + "'");
    if (capacity <= Bandwidth::zero()) throw ValidationError("link '" + id + "' needs positive capacity");
    NodeIndex ia = node_index(a);
    NodeIndex ib = node_index(b);
    if (ia == ib) throw ValidationError("link '" + id + "' is a self-loop");
    links_.push_back(Link{std::move(id), ia, ib, capacity, {}});
    incident_[ia].push_back(links_.size() - 1);
    incident_[ib].push_back(links_.size() - 1);
    return links_.size() - 1;
  }

  std::optional<NodeIndex> find_node(std::string_view id) const {
    for (NodeIndex i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].id == id) return i;
    return std::nullopt;
  }

  NodeIndex node_index(std::string_view id) const {
    if (auto i = find_node(id)) return *i;
    throw ValidationError("unknown node '" + std::string(id) + "'");
  }

  std::optional<LinkIndex> find_link(std::string_view id) const {
    for (LinkIndex i = 0; i < links_.size(); ++i)
      if (links_[i].id == id) return i;
    return std::nullopt;
  }

  LinkIndex link_index(std::string_view id) const {
    if (auto i = find_link(id)) return *i;
    throw ValidationError("unknown link '" + std::string(id) + "'");
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  const Link& link(LinkIndex i) const { return links_.at(i); }
  Link& link_mut(LinkIndex i) { return links_.at(i); }
  const std::vector<LinkIndex>& incident(NodeIndex n) const { return incident_.at(n); }

  NodeIndex other_end(LinkIndex l, NodeIndex from) const {
    const Link& lk = links_.at(l);
    return lk.a == from ? lk.b : lk.a;
  }

  /// Nodes visited by `path` starting at `src`, including both endpoints.
  /// Throws NoRoute when the links do not chain.
  std::vector<NodeIndex> walk(NodeIndex src, const Path& path) const {
    std::vector<NodeIndex> out{src};
    NodeIndex at = src;
    for (LinkIndex l : path) {
      const Link& lk = links_.at(l);
      if (lk.a != at && lk.b != at) throw NoRoute("path is not connected at link '" + lk.id + "'");
      at = other_end(l, at);
      out.push_back(at);
    }
    return out;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<LinkIndex>> incident_;
};

/// Minimum-hop route; among equal-length routes the lexicographically
/// smallest sequence of link ids wins.
inline Path path_for(const Topology& topo, NodeIndex src, NodeIndex dst) {
  if (src >= topo.nodes().size() || dst >= topo.nodes().size()) throw NoRoute("unknown endpoint");
  if (src == dst) return {};

  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(topo.nodes().size(), kUnreached);
  std::deque<NodeIndex> queue{dst};
  dist[dst] = 0;
  while (!queue.empty()) {
    NodeIndex n = queue.front();
    queue.pop_front();
    for (LinkIndex l : topo.incident(n)) {
      NodeIndex m = topo.other_end(l, n);
      if (dist[m] == kUnreached) {
        dist[m] = dist[n] + 1;
        queue.push_back(m);
      }
    }
  }
  if (dist[src] == kUnreached)
    throw NoRoute("no route from '" + topo.node(src).id + "' to '" + topo.node(dst).id + "'");

  // Greedy descent picks the smallest id at each hop, which yields the
  // lexicographically smallest id sequence among shortest paths.
  Path path;
  NodeIndex at = src;
  while (at != dst) {
    std::optional<LinkIndex> best;
    for (LinkIndex l : topo.incident(at)) {
      if (dist[topo.other_end(l, at)] + 1 != dist[at]) continue;
      if (!best || topo.link(l).id < topo.link(*best).id) best = l;
    }
    path.push_back(*best);
    at = topo.other_end(*best, at);
  }
  return path;
}

enum class LspState { Requested, Active, Blocked, Preempted, Completed };

inline std::string_view to_string(LspState s) {
  switch (s) {
    case LspState::Requested: return "requested";
    case LspState::Active: return "active";
    case LspState::Blocked: return "blocked";
    case LspState::Preempted: return "preempted";
    case LspState::Completed: return "completed";
  }
  return "?";
}

inline bool is_valid_transition(LspState from, LspState to) {
  switch (from) {
    case LspState::Requested: return to == LspState::Active || to == LspState::Blocked;
    case LspState::Active: return to == LspState::Preempted || to == LspState::Completed;
    default: return false;
  }
}

struct Lsp {
  LspId id = 0;
  ClassIndex class_index = 0;
  Bandwidth demand;
  Path path;
  LspState state = LspState::Requested;
  Millis admit_time = 0;
  Millis end_time = 0;  // planned expiry while active, actual end afterwards
  NodeIndex source_host = 0;
  NodeIndex dest_host = 0;
  std::uint64_t admit_seq = 0;  // commit order, used for newest-first ordering
};

enum class ReleaseReason { Completed, Preempted };

struct ClassCounters {
  std::vector<std::uint64_t> admitted;
  std::vector<std::uint64_t> blocked;
  std::vector<std::uint64_t> preempted;
  std::vector<std::uint64_t> completed;

  explicit ClassCounters(std::size_t n = 0) : admitted(n), blocked(n), preempted(n), completed(n) {}
  friend bool operator==(const ClassCounters&, const ClassCounters&) = default;
};

struct BcConfig {
  BamModel model = BamModel::Mam;
  std::vector<BcValue> bc;              // indexed by constraint index b
  std::vector<LinkIndex> applies_to;    // empty: every link

  bool governs(LinkIndex l) const {
    return applies_to.empty() ||
           std::find(applies_to.begin(), applies_to.end(), l) != applies_to.end();
  }
  Bandwidth limit(std::size_t b, const Link& link) const { return bc.at(b).resolve(link.capacity); }

  friend bool operator==(const BcConfig&, const BcConfig&) = default;
};

/// Checks a configuration against the governed links; throws InvalidBc.
inline void validate(const BcConfig& cfg, const Topology& topo, std::size_t class_count) {
  if (cfg.bc.size() != class_count)
    throw InvalidBc("expected " + std::to_string(class_count) + " constraints, got " +
                    std::to_string(cfg.bc.size()));
  for (LinkIndex l : cfg.applies_to)
    if (l >= topo.links().size()) throw InvalidBc("constraint set names an unknown link");
  for (LinkIndex l = 0; l < topo.links().size(); ++l) {
    if (!cfg.governs(l)) continue;
    const Link& link = topo.link(l);
    for (std::size_t b = 0; b < cfg.bc.size(); ++b) {
      Bandwidth v = cfg.limit(b, link);
      if (v < Bandwidth::zero() || v > link.capacity)
        throw InvalidBc("BC" + std::to_string(b) + "=" + format_mbps(v) + " outside [0, capacity] on link '" +
                        link.id + "'");
      if (cfg.model == BamModel::Rdm && b > 0 && v > cfg.limit(b - 1, link))
        throw InvalidBc("RDM constraints must be non-increasing (BC" + std::to_string(b) + " > BC" +
                        std::to_string(b - 1) + ")");
    }
  }
}

/// Bookkeeping of per-link per-class allocation and the LSP registry.
class NetworkState {
 public:
  NetworkState(Topology topo, std::vector<TrafficClass> classes, BcConfig bc)
      : topo_(std::move(topo)), classes_(std::move(classes)), bc_(std::move(bc)), counters_(classes_.size()) {
    if (classes_.empty()) throw ValidationError("at least one traffic class is required");
    if (classes_.size() > 64) throw ValidationError("at most 64 traffic classes are supported");
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (classes_[i].index != i) throw ValidationError("class indices must be 0..N-1 in order");
      if (classes_[i].max_lsp_bandwidth <= Bandwidth::zero())
        throw ValidationError("class " + std::to_string(i) + " needs a positive LSP bandwidth");
    }
    for (LinkIndex l = 0; l < topo_.links().size(); ++l)
      topo_.link_mut(l).alloc.assign(classes_.size(), Bandwidth::zero());
    validate(bc_, topo_, classes_.size());
  }

  const Topology& topology() const { return topo_; }
  const std::vector<TrafficClass>& classes() const { return classes_; }
  std::size_t class_count() const { return classes_.size(); }

  const BcConfig& bc_config() const { return bc_; }
  void set_bc_config(BcConfig cfg) {
    validate(cfg, topo_, classes_.size());
    bc_ = std::move(cfg);
  }

  /// Set while a soft reconfiguration waits for over-allocated classes to drain.
  const std::optional<BcConfig>& pending_soft_bc() const { return pending_soft_; }
  void set_pending_soft_bc(std::optional<BcConfig> cfg) { pending_soft_ = std::move(cfg); }

  const ClassCounters& counters() const { return counters_; }

  Bandwidth alloc(LinkIndex l, ClassIndex c) const { return topo_.link(l).alloc.at(c); }
  Bandwidth total_alloc(LinkIndex l) const {
    Bandwidth sum;
    for (Bandwidth b : topo_.link(l).alloc) sum += b;
    return sum;
  }

  const std::map<LspId, Lsp>& lsps() const { return lsps_; }
  const std::set<LspId>& active() const { return active_; }

  const Lsp* find(LspId id) const {
    auto it = lsps_.find(id);
    return it == lsps_.end() ? nullptr : &it->second;
  }
  const Lsp& lsp(LspId id) const {
    if (const Lsp* p = find(id)) return *p;
    throw UnknownLsp("unknown LSP " + std::to_string(id));
  }

  /// Activates a granted LSP: alloc grows by its demand on every path link.
  /// `end_time` is taken as the planned expiry.
  void commit(Lsp lsp, Millis now) {
    if (lsp.state != LspState::Requested) throw Error("commit expects a requested LSP");
    if (lsps_.count(lsp.id)) throw Error("LSP " + std::to_string(lsp.id) + " already registered");
    check_lsp_shape(lsp);
    for (LinkIndex l : lsp.path) {
      if (total_alloc(l) + lsp.demand > topo_.link(l).capacity)
        throw CapacityViolation("committing LSP " + std::to_string(lsp.id) + " overflows link '" +
                                topo_.link(l).id + "'");
    }
    for (LinkIndex l : lsp.path) topo_.link_mut(l).alloc[lsp.class_index] += lsp.demand;
    lsp.state = LspState::Active;
    lsp.admit_time = now;
    lsp.admit_seq = ++admit_seq_;
    ++counters_.admitted[lsp.class_index];
    active_.insert(lsp.id);
    lsps_.emplace(lsp.id, std::move(lsp));
  }

  void release(LspId id, ReleaseReason reason, Millis now) {
    auto it = lsps_.find(id);
    if (it == lsps_.end()) throw UnknownLsp("unknown LSP " + std::to_string(id));
    Lsp& lsp = it->second;
    if (lsp.state != LspState::Active)
      throw NotActive("LSP " + std::to_string(id) + " is " + std::string(to_string(lsp.state)));
    for (LinkIndex l : lsp.path) topo_.link_mut(l).alloc[lsp.class_index] -= lsp.demand;
    active_.erase(id);
    lsp.end_time = now;
    if (reason == ReleaseReason::Preempted) {
      lsp.state = LspState::Preempted;
      ++counters_.preempted[lsp.class_index];
    } else {
      lsp.state = LspState::Completed;
      ++counters_.completed[lsp.class_index];
    }
  }

  /// Records a denied request in the registry and the blocked counter.
  void record_blocked(Lsp lsp, Millis now) {
    if (lsp.state != LspState::Requested) throw Error("only requested LSPs can be blocked");
    if (lsps_.count(lsp.id)) throw Error("LSP " + std::to_string(lsp.id) + " already registered");
    if (lsp.class_index >= classes_.size()) throw Error("unknown class");
    lsp.state = LspState::Blocked;
    lsp.admit_time = now;
    lsp.end_time = now;
    ++counters_.blocked[lsp.class_index];
    lsps_.emplace(lsp.id, std::move(lsp));
  }

 private:
  void check_lsp_shape(const Lsp& lsp) const {
    if (lsp.class_index >= classes_.size()) throw Error("unknown class " + std::to_string(lsp.class_index));
    if (lsp.demand <= Bandwidth::zero()) throw Error("LSP demand must be positive");
    for (LinkIndex l : lsp.path)
      if (l >= topo_.links().size()) throw Error("LSP path names an unknown link");
    if (topo_.walk(lsp.source_host, lsp.path).back() != lsp.dest_host)
      throw NoRoute("LSP path does not reach its destination");
  }

  Topology topo_;
  std::vector<TrafficClass> classes_;
  BcConfig bc_;
  std::optional<BcConfig> pending_soft_;
  ClassCounters counters_;
  std::map<LspId, Lsp> lsps_;
  std::set<LspId> active_;
  std::uint64_t admit_seq_ = 0;
};

inline Path path_for(const NetworkState& state, NodeIndex src, NodeIndex dst) {
  return path_for(state.topology(), src, dst);
}

}  // namespace bamsdn
