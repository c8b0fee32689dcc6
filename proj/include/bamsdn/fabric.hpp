#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bamsdn/core.hpp"

namespace bamsdn {

using Ipv4 = std::uint32_t;

inline std::optional<Ipv4> parse_ipv4(std::string_view s) {
  Ipv4 out = 0;
  for (int part = 0; part < 4; ++part) {
    auto dot = s.find('.');
    std::string_view tok = part == 3 ? s : s.substr(0, dot);
    if (part < 3 && dot == std::string_view::npos) return std::nullopt;
    unsigned v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size() || tok.empty() || v > 255) return std::nullopt;
    out = (out << 8) | v;
    if (part < 3) s.remove_prefix(dot + 1);
  }
  return out;
}

inline std::string format_ipv4(Ipv4 ip) {
  return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 0xff) + "." +
         std::to_string((ip >> 8) & 0xff) + "." + std::to_string(ip & 0xff);
}

/// The header fields a flow rule matches on.
struct MatchTuple {
  Ipv4 src_ip = 0;
  Ipv4 dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 6;

  friend auto operator<=>(const MatchTuple&, const MatchTuple&) = default;
};

inline std::string to_string(const MatchTuple& m) {
  return format_ipv4(m.src_ip) + ":" + std::to_string(m.src_port) + "->" + format_ipv4(m.dst_ip) + ":" +
         std::to_string(m.dst_port) + "/" + std::to_string(m.protocol);
}

enum class RuleAction { Forward, Drop };

struct FlowRule {
  std::string switch_id;
  MatchTuple match;
  RuleAction action = RuleAction::Forward;
  std::uint16_t out_port = 0;  // Forward only
  Bandwidth rate_limit;
  std::optional<LspId> owner;

  friend bool operator==(const FlowRule&, const FlowRule&) = default;
};

/// A deny directive sent to an ingress switch for a blocked flow. Recorded
/// as an event; it never occupies a table entry.
struct DropDirective {
  std::string switch_id;
  MatchTuple match;
  Millis time = 0;
};

/// In-process stand-in for the OpenFlow switch plane: one flow table per
/// switch, ports numbered from 1 in the order links were declared.
class Fabric {
 public:
  Fabric() = default;

  explicit Fabric(const Topology& topo) {
    for (NodeIndex n = 0; n < topo.nodes().size(); ++n) {
      const Node& node = topo.node(n);
      if (node.kind != NodeKind::Switch) continue;
      Switch& sw = switches_[node.id];
      std::uint16_t next = 1;
      for (LinkIndex l : topo.incident(n)) sw.ports[l] = next++;
    }
  }

  bool has_switch(const std::string& id) const { return switches_.count(id) != 0; }

  std::uint16_t port_of(const std::string& switch_id, LinkIndex link) const {
    const Switch& sw = get(switch_id);
    auto it = sw.ports.find(link);
    if (it == sw.ports.end()) throw Error("switch '" + switch_id + "' has no port on that link");
    return it->second;
  }

  void install(const FlowRule& rule) {
    Switch& sw = get(rule.switch_id);
    if (rule.action == RuleAction::Forward && !rule.owner)
      throw Error("forward rules must carry an owner LSP");
    if (sw.table.count(rule.match))
      throw Conflict("switch '" + rule.switch_id + "' already has a rule for " + to_string(rule.match));
    sw.table.emplace(rule.match, rule);
    if (rule.owner) owned_[*rule.owner].emplace_back(rule.switch_id, rule.match);
  }

  /// Removes every rule owned by `lsp`; returns how many were removed.
  std::size_t remove_by_owner(LspId lsp) {
    auto it = owned_.find(lsp);
    if (it == owned_.end()) return 0;
    std::size_t n = 0;
    for (const auto& [sw, match] : it->second) n += switches_.at(sw).table.erase(match);
    owned_.erase(it);
    return n;
  }

  std::optional<FlowRule> lookup(const std::string& switch_id, const MatchTuple& match) const {
    const Switch& sw = get(switch_id);
    auto it = sw.table.find(match);
    if (it == sw.table.end()) return std::nullopt;
    return it->second;
  }

  void send_drop(const std::string& switch_id, const MatchTuple& match, Millis now) {
    get(switch_id);
    drops_.push_back({switch_id, match, now});
  }
  const std::vector<DropDirective>& drops() const { return drops_; }

  std::size_t table_size(const std::string& switch_id) const { return get(switch_id).table.size(); }

  std::size_t rule_count() const {
    std::size_t n = 0;
    for (const auto& [id, sw] : switches_) n += sw.table.size();
    return n;
  }

  /// All installed rules, ordered by switch id then match.
  std::vector<FlowRule> rules() const {
    std::vector<FlowRule> out;
    for (const auto& [id, sw] : switches_)
      for (const auto& [m, r] : sw.table) out.push_back(r);
    return out;
  }

  /// Line-oriented dump: switch, match, action, rate (Mbps), owner.
  void dump(std::ostream& os) const {
    for (const FlowRule& r : rules()) {
      os << r.switch_id << '\t' << to_string(r.match) << '\t'
         << (r.action == RuleAction::Forward ? "forward:" + std::to_string(r.out_port) : std::string("drop")) << '\t'
         << format_mbps(r.rate_limit) << '\t' << (r.owner ? std::to_string(*r.owner) : std::string("-")) << '\n';
    }
  }

 private:
  struct Switch {
    std::map<LinkIndex, std::uint16_t> ports;
    std::map<MatchTuple, FlowRule> table;
  };

  Switch& get(const std::string& id) {
    auto it = switches_.find(id);
    if (it == switches_.end()) throw UnknownSwitch("unknown switch '" + id + "'");
    return it->second;
  }
  const Switch& get(const std::string& id) const {
    auto it = switches_.find(id);
    if (it == switches_.end()) throw UnknownSwitch("unknown switch '" + id + "'");
    return it->second;
  }

  std::map<std::string, Switch> switches_;
  std::unordered_map<LspId, std::vector<std::pair<std::string, MatchTuple>>> owned_;
  std::vector<DropDirective> drops_;
};

}  // namespace bamsdn
