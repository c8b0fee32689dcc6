#pragma once

#include <string>
#include <vector>

#include "bamsdn/bamsdn.hpp"

namespace testing_support {

using namespace bamsdn;

// Three hosts feeding a chain of three switches towards one destination.
inline Topology chain_topology(std::int64_t cap_mbps = 500) {
  Topology t;
  t.add_node("HS1", NodeKind::Host, "10.0.0.1");
  t.add_node("HS2", NodeKind::Host, "10.0.0.2");
  t.add_node("HS3", NodeKind::Host, "10.0.0.3");
  t.add_node("DST", NodeKind::Host, "10.0.0.100");
  t.add_node("S1", NodeKind::Switch);
  t.add_node("S2", NodeKind::Switch);
  t.add_node("S3", NodeKind::Switch);
  Bandwidth c = Bandwidth::mbps(cap_mbps);
  t.add_link("L1", "HS1", "S1", c);
  t.add_link("L2", "HS2", "S2", c);
  t.add_link("L3", "HS3", "S3", c);
  t.add_link("L4", "S1", "S2", c);
  t.add_link("L5", "S2", "S3", c);
  t.add_link("L6", "S3", "DST", c);
  return t;
}

// Two hosts joined by a single link.
inline Topology single_link(std::int64_t cap_mbps) {
  Topology t;
  t.add_node("A", NodeKind::Host, "10.0.0.1");
  t.add_node("B", NodeKind::Host, "10.0.0.2");
  t.add_link("AB", "A", "B", Bandwidth::mbps(cap_mbps));
  return t;
}

inline std::vector<TrafficClass> classes(std::vector<std::int64_t> mbps = {5, 10, 20}) {
  std::vector<TrafficClass> out;
  for (std::size_t i = 0; i < mbps.size(); ++i) out.push_back({i, Bandwidth::mbps(mbps[i])});
  return out;
}

inline BcConfig bc(BamModel m, std::vector<std::int64_t> mbps) {
  BcConfig cfg;
  cfg.model = m;
  for (auto v : mbps) cfg.bc.push_back(BcValue::absolute(Bandwidth::mbps(v)));
  return cfg;
}

// Commits an LSP of class `c` with `demand_mbps` on the single link A-B.
inline LspId put(NetworkState& st, LspId id, ClassIndex c, std::int64_t demand_mbps, Millis now = 0) {
  Lsp l;
  l.id = id;
  l.class_index = c;
  l.demand = Bandwidth::mbps(demand_mbps);
  l.path = {0};
  l.source_host = 0;
  l.dest_host = 1;
  l.end_time = now + seconds(300);
  st.commit(std::move(l), now);
  return id;
}

}  // namespace testing_support
