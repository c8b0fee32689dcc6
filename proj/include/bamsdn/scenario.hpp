#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <istream>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "bamsdn/bam.hpp"
#include "bamsdn/controller.hpp"
#include "bamsdn/core.hpp"
#include "bamsdn/invariants.hpp"
#include "bamsdn/metrics.hpp"

namespace bamsdn {

struct PortRange {
  std::uint16_t lo = 0;
  std::uint16_t hi = 0;
};

/// Requests issued by one source host for one class.
struct DemandEntry {
  std::string source_host;
  ClassIndex class_index = 0;
  std::uint64_t count = 0;
  std::uint32_t start_cycle = 0;
};

/// A scheduled constraint change, fired either right after the Nth request
/// or at a fixed simulation time.
struct ReconfigSpec {
  std::vector<BcValue> bc;
  ReconfigMode mode = ReconfigMode::Hard;
  std::optional<std::uint64_t> after_request;
  std::optional<Millis> at_time;
};

struct ScenarioSpec {
  std::string name;
  Topology topology;
  std::string reference_link;
  std::vector<TrafficClass> classes;
  std::vector<PortRange> class_ports;  // parallel to classes
  BcConfig initial_bc;
  std::vector<ReconfigSpec> reconfigs;
  std::string destination;
  std::vector<DemandEntry> demand;
  std::uint32_t cycles = 10;
  Millis cycle_length = seconds(300);
  Millis lsp_lifetime = seconds(300);
  std::uint64_t rng_seed = 1;
  std::uint64_t stop = 0;
};

/// Checks every cross-field invariant; throws ValidationError.
inline void validate(const ScenarioSpec& spec) {
  auto fail = [](const std::string& what) { throw ValidationError(what); };
  if (spec.classes.empty()) fail("no traffic classes");
  if (spec.class_ports.size() != spec.classes.size()) fail("every class needs a port range");
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    if (spec.classes[i].index != i) fail("class indices must be unique and cover 0..N-1");
    if (spec.classes[i].max_lsp_bandwidth <= Bandwidth::zero()) fail("class " + std::to_string(i) + " needs max_lsp > 0");
    if (spec.class_ports[i].lo > spec.class_ports[i].hi) fail("class " + std::to_string(i) + " has an empty port range");
  }
  if (spec.cycles == 0) fail("cycles must be positive");
  if (spec.cycle_length <= 0) fail("cycle_length must be positive");
  if (spec.lsp_lifetime <= 0) fail("lsp_lifetime must be positive");
  if (!spec.topology.find_link(spec.reference_link)) fail("reference_link '" + spec.reference_link + "' is not a link");

  auto dest = spec.topology.find_node(spec.destination);
  if (!dest || spec.topology.node(*dest).kind != NodeKind::Host) fail("destination must be a declared host");

  std::uint64_t total = 0;
  for (const DemandEntry& d : spec.demand) {
    auto src = spec.topology.find_node(d.source_host);
    if (!src || spec.topology.node(*src).kind != NodeKind::Host)
      fail("demand source '" + d.source_host + "' is not a host");
    if (d.class_index >= spec.classes.size()) fail("demand names unknown class " + std::to_string(d.class_index));
    if (d.start_cycle >= spec.cycles)
      fail("start_cycle " + std::to_string(d.start_cycle) + " must be below cycles (" + std::to_string(spec.cycles) + ")");
    total += d.count;
  }
  if (total != spec.stop)
    fail("demand counts sum to " + std::to_string(total) + " but stop is " + std::to_string(spec.stop));

  try {
    validate(spec.initial_bc, spec.topology, spec.classes.size());
    for (const ReconfigSpec& r : spec.reconfigs) {
      if (r.after_request.has_value() == r.at_time.has_value()) fail("reconfig needs exactly one trigger");
      if (r.after_request && *r.after_request > spec.stop) fail("reconfig trigger lies past the last request");
      BcConfig cfg = spec.initial_bc;
      cfg.bc = r.bc;
      validate(cfg, spec.topology, spec.classes.size());
    }
  } catch (const InvalidBc& e) {
    fail(std::string("bandwidth constraints: ") + e.what());
  }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

class ScenarioParser {
 public:
  ScenarioSpec parse(std::istream& is, std::string default_name) {
    spec_.name = std::move(default_name);
    std::string raw;
    while (std::getline(is, raw)) {
      ++line_;
      std::string_view s = raw;
      if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') error("section", "unterminated section header");
        section_ = std::string(s.substr(1, s.size() - 2));
        static const std::vector<std::string> known{"topology", "classes", "bc", "reconfig", "demand", "run"};
        if (std::find(known.begin(), known.end(), section_) == known.end())
          error("section", "unknown section '" + section_ + "'");
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string_view::npos) error("line", "expected key = value");
      key_ = std::string(trim(s.substr(0, eq)));
      value_ = tokens(s.substr(eq + 1));
      if (section_.empty()) error(key_, "key outside any section");
      if (value_.empty()) error(key_, "missing value");
      dispatch();
    }
    finish();
    return std::move(spec_);
  }

 private:
  [[noreturn]] void error(const std::string& field, const std::string& what) const {
    throw ParseError(line_, field, what);
  }

  void arity(std::size_t n) const {
    if (value_.size() != n) error(key_, "expected " + std::to_string(n) + " value(s), got " + std::to_string(value_.size()));
  }

  template <class T>
  T integer(const std::string& s) const {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) error(key_, "expected an integer, got '" + s + "'");
    return v;
  }

  Bandwidth mbps(const std::string& s) const {
    auto b = parse_mbps(s);
    if (!b) error(key_, "expected megabits per second, got '" + s + "'");
    return *b;
  }

  Millis secs(const std::string& s) const {
    auto t = parse_seconds(s);
    if (!t) error(key_, "expected seconds, got '" + s + "'");
    return *t;
  }

  BcValue bc_value(const std::string& s) const {
    if (!s.empty() && s.back() == '%') {
      auto bp = parse_fixed(std::string_view(s).substr(0, s.size() - 1), 2);
      if (!bp) error(key_, "bad percentage '" + s + "'");
      return BcValue::percent(*bp);
    }
    return BcValue::absolute(mbps(s));
  }

  std::vector<BcValue> bc_list(std::size_t from) const {
    std::vector<BcValue> out;
    for (std::size_t i = from; i < value_.size(); ++i) out.push_back(bc_value(value_[i]));
    return out;
  }

  void wrap(auto&& fn) {
    try {
      fn();
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      error(key_, e.what());
    }
  }

  void dispatch() {
    if (section_ == "topology") {
      if (key_ == "host") {
        arity(2);
        if (!parse_ipv4(value_[1])) error(key_, "bad IPv4 address '" + value_[1] + "'");
        wrap([&] { spec_.topology.add_node(value_[0], NodeKind::Host, value_[1]); });
      } else if (key_ == "switch") {
        arity(1);
        wrap([&] { spec_.topology.add_node(value_[0], NodeKind::Switch); });
      } else if (key_ == "link") {
        arity(4);
        Bandwidth cap = mbps(value_[3]);
        wrap([&] { spec_.topology.add_link(value_[0], value_[1], value_[2], cap); });
      } else if (key_ == "reference_link") {
        arity(1);
        spec_.reference_link = value_[0];
      } else {
        error(key_, "unknown key in [topology]");
      }
    } else if (section_ == "classes") {
      if (key_ != "class") error(key_, "unknown key in [classes]");
      arity(3);
      TrafficClass tc{integer<ClassIndex>(value_[0]), mbps(value_[1])};
      auto dash = value_[2].find('-');
      if (dash == std::string::npos) error(key_, "port range must be lo-hi");
      PortRange pr{integer<std::uint16_t>(value_[2].substr(0, dash)), integer<std::uint16_t>(value_[2].substr(dash + 1))};
      if (tc.index != spec_.classes.size()) error(key_, "classes must be declared in index order 0..N-1");
      spec_.classes.push_back(tc);
      spec_.class_ports.push_back(pr);
    } else if (section_ == "bc") {
      if (key_ == "model") {
        arity(1);
        if (value_[0] == "MAM") spec_.initial_bc.model = BamModel::Mam;
        else if (value_[0] == "RDM") spec_.initial_bc.model = BamModel::Rdm;
        else error(key_, "model must be MAM or RDM");
      } else if (key_ == "bc") {
        spec_.initial_bc.bc = bc_list(0);
      } else if (key_ == "links") {
        bc_links_ = value_;
      } else {
        error(key_, "unknown key in [bc]");
      }
    } else if (section_ == "reconfig") {
      if (key_ != "event") error(key_, "unknown key in [reconfig]");
      if (value_.size() < 4) error(key_, "expected: after <N>|at <seconds> hard|soft <bc...>");
      ReconfigSpec r;
      if (value_[0] == "after") r.after_request = integer<std::uint64_t>(value_[1]);
      else if (value_[0] == "at") r.at_time = secs(value_[1]);
      else error(key_, "trigger must be 'after' or 'at'");
      if (value_[2] == "hard") r.mode = ReconfigMode::Hard;
      else if (value_[2] == "soft") r.mode = ReconfigMode::Soft;
      else error(key_, "mode must be hard or soft");
      r.bc = bc_list(3);
      spec_.reconfigs.push_back(std::move(r));
    } else if (section_ == "demand") {
      if (key_ == "destination") {
        arity(1);
        spec_.destination = value_[0];
      } else if (key_ == "flow") {
        arity(4);
        spec_.demand.push_back({value_[0], integer<ClassIndex>(value_[1]), integer<std::uint64_t>(value_[2]),
                                integer<std::uint32_t>(value_[3])});
      } else {
        error(key_, "unknown key in [demand]");
      }
    } else if (section_ == "run") {
      arity(1);
      if (key_ == "name") spec_.name = value_[0];
      else if (key_ == "cycles") spec_.cycles = integer<std::uint32_t>(value_[0]);
      else if (key_ == "cycle_length") spec_.cycle_length = secs(value_[0]);
      else if (key_ == "lsp_lifetime") spec_.lsp_lifetime = secs(value_[0]);
      else if (key_ == "seed") spec_.rng_seed = integer<std::uint64_t>(value_[0]);
      else if (key_ == "stop") spec_.stop = integer<std::uint64_t>(value_[0]);
      else error(key_, "unknown key in [run]");
    }
  }

  void finish() {
    for (const std::string& id : bc_links_) {
      auto l = spec_.topology.find_link(id);
      if (!l) throw ValidationError("[bc] links names unknown link '" + id + "'");
      spec_.initial_bc.applies_to.push_back(*l);
    }
  }

  ScenarioSpec spec_;
  std::size_t line_ = 0;
  std::string section_;
  std::string key_;
  std::vector<std::string> value_;
  std::vector<std::string> bc_links_;
};

}  // namespace detail

/// Parses and validates scenario text.
inline ScenarioSpec parse_scenario(std::istream& is, std::string default_name = "scenario") {
  ScenarioSpec spec = detail::ScenarioParser{}.parse(is, std::move(default_name));
  validate(spec);
  return spec;
}

inline ScenarioSpec parse_scenario(std::string_view text, std::string default_name = "scenario") {
  std::istringstream is{std::string(text)};
  return parse_scenario(is, std::move(default_name));
}

inline ScenarioSpec load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path.string() + "'");
  return parse_scenario(in, path.stem().string());
}

struct ScheduledRequest {
  std::uint64_t id = 0;  // position in the merged stream
  Millis time = 0;
  std::size_t demand_entry = 0;
  ClassIndex class_index = 0;
};

namespace detail {

// Uniform integer in [0, bound) from a 64-bit draw; identical on every
// platform, unlike the standard distributions.
inline std::uint64_t scaled_draw(std::mt19937_64& rng, std::uint64_t bound) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

}  // namespace detail

/// Expands the demand table into the merged, time-ordered request stream.
/// Each entry's count is split evenly over its active cycles, remainder to
/// the earliest ones; offsets within a cycle are uniform.
inline std::vector<ScheduledRequest> schedule(const ScenarioSpec& spec, std::optional<std::uint64_t> seed = {}) {
  std::mt19937_64 rng(seed.value_or(spec.rng_seed));
  std::vector<ScheduledRequest> out;
  out.reserve(spec.stop);
  std::uint64_t gen = 0;
  for (std::size_t e = 0; e < spec.demand.size(); ++e) {
    const DemandEntry& d = spec.demand[e];
    std::uint64_t span = spec.cycles - d.start_cycle;
    for (std::uint64_t k = 0; k < span; ++k) {
      std::uint64_t n = d.count / span + (k < d.count % span ? 1 : 0);
      Millis base = static_cast<Millis>(d.start_cycle + k) * spec.cycle_length;
      for (std::uint64_t i = 0; i < n; ++i) {
        Millis offset = static_cast<Millis>(detail::scaled_draw(rng, static_cast<std::uint64_t>(spec.cycle_length)));
        out.push_back({gen++, base + offset, e, d.class_index});
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ScheduledRequest& a, const ScheduledRequest& b) { return std::tie(a.time, a.id) < std::tie(b.time, b.id); });
  for (std::uint64_t i = 0; i < out.size(); ++i) out[i].id = i;
  return out;
}

/// Builds the classifier for a scenario: one port-range rule per class and
/// a static route per (source, destination) host pair in the demand table.
inline ClassifierTable build_classifier(const ScenarioSpec& spec) {
  ClassifierTable table;
  for (std::size_t c = 0; c < spec.classes.size(); ++c)
    table.add_rule({spec.class_ports[c].lo, spec.class_ports[c].hi, c});
  NodeIndex dst = spec.topology.node_index(spec.destination);
  for (const DemandEntry& d : spec.demand) {
    NodeIndex src = spec.topology.node_index(d.source_host);
    table.add_route(spec.topology, src, dst, path_for(spec.topology, src, dst));
  }
  return table;
}

/// Header tuple for request `id` of a scheduled stream.
inline MatchTuple request_match(const ScenarioSpec& spec, const ScheduledRequest& r) {
  const DemandEntry& d = spec.demand[r.demand_entry];
  const PortRange& pr = spec.class_ports[r.class_index];
  MatchTuple m;
  m.src_ip = *parse_ipv4(spec.topology.node(spec.topology.node_index(d.source_host)).ip);
  m.dst_ip = *parse_ipv4(spec.topology.node(spec.topology.node_index(spec.destination)).ip);
  m.src_port = static_cast<std::uint16_t>(1024 + r.id % 64000);
  m.dst_port = static_cast<std::uint16_t>(pr.lo + r.id % (static_cast<std::uint64_t>(pr.hi - pr.lo) + 1));
  m.protocol = 6;
  return m;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  bool check_invariants = true;
  MetricsSink* sink = nullptr;
  /// Called after every event, e.g. for extra assertions in tests.
  std::function<void(const Controller&)> observer;
};

struct RunResult {
  std::vector<MetricsRecord> records;
  Journal journal;
  std::string summary;
  ClassCounters counters;
  std::uint64_t requests = 0;
  std::uint64_t invariant_checks = 0;
  Bandwidth reference_capacity;
};

/// Drives the whole scenario through the controller. Same-time events run
/// as expiries, then reconfigurations, then requests. After the last
/// request the run continues until every LSP has ended.
inline RunResult run(const ScenarioSpec& spec, const RunOptions& opts = {}) {
  const std::uint64_t seed = opts.seed.value_or(spec.rng_seed);
  std::vector<ScheduledRequest> requests = schedule(spec, seed);

  Controller ctl(NetworkState(spec.topology, spec.classes, spec.initial_bc), build_classifier(spec));
  const LinkIndex ref = spec.topology.link_index(spec.reference_link);
  InvariantChecker checker;

  RunResult res;
  res.reference_capacity = spec.topology.link(ref).capacity;
  res.journal.class_count = spec.classes.size();
  res.journal.header = {{"scenario", spec.name},
                        {"seed", std::to_string(seed)},
                        {"model", std::string(to_string(spec.initial_bc.model))},
                        {"reference_link", spec.reference_link}};

  using Expiry = std::pair<Millis, LspId>;
  std::priority_queue<Expiry, std::vector<Expiry>, std::greater<>> expiries;

  std::vector<const ReconfigSpec*> timed;
  for (const ReconfigSpec& r : spec.reconfigs)
    if (r.at_time) timed.push_back(&r);
  std::stable_sort(timed.begin(), timed.end(),
                   [](const ReconfigSpec* a, const ReconfigSpec* b) { return *a->at_time < *b->at_time; });
  std::size_t next_timed = 0;
  std::size_t next_req = 0;
  std::uint64_t issued = 0;

  auto emit = [&](Millis now) {
    const NetworkState& st = ctl.state();
    MetricsRecord r;
    r.request_index = issued;
    r.sim_time = now;
    for (ClassIndex c = 0; c < st.class_count(); ++c) r.util.push_back(st.alloc(ref, c));
    r.blocked = st.counters().blocked;
    r.admitted = st.counters().admitted;
    r.preempted = st.counters().preempted;
    if (opts.check_invariants) checker.check(ctl);
    if (opts.observer) opts.observer(ctl);
    if (opts.sink) opts.sink->push(r);
    res.records.push_back(std::move(r));
  };

  auto journal = [&](Millis t, JournalKind k, LspId lsp, ClassIndex c, std::string detail) {
    res.journal.entries.push_back({t, issued, k, lsp, c, std::move(detail)});
  };

  auto apply = [&](const ReconfigSpec& r, Millis now) {
    BcConfig cfg = ctl.state().bc_config();
    cfg.bc = r.bc;
    std::vector<LspId> victims = ctl.apply_reconfig({cfg, r.mode, now});
    if (r.mode == ReconfigMode::Soft) {
      if (!victims.empty()) throw InvariantViolation("soft reconfiguration preempted LSPs");
      if (opts.check_invariants) checker.start_soft_drain(ctl.state());
    }
    journal(now, JournalKind::Reconfig, 0, 0, std::string(to_string(r.mode)));
    for (LspId v : victims) journal(now, JournalKind::Preempted, v, ctl.state().lsp(v).class_index, "reconfig");
    emit(now);
  };

  for (;;) {
    // Discard expiries of LSPs that were preempted meanwhile.
    while (!expiries.empty() && ctl.state().lsp(expiries.top().second).state != LspState::Active) expiries.pop();

    constexpr Millis kNever = std::numeric_limits<Millis>::max();
    Millis te = expiries.empty() ? kNever : expiries.top().first;
    Millis tc = next_timed < timed.size() ? *timed[next_timed]->at_time : kNever;
    Millis tr = next_req < requests.size() ? requests[next_req].time : kNever;
    if (te == kNever && tc == kNever && tr == kNever) break;

    if (te <= tc && te <= tr) {
      auto [t, id] = expiries.top();
      expiries.pop();
      const Lsp& lsp = ctl.state().lsp(id);
      if (t - lsp.admit_time != spec.lsp_lifetime) throw InvariantViolation("LSP lifetime drifted");
      ctl.handle_expiry(id, t);
      journal(t, JournalKind::Completed, id, lsp.class_index, "-");
      emit(t);
    } else if (tc <= tr) {
      apply(*timed[next_timed++], tc);
    } else {
      const ScheduledRequest& sr = requests[next_req++];
      ++issued;
      LspRequest req{request_match(spec, sr), sr.time, spec.lsp_lifetime};
      RequestOutcome out = ctl.handle_request(req);
      if (opts.check_invariants) checker.check_preemption(ctl.state(), out.class_index, out.preempted);
      for (LspId v : out.preempted)
        journal(sr.time, JournalKind::Preempted, v, ctl.state().lsp(v).class_index, "lsp:" + std::to_string(out.lsp));
      if (out.established()) {
        journal(sr.time, JournalKind::Established, out.lsp, out.class_index, "-");
        expiries.push({sr.time + spec.lsp_lifetime, out.lsp});
      } else {
        journal(sr.time, JournalKind::Blocked, out.lsp, out.class_index, "-");
      }
      emit(sr.time);
      for (const ReconfigSpec& r : spec.reconfigs)
        if (r.after_request && *r.after_request == issued) apply(r, sr.time);
    }
  }

  res.counters = ctl.state().counters();
  res.requests = issued;
  res.invariant_checks = checker.checks();
  res.summary = summarize(res.journal);
  return res;
}

/// Writes metrics.csv, journal.tsv and summary.txt into `dir`.
inline void write_outputs(const RunResult& res, std::size_t class_count, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  export_csv(res.records, class_count, (dir / "metrics.csv").string());
  auto write = [](const std::filesystem::path& p, auto&& body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    body(out);
    if (!out) throw IoError("failed writing '" + p.string() + "'");
  };
  write(dir / "journal.tsv", [&](std::ostream& os) { write_journal(os, res.journal); });
  write(dir / "summary.txt", [&](std::ostream& os) { os << res.summary; });
}

}  // namespace bamsdn
