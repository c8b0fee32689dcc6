#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bamsdn/core.hpp"

namespace bamsdn {

/// Snapshot taken after every state-changing event. `util` is the
/// per-class allocation on the scenario's reference link.
struct MetricsRecord {
  std::uint64_t request_index = 0;  // requests issued so far
  Millis sim_time = 0;
  std::vector<Bandwidth> util;
  std::vector<std::uint64_t> blocked;
  std::vector<std::uint64_t> admitted;
  std::vector<std::uint64_t> preempted;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

/// Append-only record sink; safe to drain from another thread while a run
/// is appending.
class MetricsSink {
 public:
  void push(MetricsRecord r) {
    std::lock_guard lock(mu_);
    pending_.push_back(std::move(r));
  }

  std::vector<MetricsRecord> drain() {
    std::lock_guard lock(mu_);
    std::vector<MetricsRecord> out;
    out.swap(pending_);
    return out;
  }

 private:
  std::mutex mu_;
  std::vector<MetricsRecord> pending_;
};

inline double blocking_rate(std::uint64_t blocked, std::uint64_t requested) {
  if (requested == 0) throw UndefinedRate("blocking rate undefined: no requests");
  return static_cast<double>(blocked) / static_cast<double>(requested);
}

inline double preemption_rate(std::uint64_t preempted, std::uint64_t admitted) {
  if (admitted == 0) throw UndefinedRate("preemption rate undefined: nothing admitted");
  return static_cast<double>(preempted) / static_cast<double>(admitted);
}

// ---------------------------------------------------------------------------
// Event journal

enum class JournalKind { Established, Blocked, Preempted, Completed, Reconfig };

inline std::string_view to_string(JournalKind k) {
  switch (k) {
    case JournalKind::Established: return "established";
    case JournalKind::Blocked: return "blocked";
    case JournalKind::Preempted: return "preempted";
    case JournalKind::Completed: return "completed";
    case JournalKind::Reconfig: return "reconfig";
  }
  return "?";
}

inline std::optional<JournalKind> parse_journal_kind(std::string_view s) {
  for (JournalKind k : {JournalKind::Established, JournalKind::Blocked, JournalKind::Preempted,
                        JournalKind::Completed, JournalKind::Reconfig})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct JournalEntry {
  Millis time = 0;
  std::uint64_t request_index = 0;
  JournalKind kind = JournalKind::Established;
  LspId lsp = 0;          // unused for Reconfig
  ClassIndex class_index = 0;
  std::string detail = "-";  // reconfig mode, or what triggered a preemption

  friend bool operator==(const JournalEntry&, const JournalEntry&) = default;
};

/// Complete per-event log of a run. Every counter in the run summary is
/// recomputed from it.
struct Journal {
  std::vector<std::pair<std::string, std::string>> header;  // ordered metadata
  std::size_t class_count = 0;
  std::vector<JournalEntry> entries;

  std::string header_value(std::string_view key) const {
    for (const auto& [k, v] : header)
      if (k == key) return v;
    return {};
  }
};

inline void write_journal(std::ostream& os, const Journal& j) {
  os << "# bamsdn-journal 1\n";
  os << "# classes=" << j.class_count << '\n';
  for (const auto& [k, v] : j.header) os << "# " << k << '=' << v << '\n';
  os << "time_ms\trequest_index\tevent\tlsp\tclass\tdetail\n";
  for (const JournalEntry& e : j.entries)
    os << e.time << '\t' << e.request_index << '\t' << to_string(e.kind) << '\t' << e.lsp << '\t' << e.class_index
       << '\t' << e.detail << '\n';
}

namespace detail {

template <class T>
T parse_uint_field(std::string_view s, std::size_t line, const char* field) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw ParseError(line, field, "expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline Journal read_journal(std::istream& is) {
  Journal j;
  std::string line;
  std::size_t lineno = 0;
  bool saw_magic = false;
  bool saw_columns = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      std::string_view body = std::string_view(line).substr(2);
      if (body == "bamsdn-journal 1") {
        saw_magic = true;
        continue;
      }
      auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError(lineno, "header", "expected key=value");
      std::string key(body.substr(0, eq));
      std::string value(body.substr(eq + 1));
      if (key == "classes")
        j.class_count = detail::parse_uint_field<std::size_t>(value, lineno, "classes");
      else
        j.header.emplace_back(std::move(key), std::move(value));
      continue;
    }
    if (!saw_magic) throw ParseError(lineno, "magic", "not a bamsdn journal");
    if (!saw_columns) {
      saw_columns = true;
      continue;
    }
    auto f = detail::split(line, '\t');
    if (f.size() != 6) throw ParseError(lineno, "row", "expected 6 tab-separated fields");
    JournalEntry e;
    e.time = detail::parse_uint_field<std::int64_t>(f[0], lineno, "time_ms");
    e.request_index = detail::parse_uint_field<std::uint64_t>(f[1], lineno, "request_index");
    auto kind = parse_journal_kind(f[2]);
    if (!kind) throw ParseError(lineno, "event", "unknown event '" + std::string(f[2]) + "'");
    e.kind = *kind;
    e.lsp = detail::parse_uint_field<LspId>(f[3], lineno, "lsp");
    e.class_index = detail::parse_uint_field<ClassIndex>(f[4], lineno, "class");
    if (e.kind != JournalKind::Reconfig && e.class_index >= j.class_count)
      throw ParseError(lineno, "class", "class index out of range");
    e.detail = std::string(f[5]);
    j.entries.push_back(std::move(e));
  }
  if (!saw_magic) throw ParseError(lineno, "magic", "not a bamsdn journal");
  if (j.class_count == 0) throw ParseError(lineno, "classes", "missing class count");
  return j;
}

/// Counters and rates recomputed from a journal.
class JournalStats {
 public:
  explicit JournalStats(const Journal& j)
      : requested_(j.class_count), counters_(j.class_count), history_(j.class_count) {
    for (const JournalEntry& e : j.entries) {
      if (e.kind == JournalKind::Reconfig) {
        ++reconfigs_;
        continue;
      }
      ClassIndex c = e.class_index;
      switch (e.kind) {
        case JournalKind::Established:
          ++requested_[c];
          ++counters_.admitted[c];
          history_[c].push_back({e.request_index, false});
          break;
        case JournalKind::Blocked:
          ++requested_[c];
          ++counters_.blocked[c];
          history_[c].push_back({e.request_index, true});
          break;
        case JournalKind::Preempted: ++counters_.preempted[c]; break;
        case JournalKind::Completed: ++counters_.completed[c]; break;
        case JournalKind::Reconfig: break;
      }
      requests_ = std::max(requests_, e.request_index);
    }
  }

  std::size_t class_count() const { return requested_.size(); }
  std::uint64_t requests() const { return requests_; }
  std::uint64_t reconfigs() const { return reconfigs_; }
  std::uint64_t requested(ClassIndex c) const { return requested_.at(c); }
  const ClassCounters& counters() const { return counters_; }

  double blocking_rate(ClassIndex c) const {
    return bamsdn::blocking_rate(counters_.blocked.at(c), requested_.at(c));
  }

  /// Blocking over the last `window` requests of class `c` issued at or
  /// before request index `upto`.
  double windowed_blocking_rate(ClassIndex c, std::size_t window, std::uint64_t upto) const {
    const auto& h = history_.at(c);
    auto end = std::upper_bound(h.begin(), h.end(), upto,
                                [](std::uint64_t v, const Outcome& o) { return v < o.request_index; });
    auto begin = end - static_cast<std::ptrdiff_t>(std::min<std::size_t>(window, end - h.begin()));
    std::uint64_t blocked = 0;
    for (auto it = begin; it != end; ++it) blocked += it->blocked ? 1 : 0;
    return bamsdn::blocking_rate(blocked, static_cast<std::uint64_t>(end - begin));
  }

  /// Blocking among class `c` requests with index in [from, to].
  double blocking_rate_between(ClassIndex c, std::uint64_t from, std::uint64_t to) const {
    std::uint64_t n = 0, blocked = 0;
    for (const Outcome& o : history_.at(c)) {
      if (o.request_index < from || o.request_index > to) continue;
      ++n;
      blocked += o.blocked ? 1 : 0;
    }
    return bamsdn::blocking_rate(blocked, n);
  }

  double preemption_rate(ClassIndex c) const {
    return bamsdn::preemption_rate(counters_.preempted.at(c), counters_.admitted.at(c));
  }

 private:
  struct Outcome {
    std::uint64_t request_index;
    bool blocked;
  };

  std::vector<std::uint64_t> requested_;
  ClassCounters counters_;
  std::vector<std::vector<Outcome>> history_;
  std::uint64_t requests_ = 0;
  std::uint64_t reconfigs_ = 0;
};

namespace detail {

inline std::string format_rate(double r) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, r, std::chars_format::fixed, 6);
  return std::string(buf, p);
}

}  // namespace detail

/// Run summary as `key=value` lines; a pure function of the journal.
inline std::string summarize(const Journal& j) {
  JournalStats st(j);
  std::ostringstream os;
  for (const auto& [k, v] : j.header) os << k << '=' << v << '\n';
  os << "classes=" << st.class_count() << '\n';
  os << "requests=" << st.requests() << '\n';
  os << "reconfigs=" << st.reconfigs() << '\n';
  for (ClassIndex c = 0; c < st.class_count(); ++c) {
    std::string ct = "_ct" + std::to_string(c);
    const ClassCounters& k = st.counters();
    os << "requested" << ct << '=' << st.requested(c) << '\n';
    os << "admitted" << ct << '=' << k.admitted[c] << '\n';
    os << "blocked" << ct << '=' << k.blocked[c] << '\n';
    os << "preempted" << ct << '=' << k.preempted[c] << '\n';
    os << "completed" << ct << '=' << k.completed[c] << '\n';
    os << "blocking_rate" << ct << '='
       << (st.requested(c) ? detail::format_rate(st.blocking_rate(c)) : std::string("undefined")) << '\n';
    os << "preemption_rate" << ct << '='
       << (k.admitted[c] ? detail::format_rate(st.preemption_rate(c)) : std::string("undefined")) << '\n';
  }
  return os.str();
}

/// Parses `key=value` summary text back into a map.
inline std::map<std::string, std::string> parse_summary(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "summary", "expected key=value");
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV export

inline std::string csv_header(std::size_t class_count) {
  std::string h = "request_index,sim_time";
  for (const char* col : {"util", "blk", "pre"})
    for (std::size_t c = 0; c < class_count; ++c) h += std::string(",") + col + "_ct" + std::to_string(c);
  return h;
}

inline void write_csv(std::ostream& os, const std::vector<MetricsRecord>& records, std::size_t class_count) {
  os << csv_header(class_count) << '\n';
  for (const MetricsRecord& r : records) {
    os << r.request_index << ',' << format_seconds(r.sim_time);
    for (Bandwidth b : r.util) os << ',' << format_mbps(b);
    for (std::uint64_t v : r.blocked) os << ',' << v;
    for (std::uint64_t v : r.preempted) os << ',' << v;
    os << '\n';
  }
}

inline void export_csv(const std::vector<MetricsRecord>& records, std::size_t class_count, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, records, class_count);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

/// One CSV row parsed back. Used to reconstruct counters from an export.
struct CsvRow {
  std::uint64_t request_index = 0;
  std::string sim_time;
  std::vector<Bandwidth> util;
  std::vector<std::uint64_t> blocked;
  std::vector<std::uint64_t> preempted;
};

inline std::vector<CsvRow> read_csv(std::istream& is, std::size_t class_count) {
  std::vector<CsvRow> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line) || line != csv_header(class_count))
    throw ParseError(1, "header", "unexpected CSV header");
  ++lineno;
  while (std::getline(is, line)) {
    ++lineno;
    auto f = detail::split(line, ',');
    if (f.size() != 2 + 3 * class_count) throw ParseError(lineno, "row", "wrong column count");
    CsvRow r;
    r.request_index = detail::parse_uint_field<std::uint64_t>(f[0], lineno, "request_index");
    r.sim_time = std::string(f[1]);
    for (std::size_t c = 0; c < class_count; ++c) {
      auto u = parse_mbps(f[2 + c]);
      if (!u) throw ParseError(lineno, "util", "bad bandwidth");
      r.util.push_back(*u);
      r.blocked.push_back(detail::parse_uint_field<std::uint64_t>(f[2 + class_count + c], lineno, "blk"));
      r.preempted.push_back(detail::parse_uint_field<std::uint64_t>(f[2 + 2 * class_count + c], lineno, "pre"));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace bamsdn
