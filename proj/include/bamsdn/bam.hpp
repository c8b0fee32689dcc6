#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bamsdn/core.hpp"

namespace bamsdn {

/// Bit set of class indices.
using ClassMask = std::uint64_t;

inline constexpr ClassMask class_bit(ClassIndex c) { return ClassMask{1} << c; }
inline constexpr ClassMask classes_below(ClassIndex c) { return class_bit(c) - 1; }
inline constexpr ClassMask all_classes(std::size_t n) { return n >= 64 ? ~ClassMask{0} : class_bit(n) - 1; }

/// Upper bound on the summed allocation of a group of classes on one link.
struct Constraint {
  ClassMask classes = 0;
  Bandwidth limit;
};

/// The constraint system on one link: the model's bandwidth constraints
/// (when the configuration governs the link) plus physical capacity.
///
/// MAM: BC_b bounds class b alone. RDM: BC_b bounds the sum of classes b..N-1,
/// so higher indices are nested inside lower ones.
inline std::vector<Constraint> constraints_for(const BcConfig& cfg, const Link& link, LinkIndex index,
                                               std::size_t class_count) {
  std::vector<Constraint> out;
  out.reserve(class_count + 1);
  if (cfg.governs(index)) {
    for (std::size_t b = 0; b < cfg.bc.size(); ++b) {
      ClassMask mask = cfg.model == BamModel::Mam ? class_bit(b) : all_classes(class_count) & ~classes_below(b);
      out.push_back({mask, cfg.limit(b, link)});
    }
  }
  out.push_back({all_classes(class_count), link.capacity});
  return out;
}

inline std::vector<Constraint> constraints_on(const NetworkState& state, LinkIndex l) {
  return constraints_for(state.bc_config(), state.topology().link(l), l, state.class_count());
}

inline Bandwidth masked_alloc(const NetworkState& state, LinkIndex l, ClassMask mask) {
  Bandwidth sum;
  for (ClassIndex c = 0; c < state.class_count(); ++c)
    if (mask & class_bit(c)) sum += state.alloc(l, c);
  return sum;
}

enum class Verdict { Grant, GrantWithPreemption, Deny };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Grant: return "grant";
    case Verdict::GrantWithPreemption: return "grant-with-preemption";
    case Verdict::Deny: return "deny";
  }
  return "?";
}

struct AdmissionDecision {
  Verdict verdict = Verdict::Deny;
  std::vector<LspId> victims;  // non-empty iff GrantWithPreemption

  static AdmissionDecision grant() { return {Verdict::Grant, {}}; }
  static AdmissionDecision deny() { return {Verdict::Deny, {}}; }

  friend bool operator==(const AdmissionDecision&, const AdmissionDecision&) = default;
};

/// Bandwidth that must be freed on one link from the classes in `eligible`.
struct Deficit {
  LinkIndex link = 0;
  ClassMask eligible = 0;
  Bandwidth amount;
};

namespace detail {

inline bool on_path(const Lsp& lsp, LinkIndex l) {
  return std::find(lsp.path.begin(), lsp.path.end(), l) != lsp.path.end();
}

inline bool covers(const NetworkState& state, std::span<const Deficit> deficits, std::span<const LspId> victims) {
  for (const Deficit& d : deficits) {
    Bandwidth freed;
    for (LspId v : victims) {
      const Lsp& lsp = state.lsp(v);
      if ((d.eligible & class_bit(lsp.class_index)) && on_path(lsp, d.link)) freed += lsp.demand;
    }
    if (freed < d.amount) return false;
  }
  return true;
}

}  // namespace detail

/// Chooses Active LSPs whose removal clears every deficit.
///
/// Candidates are taken lowest class first and, within a class, newest
/// admission first; a candidate is taken only if it reduces a deficit that is
/// still open. A reverse pass then drops any victim the rest already cover.
/// Throws Infeasible when evicting every eligible LSP is not enough.
inline std::vector<LspId> select_victims(const NetworkState& state, std::span<const Deficit> deficits) {
  std::vector<Bandwidth> open;
  open.reserve(deficits.size());
  for (const Deficit& d : deficits) open.push_back(d.amount);
  auto all_closed = [&] {
    return std::all_of(open.begin(), open.end(), [](Bandwidth b) { return b <= Bandwidth::zero(); });
  };
  if (all_closed()) return {};

  std::vector<const Lsp*> candidates;
  for (LspId id : state.active()) candidates.push_back(&state.lsp(id));
  std::sort(candidates.begin(), candidates.end(), [](const Lsp* a, const Lsp* b) {
    if (a->class_index != b->class_index) return a->class_index < b->class_index;
    return a->admit_seq > b->admit_seq;
  });

  std::vector<LspId> chosen;
  for (const Lsp* lsp : candidates) {
    if (all_closed()) break;
    bool helps = false;
    for (std::size_t i = 0; i < deficits.size(); ++i) {
      if (open[i] > Bandwidth::zero() && (deficits[i].eligible & class_bit(lsp->class_index)) &&
          detail::on_path(*lsp, deficits[i].link)) {
        helps = true;
        break;
      }
    }
    if (!helps) continue;
    chosen.push_back(lsp->id);
    for (std::size_t i = 0; i < deficits.size(); ++i)
      if ((deficits[i].eligible & class_bit(lsp->class_index)) && detail::on_path(*lsp, deficits[i].link))
        open[i] -= lsp->demand;
  }
  if (!all_closed()) throw Infeasible("no eligible victim set clears the deficit");

  for (std::size_t i = chosen.size(); i-- > 0;) {
    std::vector<LspId> without = chosen;
    without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
    if (detail::covers(state, deficits, without)) chosen = std::move(without);
  }
  return chosen;
}

/// Maximum Allocation Model: classes never share, so the verdict is Grant or Deny.
inline AdmissionDecision check_mam(const NetworkState& state, const Path& path, ClassIndex c, Bandwidth demand) {
  if (state.bc_config().model != BamModel::Mam) throw ModelMismatch("check_mam called under RDM");
  for (LinkIndex l : path) {
    for (const Constraint& k : constraints_on(state, l)) {
      if (!(k.classes & class_bit(c))) continue;
      if (masked_alloc(state, l, k.classes) + demand > k.limit) return AdmissionDecision::deny();
    }
  }
  return AdmissionDecision::grant();
}

/// Russian Dolls Model. Lower classes may borrow headroom nested inside
/// higher classes' constraints; a higher class reclaims it by preempting
/// borrowers strictly below itself.
inline AdmissionDecision check_rdm(const NetworkState& state, const Path& path, ClassIndex c, Bandwidth demand) {
  if (state.bc_config().model != BamModel::Rdm) throw ModelMismatch("check_rdm called under MAM");
  std::vector<Deficit> deficits;
  for (LinkIndex l : path) {
    for (const Constraint& k : constraints_on(state, l)) {
      if (!(k.classes & class_bit(c))) continue;
      Bandwidth after = masked_alloc(state, l, k.classes) + demand;
      if (after <= k.limit) continue;
      ClassMask eligible = k.classes & classes_below(c);
      if (eligible == 0) return AdmissionDecision::deny();
      deficits.push_back({l, eligible, after - k.limit});
    }
  }
  if (deficits.empty()) return AdmissionDecision::grant();
  try {
    return {Verdict::GrantWithPreemption, select_victims(state, deficits)};
  } catch (const Infeasible&) {
    return AdmissionDecision::deny();
  }
}

inline AdmissionDecision check(const NetworkState& state, const Path& path, ClassIndex c, Bandwidth demand) {
  return state.bc_config().model == BamModel::Mam ? check_mam(state, path, c, demand)
                                                  : check_rdm(state, path, c, demand);
}

/// Every (link, constraint) whose current allocation exceeds its limit under `cfg`.
inline std::vector<Deficit> violations(const NetworkState& state, const BcConfig& cfg) {
  std::vector<Deficit> out;
  const Topology& topo = state.topology();
  for (LinkIndex l = 0; l < topo.links().size(); ++l) {
    for (const Constraint& k : constraints_for(cfg, topo.link(l), l, state.class_count())) {
      Bandwidth used = masked_alloc(state, l, k.classes);
      if (used > k.limit) out.push_back({l, k.classes, used - k.limit});
    }
  }
  return out;
}

enum class ReconfigMode { Hard, Soft };

inline std::string_view to_string(ReconfigMode m) { return m == ReconfigMode::Hard ? "hard" : "soft"; }

struct ReconfigEvent {
  BcConfig new_bc;
  ReconfigMode mode = ReconfigMode::Hard;
  Millis trigger_time = 0;
};

/// Clears the pending soft configuration once nothing exceeds it any more.
inline void refresh_soft_drain(NetworkState& state) {
  if (state.pending_soft_bc() && violations(state, *state.pending_soft_bc()).empty())
    state.set_pending_soft_bc(std::nullopt);
}

/// Installs a new constraint set. Hard mode evicts, lowest class and newest
/// first, from the groups that exceed their new limit; soft mode never
/// preempts and lets over-allocated classes drain through completions.
/// Returns the preempted LSP ids.
inline std::vector<LspId> reconfigure(NetworkState& state, const ReconfigEvent& event) {
  state.set_bc_config(event.new_bc);  // validates, throws InvalidBc
  if (event.mode == ReconfigMode::Soft) {
    state.set_pending_soft_bc(event.new_bc);
    refresh_soft_drain(state);
    return {};
  }
  state.set_pending_soft_bc(std::nullopt);
  std::vector<Deficit> deficits = violations(state, event.new_bc);
  std::vector<LspId> victims = select_victims(state, deficits);
  for (LspId v : victims) state.release(v, ReleaseReason::Preempted, event.trigger_time);
  return victims;
}

}  // namespace bamsdn
