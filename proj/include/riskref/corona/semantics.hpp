#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskref/corona/model.hpp"
#include "riskref/kripke.hpp"

namespace riskref::corona {

// ---------------------------------------------------------------------------
// Initial states

inline State0 initial_state0(const Model& m) {
  State0 s;
  s.actors_at.resize(m.num_locations());
  s.efids_at.resize(m.num_locations());
  s.credential.reserve(m.num_actors());
  for (std::size_t a = 0; a < m.num_actors(); ++a) {
    s.credential.push_back(m.efid_entries[a].front());
    s.actors_at[m.initial_location[a]].push_back(static_cast<ActorId>(a));
    s.efids_at[m.initial_location[a]].push_back(m.efid_entries[a].front());
  }
  for (auto& v : s.actors_at) v = sort_unique(std::move(v));
  for (auto& v : s.efids_at) v = sort_unique(std::move(v));
  s.knowledge.assign(m.num_actors() * m.num_locations(), {});
  return s;
}

inline State1 initial_state1(const Model& m) {
  State1 s;
  s.actors_at.resize(m.num_locations());
  s.efids_at.resize(m.num_locations());
  s.credential.reserve(m.num_actors());
  for (std::size_t a = 0; a < m.num_actors(); ++a) {
    s.credential.push_back(EfidList{0, m.efid_entries[a]});
    s.actors_at[m.initial_location[a]].push_back(static_cast<ActorId>(a));
    s.efids_at[m.initial_location[a]].push_back(m.efid_entries[a].front());
  }
  for (auto& v : s.actors_at) v = sort_unique(std::move(v));
  for (auto& v : s.efids_at) v = sort_unique(std::move(v));
  s.knowledge.assign(m.num_actors() * m.num_locations(), {});
  return s;
}

// ---------------------------------------------------------------------------
// Rule effects. Preconditions (enabledness, placement, flags) are checked by
// the enumeration and by apply_action; the with_* functions implement the
// graph updates, which degrade to the identity exactly where the update
// functions leave the graph unchanged.

namespace detail {

inline void erase_sorted(std::vector<Efid>& v, Efid e) {
  auto it = std::lower_bound(v.begin(), v.end(), e);
  if (it != v.end() && *it == e) v.erase(it);
}

inline void insert_sorted(std::vector<Efid>& v, Efid e) {
  auto it = std::lower_bound(v.begin(), v.end(), e);
  if (it == v.end() || *it != e) v.insert(it, e);
}

inline void erase_sorted(std::vector<ActorId>& v, ActorId a) {
  auto it = std::lower_bound(v.begin(), v.end(), a);
  if (it != v.end() && *it == a) v.erase(it);
}

inline void insert_sorted(std::vector<ActorId>& v, ActorId a) {
  auto it = std::lower_bound(v.begin(), v.end(), a);
  if (it == v.end() || *it != a) v.insert(it, a);
}

}  // namespace detail

/// get: the actor records who is present together with every ephemeral id
/// visible at its location; the recorded slot is replaced, not accumulated.
template <class StateT>
StateT with_get(const Model& m, const StateT& s, ActorId a) {
  LocationId l = s.location_of(a);
  std::vector<IdEfid> product;
  product.reserve(s.actors_at[l].size() * s.efids_at[l].size());
  for (ActorId x : s.actors_at[l]) {
    for (const Efid& e : s.efids_at[l]) product.emplace_back(x, e);
  }
  StateT out = s;
  out.knowledge[static_cast<std::size_t>(a) * m.num_locations() + l] = std::move(product);
  return out;
}

/// move at level 0: the actor and its fixed ephemeral id change location.
/// Moving to the current location leaves the state unchanged.
inline State0 with_move(const Model& m, const State0& s, ActorId a, LocationId to) {
  LocationId from = s.location_of(a);
  if (from == to) return s;
  State0 out = s;
  detail::erase_sorted(out.actors_at[from], a);
  detail::insert_sorted(out.actors_at[to], a);
  detail::erase_sorted(out.efids_at[from], s.credential[a]);
  detail::insert_sorted(out.efids_at[to], s.credential[a]);
  (void)m;
  return out;
}

/// move at levels 1-3. Level 1 carries the current ephemeral id unchanged;
/// levels 2 and 3 rotate it in the same step, so the target location sees a
/// fresh id. Level 3 additionally requires 3 actors at the target and 4 at
/// the source before the move; a move failing those bounds leaves the state
/// unchanged, as does moving to the current location.
inline State1 with_move(const Model& m, const State1& s, ActorId a, LocationId to) {
  LocationId from = s.location_of(a);
  if (from == to) return s;
  if (m.level == Level::l3 &&
      !(s.actors_at[to].size() >= 3 && s.actors_at[from].size() >= 4)) {
    return s;
  }
  State1 out = s;
  detail::erase_sorted(out.actors_at[from], a);
  detail::insert_sorted(out.actors_at[to], a);
  const EfidList& cred = s.credential[a];
  detail::erase_sorted(out.efids_at[from], cred.current());
  if (m.level == Level::l1) {
    detail::insert_sorted(out.efids_at[to], cred.current());
  } else {
    EfidList rotated = cred.advanced(m.saturate_indices);
    detail::insert_sorted(out.efids_at[to], rotated.current());
    out.credential[a] = std::move(rotated);
  }
  return out;
}

/// put at level 0: rotation does not exist yet, so the rule keeps the state;
/// the transition is still derivable wherever the policy permits put.
inline State0 with_put(const Model& m, const State0& s, ActorId a) {
  (void)m;
  (void)a;
  return s;
}

/// put at levels 1-3: the actor rotates to its next ephemeral id and the
/// location's visible set swaps the old id for the new one.
inline State1 with_put(const Model& m, const State1& s, ActorId a) {
  LocationId l = s.location_of(a);
  State1 out = s;
  const EfidList& cred = s.credential[a];
  EfidList rotated = cred.advanced(m.saturate_indices);
  detail::erase_sorted(out.efids_at[l], cred.current());
  detail::insert_sorted(out.efids_at[l], rotated.current());
  out.credential[a] = std::move(rotated);
  return out;
}

// ---------------------------------------------------------------------------
// Action descriptors, rule instance enumeration, and replay

/// One rule instance: which action, which actor, and the locations involved.
/// For get and put, `from` and `to` are both the actor's location.
struct ActionStep {
  Action kind = Action::get;
  ActorId actor = 0;
  LocationId from = 0;
  LocationId to = 0;

  auto operator<=>(const ActionStep&) const = default;
};

inline std::string render_action(const Model& m, const ActionStep& a) {
  switch (a.kind) {
    case Action::get:
      return "get(" + m.actors[a.actor] + "@" + m.locations[a.from] + ")";
    case Action::move:
      return "move(" + m.actors[a.actor] + ":" + m.locations[a.from] + "->" +
             m.locations[a.to] + ")";
    case Action::put:
      return "put(" + m.actors[a.actor] + "@" + m.locations[a.from] + ")";
  }
  return "?";
}

/// Whether the rule instance's premises hold in `s` under the model's
/// semantics switches. The level-3 move bounds are part of the update, not
/// of applicability: a bounded-out move is applicable and leaves the state
/// unchanged.
template <class StateT>
bool action_applicable(const Model& m, const StateT& s, const ActionStep& a) {
  if (a.actor >= m.num_actors() || a.from >= m.num_locations() ||
      a.to >= m.num_locations()) {
    return false;
  }
  LocationId l = s.location_of(a.actor);
  switch (a.kind) {
    case Action::get:
      return a.from == l && a.to == l &&
             (!m.knowledge_attacker_only || a.actor == m.attacker) &&
             m.enables(l, a.actor, Action::get);
    case Action::move:
      return a.from == l && m.enables(a.to, a.actor, Action::move) &&
             (!m.moves_require_edge || m.has_edge(a.from, a.to));
    case Action::put:
      return a.from == l && a.to == l && !m.no_standalone_put &&
             m.enables(l, a.actor, Action::put);
  }
  return false;
}

/// Applies one rule instance, or nullopt when its premises fail. The result
/// may equal `s` for instances whose update is the identity.
template <class StateT>
std::optional<StateT> apply_action(const Model& m, const StateT& s,
                                   const ActionStep& a) {
  if (!action_applicable(m, s, a)) return std::nullopt;
  switch (a.kind) {
    case Action::get: return with_get(m, s, a.actor);
    case Action::move: return with_move(m, s, a.actor, a.to);
    case Action::put: return with_put(m, s, a.actor);
  }
  return std::nullopt;
}

/// Every applicable rule instance together with its result, in ActionStep
/// order. Successor enumeration and trace annotation both build on this.
template <class StateT>
std::vector<std::pair<ActionStep, StateT>> enumerate_steps(const Model& m,
                                                           const StateT& s) {
  std::vector<std::pair<ActionStep, StateT>> out;
  for (std::size_t a = 0; a < m.num_actors(); ++a) {
    ActorId actor = static_cast<ActorId>(a);
    LocationId l = s.location_of(actor);
    ActionStep get{Action::get, actor, l, l};
    if (action_applicable(m, s, get)) {
      out.emplace_back(get, with_get(m, s, actor));
    }
    for (std::size_t to = 0; to < m.num_locations(); ++to) {
      ActionStep move{Action::move, actor, l, static_cast<LocationId>(to)};
      if (action_applicable(m, s, move)) {
        out.emplace_back(move, with_move(m, s, actor, static_cast<LocationId>(to)));
      }
    }
    ActionStep put{Action::put, actor, l, l};
    if (action_applicable(m, s, put)) {
      out.emplace_back(put, with_put(m, s, actor));
    }
  }
  return out;
}

/// Successor states in canonical order, duplicates removed. Instances whose
/// update is the identity contribute the state itself as its own successor.
template <class StateT>
std::vector<StateT> successors(const Model& m, const StateT& s) {
  std::vector<std::pair<ActionStep, StateT>> steps = enumerate_steps(m, s);
  std::vector<StateT> out;
  out.reserve(steps.size());
  for (auto& [step, result] : steps) out.push_back(std::move(result));
  return sort_unique(std::move(out));
}

/// The rendered annotation of the step from `pre` to `post`: among all rule
/// instances producing `post`, the lexicographically least rendered form.
template <class StateT>
std::optional<std::string> annotate_step(const Model& m, const StateT& pre,
                                         const StateT& post) {
  std::optional<std::string> best;
  for (const auto& [step, result] : enumerate_steps(m, pre)) {
    if (result != post) continue;
    std::string rendered = render_action(m, step);
    if (!best.has_value() || rendered < *best) best = std::move(rendered);
  }
  return best;
}

/// Replays a sequence of named rule instances from `s`; nullopt as soon as
/// one instance is inapplicable.
template <class StateT>
std::optional<StateT> replay_actions(const Model& m, StateT s,
                                     const std::vector<ActionStep>& actions) {
  for (const ActionStep& a : actions) {
    std::optional<StateT> next = apply_action(m, s, a);
    if (!next.has_value()) return std::nullopt;
    s = std::move(*next);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Privacy predicates

/// Exactly one knowledge pair attributes the ephemeral id `e`.
inline bool identifiable(const std::vector<IdEfid>& pairs, Efid e) {
  std::size_t count = 0;
  for (const IdEfid& p : pairs) {
    if (p.second == e) {
      if (++count > 1) return false;
    }
  }
  return count == 1;
}

namespace detail {

inline std::vector<IdEfid> intersect_sorted(const std::vector<IdEfid>& a,
                                            const std::vector<IdEfid>& b) {
  std::vector<IdEfid> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

/// The attacker's intersected knowledge over the locations of `mask`, with
/// every pair naming the attacker removed.
template <class StateT>
std::vector<IdEfid> attacker_view(const Model& m, const StateT& s,
                                  unsigned mask) {
  std::vector<IdEfid> inter;
  bool first = true;
  for (std::size_t l = 0; l < m.num_locations(); ++l) {
    if (((mask >> l) & 1u) == 0) continue;
    const std::vector<IdEfid>& slot = s.kgra(m.attacker, static_cast<LocationId>(l));
    if (first) {
      inter = slot;
      first = false;
    } else {
      inter = intersect_sorted(inter, slot);
    }
    if (inter.empty()) break;
  }
  std::erase_if(inter, [&m](const IdEfid& p) { return p.first == m.attacker; });
  return inter;
}

}  // namespace detail

/// The global anonymity policy for one ephemeral id: no intersection of the
/// attacker's per-location knowledge, over any nonempty set of locations,
/// pins `e` down to a single identity. Implemented literally over all
/// nonempty location subsets.
template <class StateT>
bool global_policy(const Model& m, const StateT& s, Efid e) {
  unsigned subsets = 1u << m.num_locations();
  for (unsigned mask = 1; mask < subsets; ++mask) {
    if (identifiable(detail::attacker_view(m, s, mask), e)) return false;
  }
  return true;
}

/// The violation set predicate: some ephemeral id in the scenario's universe
/// breaks the global policy in this state.
template <class StateT>
bool scorona(const Model& m, const StateT& s) {
  unsigned subsets = 1u << m.num_locations();
  for (unsigned mask = 1; mask < subsets; ++mask) {
    std::vector<IdEfid> view = detail::attacker_view(m, s, mask);
    if (view.empty()) continue;
    // A run of exactly one occurrence for some efid means that id is
    // identifiable under this location subset.
    std::vector<Efid> efids;
    efids.reserve(view.size());
    for (const IdEfid& p : view) efids.push_back(p.second);
    std::sort(efids.begin(), efids.end());
    for (std::size_t i = 0; i < efids.size();) {
      std::size_t run = i + 1;
      while (run < efids.size() && efids[run] == efids[i]) ++run;
      if (run - i == 1) return true;
      i = run;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Abstraction from rotating ids (levels 1-3) to fixed ids (level 0)

/// Maps a rotating-credential state to the fixed-credential abstraction:
/// credentials collapse to their roots, visible ids become the roots of the
/// actors present, and every recorded pair (x, y) is rewritten to x paired
/// with the root of the actor that owns y.
inline State0 refmap(const Model& m, const State1& s) {
  State0 out;
  out.actors_at = s.actors_at;
  out.credential.reserve(s.credential.size());
  for (const EfidList& c : s.credential) out.credential.push_back(c.root());
  out.efids_at.resize(s.efids_at.size());
  for (std::size_t l = 0; l < s.actors_at.size(); ++l) {
    std::vector<Efid> roots;
    roots.reserve(s.actors_at[l].size());
    for (ActorId a : s.actors_at[l]) roots.push_back(s.credential[a].root());
    out.efids_at[l] = sort_unique(std::move(roots));
  }
  out.knowledge.reserve(s.knowledge.size());
  for (const std::vector<IdEfid>& slot : s.knowledge) {
    std::vector<IdEfid> mapped;
    mapped.reserve(slot.size());
    for (const IdEfid& p : slot) {
      mapped.emplace_back(p.first, s.credential[m.anonymous_actor(p.second)].root());
    }
    out.knowledge.push_back(sort_unique(std::move(mapped)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transition systems

inline TransitionSystem<State0> system0(std::shared_ptr<const Model> m) {
  return {[m = std::move(m)](const State0& s) { return successors(*m, s); }};
}

inline TransitionSystem<State1> system1(std::shared_ptr<const Model> m) {
  return {[m = std::move(m)](const State1& s) { return successors(*m, s); }};
}

}  // namespace riskref::corona
