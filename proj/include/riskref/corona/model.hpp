#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "riskref/kripke.hpp"

namespace riskref::corona {

using ActorId = std::uint16_t;
using LocationId = std::uint16_t;

/// An ephemeral identifier broadcast by a device.
struct Efid {
  std::uint32_t value = 0;

  auto operator<=>(const Efid&) const = default;
};

/// A credential at rotation-capable levels: the list of ephemeral ids derived
/// from one root, plus the index of the id currently in use. The root is the
/// first entry; the list is never empty.
struct EfidList {
  std::uint32_t index = 0;
  std::vector<Efid> entries;

  const Efid& root() const { return entries.front(); }
  const Efid& current() const { return entries[index]; }

  /// Advances to the next ephemeral id. Wraps to the first entry by default;
  /// with `saturate` the index stays at the last entry once it reaches it.
  EfidList advanced(bool saturate = false) const {
    EfidList next = *this;
    if (saturate) {
      if (next.index + 1 < next.entries.size()) ++next.index;
    } else {
      next.index = (next.index + 1) % static_cast<std::uint32_t>(next.entries.size());
    }
    return next;
  }

  auto operator<=>(const EfidList&) const = default;
};

enum class Action : std::uint8_t { get = 0, move = 1, put = 2 };

inline const char* to_string(Action a) {
  switch (a) {
    case Action::get: return "get";
    case Action::move: return "move";
    case Action::put: return "put";
  }
  return "?";
}

/// Semantics level of the infrastructure:
///   0 - fixed ephemeral ids;
///   1 - rotating ids, standalone put;
///   2 - additionally, every move rotates the mover's id;
///   3 - additionally, moves require 3 actors at the target and 4 at the source.
enum class Level : std::uint8_t { l0 = 0, l1 = 1, l2 = 2, l3 = 3 };

inline int level_number(Level l) { return static_cast<int>(l); }

inline Level level_from_number(int n) {
  if (n < 0 || n > 3) throw std::invalid_argument("level must be between 0 and 3");
  return static_cast<Level>(n);
}

/// One clause of a location policy: which actors it applies to (empty
/// optional means any actor) and which actions it permits.
struct PolicyClause {
  std::optional<std::vector<ActorId>> who;
  std::array<bool, 3> actions{};

  bool allows(Action a) const { return actions[static_cast<std::size_t>(a)]; }

  bool applies_to(ActorId a) const {
    return !who.has_value() || contains_sorted(*who, a);
  }
};

/// The static half of an infrastructure: location graph, policies, opaque
/// location payloads, credential ranges, and the semantics switches. Shared
/// by every state of one built system; states carry only the mutable parts.
struct Model {
  std::vector<std::string> locations;
  std::vector<std::string> actors;
  std::vector<std::pair<LocationId, LocationId>> edges;  // directed, sorted
  std::vector<std::vector<PolicyClause>> policy;          // by location
  std::vector<std::string> location_payload;              // opaque, never interpreted
  std::vector<std::vector<Efid>> efid_entries;             // by actor; entry 0 is the root
  std::vector<LocationId> initial_location;                // by actor
  ActorId attacker = 0;
  Level level = Level::l0;

  bool knowledge_attacker_only = false;  // only the attacker performs get
  bool no_standalone_put = false;        // drop the standalone put rule
  bool moves_require_edge = false;       // moves must follow a directed edge
  bool saturate_indices = false;         // id rotation stops at the last entry
  std::size_t max_states = 10'000'000;

  // Lookups derived by finalize().
  std::vector<std::pair<Efid, ActorId>> efid_owner;  // sorted by efid
  std::vector<Efid> efid_universe;                    // sorted

  std::size_t num_locations() const { return locations.size(); }
  std::size_t num_actors() const { return actors.size(); }

  ActorId actor_id(const std::string& name) const {
    for (std::size_t i = 0; i < actors.size(); ++i) {
      if (actors[i] == name) return static_cast<ActorId>(i);
    }
    throw std::invalid_argument("unknown actor: " + name);
  }

  LocationId location_id(const std::string& name) const {
    for (std::size_t i = 0; i < locations.size(); ++i) {
      if (locations[i] == name) return static_cast<LocationId>(i);
    }
    throw std::invalid_argument("unknown location: " + name);
  }

  bool has_edge(LocationId from, LocationId to) const {
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(from, to));
  }

  /// True iff some policy clause at `l` permits `a` to perform `act`.
  bool enables(LocationId l, ActorId a, Action act) const {
    for (const PolicyClause& clause : policy[l]) {
      if (clause.allows(act) && clause.applies_to(a)) return true;
    }
    return false;
  }

  /// The actor whose credential range contains `e`. Well-defined because
  /// ranges are pairwise disjoint (enforced when a scenario is loaded).
  ActorId anonymous_actor(Efid e) const {
    auto it = std::lower_bound(efid_owner.begin(), efid_owner.end(),
                               std::make_pair(e, ActorId{0}),
                               [](const auto& lhs, const auto& rhs) {
                                 return lhs.first < rhs.first;
                               });
    if (it == efid_owner.end() || it->first != e) {
      throw std::invalid_argument("efid " + std::to_string(e.value) +
                                  " is outside every actor's credential range");
    }
    return it->second;
  }

  /// Builds the efid ownership index. Call after the per-actor entry lists
  /// are in place; entry lists must be nonempty and pairwise disjoint.
  void finalize() {
    efid_owner.clear();
    efid_universe.clear();
    for (std::size_t a = 0; a < efid_entries.size(); ++a) {
      for (const Efid& e : efid_entries[a]) {
        efid_owner.emplace_back(e, static_cast<ActorId>(a));
        efid_universe.push_back(e);
      }
    }
    std::sort(efid_owner.begin(), efid_owner.end());
    std::sort(efid_universe.begin(), efid_universe.end());
  }
};

/// A knowledge atom: this identity may be using that ephemeral id.
using IdEfid = std::pair<ActorId, Efid>;

/// Mutable state at level 0. Credentials are bare ephemeral ids; every
/// set-valued component is a sorted vector so that state comparison and
/// hashing are canonical.
struct State0 {
  std::vector<std::vector<ActorId>> actors_at;  // by location
  std::vector<Efid> credential;                 // by actor
  std::vector<std::vector<Efid>> efids_at;      // by location
  std::vector<std::vector<IdEfid>> knowledge;   // [actor * locations + location]

  auto operator<=>(const State0&) const = default;

  std::size_t num_locations() const { return actors_at.size(); }

  const std::vector<IdEfid>& kgra(ActorId a, LocationId l) const {
    return knowledge[static_cast<std::size_t>(a) * num_locations() + l];
  }

  LocationId location_of(ActorId a) const {
    for (std::size_t l = 0; l < actors_at.size(); ++l) {
      if (contains_sorted(actors_at[l], a)) return static_cast<LocationId>(l);
    }
    throw std::logic_error("actor is not placed at any location");
  }
};

/// Mutable state at levels 1 to 3: credentials are rotating efid lists.
struct State1 {
  std::vector<std::vector<ActorId>> actors_at;
  std::vector<EfidList> credential;
  std::vector<std::vector<Efid>> efids_at;
  std::vector<std::vector<IdEfid>> knowledge;

  auto operator<=>(const State1&) const = default;

  std::size_t num_locations() const { return actors_at.size(); }

  const std::vector<IdEfid>& kgra(ActorId a, LocationId l) const {
    return knowledge[static_cast<std::size_t>(a) * num_locations() + l];
  }

  LocationId location_of(ActorId a) const {
    for (std::size_t l = 0; l < actors_at.size(); ++l) {
      if (contains_sorted(actors_at[l], a)) return static_cast<LocationId>(l);
    }
    throw std::logic_error("actor is not placed at any location");
  }
};

namespace detail {

inline void hash_efid(std::size_t& seed, const Efid& e) {
  riskref::hash_combine(seed, e.value);
}

inline void hash_state_common(std::size_t& seed,
                              const std::vector<std::vector<ActorId>>& actors_at,
                              const std::vector<std::vector<Efid>>& efids_at,
                              const std::vector<std::vector<IdEfid>>& knowledge) {
  for (const auto& loc : actors_at) {
    riskref::hash_combine(seed, loc.size());
    for (ActorId a : loc) riskref::hash_combine(seed, a);
  }
  for (const auto& loc : efids_at) {
    riskref::hash_combine(seed, loc.size());
    for (const Efid& e : loc) hash_efid(seed, e);
  }
  for (const auto& slot : knowledge) {
    riskref::hash_combine(seed, slot.size());
    for (const IdEfid& p : slot) {
      riskref::hash_combine(seed, p.first);
      hash_efid(seed, p.second);
    }
  }
}

}  // namespace detail

inline std::size_t hash_of(const State0& s) {
  std::size_t seed = 0x5e0;
  for (const Efid& e : s.credential) detail::hash_efid(seed, e);
  detail::hash_state_common(seed, s.actors_at, s.efids_at, s.knowledge);
  return seed;
}

inline std::size_t hash_of(const State1& s) {
  std::size_t seed = 0x5e1;
  for (const EfidList& c : s.credential) {
    riskref::hash_combine(seed, c.index);
    for (const Efid& e : c.entries) detail::hash_efid(seed, e);
  }
  detail::hash_state_common(seed, s.actors_at, s.efids_at, s.knowledge);
  return seed;
}

}  // namespace riskref::corona

template <>
struct std::hash<riskref::corona::State0> {
  std::size_t operator()(const riskref::corona::State0& s) const {
    return riskref::corona::hash_of(s);
  }
};

template <>
struct std::hash<riskref::corona::State1> {
  std::size_t operator()(const riskref::corona::State1& s) const {
    return riskref::corona::hash_of(s);
  }
};
