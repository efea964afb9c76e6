#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <concepts>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace riskref {

/// Mixes a value into an existing hash seed (boost-style combine).
inline void hash_combine(std::size_t& seed, std::size_t value) {
  seed ^= value + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2);
}

template <class T>
inline void hash_value_into(std::size_t& seed, const T& v) {
  hash_combine(seed, std::hash<T>{}(v));
}

/// Thrown when a state-space traversal exceeds its configured bound.
/// Signals model explosion or a misconfigured scenario; callers are expected
/// to surface the bound rather than truncate results silently.
class StateLimitError : public std::runtime_error {
 public:
  explicit StateLimitError(std::size_t bound)
      : std::runtime_error("state limit exceeded: more than " +
                           std::to_string(bound) + " reachable states"),
        bound_(bound) {}

  std::size_t bound() const { return bound_; }

 private:
  std::size_t bound_;
};

/// A transition system is just a successor function over states.
///
/// The function must be deterministic and return successors sorted in the
/// canonical state order with duplicates removed. A rule that rewrites a
/// state to itself contributes the pre-state as one of its own successors;
/// traversals skip such self-loops naturally, but one-step queries see them.
template <class State>
struct TransitionSystem {
  using SuccessorFn = std::function<std::vector<State>(const State&)>;

  SuccessorFn successors;

  /// True iff `to` is a one-step successor of `from`.
  bool has_step(const State& from, const State& to) const {
    std::vector<State> succ = successors(from);
    return std::binary_search(succ.begin(), succ.end(), to);
  }
};

/// A finite path through a transition system; `states` is never empty.
/// A trace of n states represents n-1 actions.
template <class State>
struct Trace {
  std::vector<State> states;

  bool operator==(const Trace&) const = default;

  std::size_t actions() const { return states.empty() ? 0 : states.size() - 1; }

  /// Checks that consecutive states are related by one step of `sys`.
  bool is_path(const TransitionSystem<State>& sys) const {
    if (states.empty()) return false;
    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
      if (!sys.has_step(states[i], states[i + 1])) return false;
    }
    return true;
  }
};

/// Bounds and parallelism knobs for state-space traversals.
struct TraversalOptions {
  std::size_t max_states = 10'000'000;
  unsigned workers = 1;
};

/// Sorted-vector set helpers used for all deterministic state collections.
template <class State>
bool contains_sorted(const std::vector<State>& sorted, const State& s) {
  return std::binary_search(sorted.begin(), sorted.end(), s);
}

template <class State>
std::vector<State> sort_unique(std::vector<State> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template <class State>
bool is_subset_sorted(const std::vector<State>& sub, const std::vector<State>& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

/// A Kripke structure: the reachability closure of a set of initial states
/// under a successor function. `states` is exactly the least set containing
/// `init` closed under `system.successors`, sorted canonically.
template <class State, class Hash = std::hash<State>>
struct KripkeStructure {
  std::vector<State> states;
  std::vector<State> init;
  TransitionSystem<State> system;

  bool contains(const State& s) const { return contains_sorted(states, s); }
};

namespace detail {

/// One breadth-first expansion shared by closure building and witness
/// searches. Layers are expanded strictly in canonical order and merged in
/// worker-chunk order, so discovery order, parent assignment, and the
/// reported counts are identical for any worker count.
template <class State, class Hash, class Pred>
struct BfsEngine {
  const TransitionSystem<State>& sys;
  Pred pred;
  TraversalOptions opt;
  bool track_parents;

  std::unordered_set<State, Hash> visited;
  std::unordered_map<State, State, Hash> parent;
  std::vector<State> discovery;  // all states in discovery order
  std::size_t depth = 0;
  std::optional<State> hit;      // lex-least predicate hit in its layer

  BfsEngine(const TransitionSystem<State>& sys_, Pred pred_,
            const TraversalOptions& opt_, bool track_parents_)
      : sys(sys_), pred(std::move(pred_)), opt(opt_),
        track_parents(track_parents_) {}

  /// Runs to exhaustion or to the end of the first layer containing a
  /// predicate hit. Throws StateLimitError when the bound is crossed.
  void run(const std::vector<State>& init) {
    std::vector<State> layer = sort_unique(init);
    std::vector<State> hits;
    for (const State& s : layer) {
      visited.insert(s);
      discovery.push_back(s);
      if (pred(s)) hits.push_back(s);
    }
    if (visited.size() > opt.max_states) throw StateLimitError(opt.max_states);
    if (!hits.empty()) {
      hit = *std::min_element(hits.begin(), hits.end());
      return;
    }
    while (!layer.empty()) {
      std::vector<std::pair<State, std::uint32_t>> candidates = expand(layer);
      std::vector<State> next;
      for (auto& [succ, parent_idx] : candidates) {
        if (visited.contains(succ)) continue;
        visited.insert(succ);
        if (visited.size() > opt.max_states) throw StateLimitError(opt.max_states);
        if (track_parents) parent.emplace(succ, layer[parent_idx]);
        discovery.push_back(succ);
        next.push_back(succ);
        if (pred(succ)) hits.push_back(succ);
      }
      if (next.empty()) return;
      ++depth;
      if (!hits.empty()) {
        hit = *std::min_element(hits.begin(), hits.end());
        return;
      }
      std::sort(next.begin(), next.end());
      layer = std::move(next);
    }
  }

  /// Reconstructs the shortest path from an initial state to `target` by
  /// following parent links; requires track_parents.
  Trace<State> trace_to(const State& target) const {
    std::vector<State> path{target};
    auto it = parent.find(path.back());
    while (it != parent.end()) {
      path.push_back(it->second);
      it = parent.find(path.back());
    }
    std::reverse(path.begin(), path.end());
    return Trace<State>{std::move(path)};
  }

 private:
  /// Computes all (successor, parent-index) pairs of one layer. The result
  /// order equals sequential iteration of the layer regardless of how many
  /// workers share the computation.
  std::vector<std::pair<State, std::uint32_t>> expand(
      const std::vector<State>& layer) {
    unsigned workers = opt.workers == 0 ? 1 : opt.workers;
    if (workers > layer.size()) workers = static_cast<unsigned>(layer.size());

    std::vector<std::vector<std::pair<State, std::uint32_t>>> chunk_out(workers);
    auto work = [&](unsigned w) {
      std::size_t begin = layer.size() * w / workers;
      std::size_t end = layer.size() * (w + 1) / workers;
      auto& out = chunk_out[w];
      for (std::size_t i = begin; i < end; ++i) {
        for (State& t : sys.successors(layer[i])) {
          if (visited.contains(t)) continue;  // read-only snapshot prefilter
          out.emplace_back(std::move(t), static_cast<std::uint32_t>(i));
        }
      }
    };

    if (workers <= 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
      for (auto& t : threads) t.join();
    }

    std::vector<std::pair<State, std::uint32_t>> merged;
    std::size_t total = 0;
    for (auto& c : chunk_out) total += c.size();
    merged.reserve(total);
    for (auto& c : chunk_out) {
      merged.insert(merged.end(), std::make_move_iterator(c.begin()),
                    std::make_move_iterator(c.end()));
    }
    return merged;
  }
};

struct NeverPred {
  template <class State>
  bool operator()(const State&) const { return false; }
};

}  // namespace detail

/// Statistics reported alongside a completed closure.
struct ClosureStats {
  std::size_t states = 0;
  std::size_t depth = 0;  // number of BFS layers beyond the initial one
};

/// Builds the reachability closure of `init` under `sys`.
/// Throws StateLimitError if more than `opt.max_states` states are reachable.
template <class State, class Hash = std::hash<State>>
KripkeStructure<State, Hash> reachability_closure(
    std::vector<State> init, TransitionSystem<State> sys,
    const TraversalOptions& opt = {}, ClosureStats* stats = nullptr) {
  detail::BfsEngine<State, Hash, detail::NeverPred> engine(
      sys, detail::NeverPred{}, opt, /*track_parents=*/false);
  engine.run(init);
  if (stats != nullptr) {
    stats->states = engine.discovery.size();
    stats->depth = engine.depth;
  }
  KripkeStructure<State, Hash> k;
  k.states = sort_unique(std::move(engine.discovery));
  k.init = sort_unique(std::move(init));
  k.system = std::move(sys);
  return k;
}

/// Outcome of an on-the-fly reachability search (see `explore`).
template <class State>
struct ExploreResult {
  /// True iff a state satisfying the predicate is reachable from `init`.
  bool found = false;
  /// Shortest witness to the lexicographically least hit of the first layer
  /// containing one; empty when nothing was found.
  std::optional<Trace<State>> witness;
  /// States discovered, sorted canonically. When `found` is false this is
  /// the complete reachability closure; otherwise it covers all layers up to
  /// and including the hit layer.
  std::vector<State> states;
  std::size_t depth = 0;
};

/// Breadth-first search from `init` that stops at the end of the first layer
/// containing a state satisfying `pred`, without materializing the rest of
/// the closure. Verdict-equivalent to asking EF(pred) on the full closure but
/// usable when only the refutation, not the closure, is desk-sized.
/// Throws StateLimitError when the traversal bound is crossed first.
template <class State, class Hash = std::hash<State>, class Pred>
ExploreResult<State> explore(const std::vector<State>& init,
                             const TransitionSystem<State>& sys, Pred pred,
                             const TraversalOptions& opt = {}) {
  detail::BfsEngine<State, Hash, Pred> engine(sys, std::move(pred), opt,
                                              /*track_parents=*/true);
  engine.run(init);
  ExploreResult<State> r;
  r.found = engine.hit.has_value();
  if (r.found) r.witness = engine.trace_to(*engine.hit);
  r.states = sort_unique(std::move(engine.discovery));
  r.depth = engine.depth;
  return r;
}

/// Result of an EF check: EF(target) holds iff every initial state can reach
/// some state satisfying the target.
template <class State>
struct EFResult {
  bool holds = false;
  /// One shortest witness per initial state, in canonical init order.
  std::vector<Trace<State>> witnesses;
  /// The canonically least initial state with no path to the target.
  std::optional<State> failing_init;
};

/// Checks K |= EF target for a predicate target. Deterministic: witnesses are
/// shortest, with ties broken toward the canonically least reached state.
template <class State, class Hash, class Pred>
  requires std::invocable<Pred, const State&>
EFResult<State> check_EF(const KripkeStructure<State, Hash>& k, Pred pred) {
  EFResult<State> r;
  TraversalOptions opt;
  opt.max_states = k.states.size() + 1;
  for (const State& s0 : k.init) {
    detail::BfsEngine<State, Hash, Pred> engine(k.system, pred, opt,
                                                /*track_parents=*/true);
    engine.run({s0});
    if (!engine.hit.has_value()) {
      r.holds = false;
      r.failing_init = s0;
      r.witnesses.clear();
      return r;
    }
    r.witnesses.push_back(engine.trace_to(*engine.hit));
  }
  // Universally quantified over the initial states, so vacuously true when
  // there are none.
  r.holds = true;
  return r;
}

/// Checks K |= EF target for an explicit target state set (sorted or not).
template <class State, class Hash>
EFResult<State> check_EF(const KripkeStructure<State, Hash>& k,
                         std::vector<State> target) {
  std::vector<State> sorted = sort_unique(std::move(target));
  return check_EF(k, [sorted](const State& s) {
    return contains_sorted(sorted, s);
  });
}

/// Result of an AG check; the counterexample, when present, is a shortest
/// trace from some initial state to an unsafe state.
template <class State>
struct AGResult {
  bool holds = false;
  std::optional<Trace<State>> counterexample;
};

/// Checks K |= AG safe: every reachable state satisfies `safe`. Dual to EF in
/// the sense that AG(safe) holds iff no initial state has a path to a state
/// violating `safe`.
template <class State, class Hash, class Pred>
  requires std::invocable<Pred, const State&>
AGResult<State> check_AG(const KripkeStructure<State, Hash>& k, Pred safe) {
  AGResult<State> r;
  bool all_safe = true;
  for (const State& s : k.states) {
    if (!safe(s)) {
      all_safe = false;
      break;
    }
  }
  if (all_safe) {
    r.holds = true;
    return r;
  }
  TraversalOptions opt;
  opt.max_states = k.states.size() + 1;
  auto unsafe = [&safe](const State& s) { return !safe(s); };
  detail::BfsEngine<State, Hash, decltype(unsafe)> engine(
      k.system, unsafe, opt, /*track_parents=*/true);
  engine.run(k.init);
  if (!engine.hit.has_value()) {
    throw std::logic_error("check_AG: unsafe state not reachable from init; structure is not a closure");
  }
  r.holds = false;
  r.counterexample = engine.trace_to(*engine.hit);
  return r;
}

/// Shortest path inside K from `from` to a state satisfying `pred`, or
/// nullopt when none is reachable. `from` must be a state of K.
template <class State, class Hash, class Pred>
  requires std::invocable<Pred, const State&>
std::optional<Trace<State>> find_path(const KripkeStructure<State, Hash>& k,
                                      const State& from, Pred pred) {
  if (!k.contains(from)) {
    throw std::invalid_argument("find_path: source state is not in the structure");
  }
  TraversalOptions opt;
  opt.max_states = k.states.size() + 1;
  detail::BfsEngine<State, Hash, Pred> engine(k.system, pred, opt,
                                              /*track_parents=*/true);
  engine.run({from});
  if (!engine.hit.has_value()) return std::nullopt;
  return engine.trace_to(*engine.hit);
}

/// find_path overload for an explicit target set.
template <class State, class Hash>
std::optional<Trace<State>> find_path(const KripkeStructure<State, Hash>& k,
                                      const State& from,
                                      std::vector<State> target) {
  std::vector<State> sorted = sort_unique(std::move(target));
  return find_path(k, from, [sorted](const State& s) {
    return contains_sorted(sorted, s);
  });
}

}  // namespace riskref
