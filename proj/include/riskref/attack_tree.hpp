#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskref/kripke.hpp"

namespace riskref {

enum class AttackKind { base, conj, disj };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::base: return "base";
    case AttackKind::conj: return "and";
    default: return "or";
  }
}

/// An attack tree over system states. Every node carries an attack pair:
/// `source` (the states the attack starts from, never empty in a valid tree)
/// and `target` (the states it establishes). Base nodes assert a one-step
/// attack; conjunctive nodes chain their children; disjunctive nodes cover
/// each source state through some child.
template <class State>
struct AttackTree {
  AttackKind kind = AttackKind::base;
  std::vector<State> source;
  std::vector<State> target;
  std::vector<AttackTree<State>> children;

  bool operator==(const AttackTree&) const = default;
};

template <class State>
AttackTree<State> make_base(std::vector<State> source, std::vector<State> target) {
  return {AttackKind::base, sort_unique(std::move(source)),
          sort_unique(std::move(target)), {}};
}

template <class State>
AttackTree<State> make_and(std::vector<AttackTree<State>> children,
                           std::vector<State> source, std::vector<State> target) {
  return {AttackKind::conj, sort_unique(std::move(source)),
          sort_unique(std::move(target)), std::move(children)};
}

template <class State>
AttackTree<State> make_or(std::vector<AttackTree<State>> children,
                          std::vector<State> source, std::vector<State> target) {
  return {AttackKind::disj, sort_unique(std::move(source)),
          sort_unique(std::move(target)), std::move(children)};
}

/// Constructive validity of an attack tree against a transition system.
///
///  - base (I, s): I nonempty and every i in I has a one-step successor in s;
///  - conjunctive (I, s) with children A1..Ak: every child valid, I a subset
///    of source(A1), target(Ai) a subset of source(Ai+1), and target(Ak) a
///    subset of s; a conjunction without children is invalid;
///  - disjunctive (I, s): I nonempty and every i in I lies in the source of
///    some valid child whose target is a subset of s.
template <class State>
bool is_valid_attack(const AttackTree<State>& a, const TransitionSystem<State>& sys) {
  if (a.source.empty()) return false;
  switch (a.kind) {
    case AttackKind::base: {
      for (const State& i : a.source) {
        std::vector<State> succ = sys.successors(i);
        bool hits = false;
        for (const State& y : succ) {
          if (contains_sorted(a.target, y)) {
            hits = true;
            break;
          }
        }
        if (!hits) return false;
      }
      return true;
    }
    case AttackKind::conj: {
      if (a.children.empty()) return false;
      for (const auto& c : a.children) {
        if (!is_valid_attack(c, sys)) return false;
      }
      if (!is_subset_sorted(a.source, a.children.front().source)) return false;
      for (std::size_t i = 0; i + 1 < a.children.size(); ++i) {
        if (!is_subset_sorted(a.children[i].target, a.children[i + 1].source)) {
          return false;
        }
      }
      return is_subset_sorted(a.children.back().target, a.target);
    }
    case AttackKind::disj: {
      std::vector<bool> child_ok;
      child_ok.reserve(a.children.size());
      for (const auto& c : a.children) child_ok.push_back(is_valid_attack(c, sys));
      for (const State& i : a.source) {
        bool covered = false;
        for (std::size_t j = 0; j < a.children.size(); ++j) {
          if (child_ok[j] && contains_sorted(a.children[j].source, i) &&
              is_subset_sorted(a.children[j].target, a.target)) {
            covered = true;
            break;
          }
        }
        if (!covered) return false;
      }
      return true;
    }
  }
  return false;
}

/// Turns a trace s0 .. sn into the conjunctive attack
/// AND[N({s0}->{s1}); ..; N({sn-1}->{sn})]({s0}->{sn}).
/// A trace with fewer than two states has no step to attack with.
template <class State>
AttackTree<State> synthesize_attack(const Trace<State>& trace) {
  if (trace.states.size() < 2) {
    throw std::invalid_argument("synthesize_attack: trace has no transitions");
  }
  std::vector<AttackTree<State>> steps;
  steps.reserve(trace.states.size() - 1);
  for (std::size_t i = 0; i + 1 < trace.states.size(); ++i) {
    steps.push_back(make_base<State>({trace.states[i]}, {trace.states[i + 1]}));
  }
  return make_and<State>(std::move(steps), {trace.states.front()},
                         {trace.states.back()});
}

enum class CorrectnessStatus {
  skipped_invalid,      // tree is not valid; EF cross-check not applicable
  agreement,            // tree valid and EF(target) holds from every init
  soundness_violation,  // tree valid but EF(target) fails: adequacy is broken
};

template <class State>
struct CorrectnessResult {
  CorrectnessStatus status = CorrectnessStatus::skipped_invalid;
  EFResult<State> ef;
};

/// Cross-checks tree validity against model checking: a valid attack whose
/// sources are initial states must imply EF(target). Disagreement indicates a
/// defect in either the calculus implementation or the search.
template <class State, class Hash>
CorrectnessResult<State> correctness_check(const AttackTree<State>& a,
                                           const KripkeStructure<State, Hash>& k) {
  if (!is_subset_sorted(a.source, k.init)) {
    throw std::invalid_argument(
        "correctness_check: attack source must be a subset of the initial states");
  }
  CorrectnessResult<State> r;
  if (!is_valid_attack(a, k.system)) {
    r.status = CorrectnessStatus::skipped_invalid;
    return r;
  }
  r.ef = check_EF(k, a.target);
  r.status = r.ef.holds ? CorrectnessStatus::agreement
                        : CorrectnessStatus::soundness_violation;
  return r;
}

/// Same judgment as `correctness_check` evaluated by on-the-fly search, for
/// systems whose closure is too large to materialize. The verdict coincides
/// with running check_EF on the full closure: per initial state the search
/// either finds a shortest path into the target or exhausts that state's
/// reachable set.
template <class State, class Hash = std::hash<State>>
CorrectnessResult<State> correctness_check_search(
    const AttackTree<State>& a, const std::vector<State>& init,
    const TransitionSystem<State>& sys, const TraversalOptions& opt = {}) {
  if (!is_subset_sorted(a.source, sort_unique(init))) {
    throw std::invalid_argument(
        "correctness_check: attack source must be a subset of the initial states");
  }
  CorrectnessResult<State> r;
  if (!is_valid_attack(a, sys)) {
    r.status = CorrectnessStatus::skipped_invalid;
    return r;
  }
  const std::vector<State>& target = a.target;
  auto in_target = [&target](const State& s) { return contains_sorted(target, s); };
  r.ef.holds = true;
  for (const State& s0 : sort_unique(init)) {
    ExploreResult<State> e = explore<State, Hash>({s0}, sys, in_target, opt);
    if (!e.found) {
      r.ef.holds = false;
      r.ef.failing_init = s0;
      r.ef.witnesses.clear();
      break;
    }
    r.ef.witnesses.push_back(*e.witness);
  }
  r.status = r.ef.holds ? CorrectnessStatus::agreement
                        : CorrectnessStatus::soundness_violation;
  return r;
}

/// Replaces the subtree at `path` (a sequence of child indices, empty for the
/// root) with `replacement`, which must carry the same attack pair.
template <class State>
AttackTree<State> refine_tree(AttackTree<State> tree,
                              const std::vector<std::size_t>& path,
                              const AttackTree<State>& replacement) {
  AttackTree<State>* node = &tree;
  for (std::size_t idx : path) {
    if (idx >= node->children.size()) {
      throw std::invalid_argument("refine_tree: path leaves the tree");
    }
    node = &node->children[idx];
  }
  if (node->source != replacement.source || node->target != replacement.target) {
    throw std::invalid_argument(
        "refine_tree: replacement must carry the attack pair of the replaced node");
  }
  *node = replacement;
  return tree;
}

namespace detail {

template <class State>
void collect_states(const AttackTree<State>& a, std::vector<State>& out) {
  out.insert(out.end(), a.source.begin(), a.source.end());
  out.insert(out.end(), a.target.begin(), a.target.end());
  for (const auto& c : a.children) collect_states(c, out);
}

template <class State>
void render_node(const AttackTree<State>& a, const std::vector<State>& labels,
                 std::ostringstream& os) {
  auto render_set = [&](const std::vector<State>& set) {
    os << '{';
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (i != 0) os << ',';
      auto it = std::lower_bound(labels.begin(), labels.end(), set[i]);
      os << 's' << (it - labels.begin());
    }
    os << '}';
  };
  auto render_pair = [&]() {
    os << '(';
    render_set(a.source);
    os << "->";
    render_set(a.target);
    os << ')';
  };
  switch (a.kind) {
    case AttackKind::base:
      os << 'N';
      render_pair();
      break;
    case AttackKind::conj:
    case AttackKind::disj:
      os << (a.kind == AttackKind::conj ? "AND[" : "OR[");
      for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (i != 0) os << "; ";
        render_node(a.children[i], labels, os);
      }
      os << ']';
      render_pair();
      break;
  }
}

}  // namespace detail

/// Renders a tree as text, e.g. AND[N({s0}->{s1}); N({s1}->{s2})]({s0}->{s2}).
/// States are labelled s0, s1, .. in the canonical order of all states that
/// occur in the tree, so the rendering is stable across runs.
template <class State>
std::string render_attack(const AttackTree<State>& a) {
  std::vector<State> labels;
  detail::collect_states(a, labels);
  labels = sort_unique(std::move(labels));
  std::ostringstream os;
  detail::render_node(a, labels, os);
  return os.str();
}

}  // namespace riskref
