#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "riskref/kripke.hpp"

namespace riskref {

/// Which refinement obligation a counterexample violates.
enum class RefinementClause {
  init_membership,           // E(s) is not an initial state of the abstraction
  reachability_preservation, // E(s) cannot reach E(s') in the abstraction
};

template <class ConcState>
struct RefinementWitness {
  RefinementClause clause = RefinementClause::init_membership;
  ConcState conc_init;
  /// The reached concrete state for reachability violations.
  std::optional<ConcState> conc_state;
};

template <class ConcState>
struct RefinementVerdict {
  bool holds = false;
  std::optional<RefinementWitness<ConcState>> witness;
};

namespace detail {

/// Reachable set of one state inside an already materialized closure,
/// returned sorted.
template <class State, class Hash>
std::vector<State> reach_within(const KripkeStructure<State, Hash>& k,
                                const State& from) {
  TraversalOptions opt;
  opt.max_states = k.states.size() + 1;
  BfsEngine<State, Hash, NeverPred> engine(k.system, NeverPred{}, opt, false);
  engine.run({from});
  return sort_unique(std::move(engine.discovery));
}

}  // namespace detail

/// Checks that Kc refines K under the abstraction map E:
/// for every state s' of Kc and every initial state s of Kc that reaches s',
/// E(s) is initial in K and E(s) reaches E(s') in K.
///
/// Exhaustive over the materialized closures. The first violation in
/// canonical (initial state, reached state) order is reported as witness.
template <class AbsState, class AbsHash, class ConcState, class ConcHash, class Map>
RefinementVerdict<ConcState> check_refinement(
    const KripkeStructure<AbsState, AbsHash>& k,
    const KripkeStructure<ConcState, ConcHash>& kc, Map&& e) {
  RefinementVerdict<ConcState> verdict;
  std::map<AbsState, std::vector<AbsState>> abs_reach;
  for (const ConcState& s0 : kc.init) {
    AbsState a0 = e(s0);
    if (!contains_sorted(k.init, a0)) {
      verdict.holds = false;
      verdict.witness = RefinementWitness<ConcState>{
          RefinementClause::init_membership, s0, std::nullopt};
      return verdict;
    }
    auto [it, inserted] = abs_reach.try_emplace(a0);
    if (inserted) it->second = detail::reach_within(k, a0);
    const std::vector<AbsState>& reachable_abs = it->second;
    for (const ConcState& s1 : detail::reach_within(kc, s0)) {
      if (!contains_sorted(reachable_abs, e(s1))) {
        verdict.holds = false;
        verdict.witness = RefinementWitness<ConcState>{
            RefinementClause::reachability_preservation, s0, s1};
        return verdict;
      }
    }
  }
  verdict.holds = true;
  return verdict;
}

/// Strong simulation condition over an explicit state domain: the E-image of
/// Kc's initial states lies in K's initial states, and every one-step
/// transition s -> s' with s drawn from `domain` maps to a one-step
/// transition E(s) -> E(s') of K.
///
/// The domain parameter stands in for "all states of the concrete type",
/// which a successor function cannot enumerate; passing a superset of the
/// closure exposes failures on unreachable transitions.
template <class AbsState, class AbsHash, class ConcState, class ConcHash, class Map>
bool check_strong_mt(const KripkeStructure<AbsState, AbsHash>& k,
                     const KripkeStructure<ConcState, ConcHash>& kc, Map&& e,
                     const std::vector<ConcState>& domain) {
  for (const ConcState& s0 : kc.init) {
    if (!contains_sorted(k.init, e(s0))) return false;
  }
  for (const ConcState& s : domain) {
    AbsState a = e(s);
    std::vector<AbsState> abs_succ = k.system.successors(a);
    for (const ConcState& s1 : kc.system.successors(s)) {
      if (!contains_sorted(abs_succ, e(s1))) return false;
    }
  }
  return true;
}

/// check_strong_mt with the domain defaulted to the materialized closure.
template <class AbsState, class AbsHash, class ConcState, class ConcHash, class Map>
bool check_strong_mt(const KripkeStructure<AbsState, AbsHash>& k,
                     const KripkeStructure<ConcState, ConcHash>& kc, Map&& e) {
  return check_strong_mt(k, kc, std::forward<Map>(e), kc.states);
}

/// Weakening of check_strong_mt that only requires the one-step condition
/// for states reachable from Kc's initial states, which is exactly Kc's
/// materialized state set.
template <class AbsState, class AbsHash, class ConcState, class ConcHash, class Map>
bool check_strong_mt_prime(const KripkeStructure<AbsState, AbsHash>& k,
                           const KripkeStructure<ConcState, ConcHash>& kc,
                           Map&& e) {
  return check_strong_mt(k, kc, std::forward<Map>(e), kc.states);
}

/// Per-property outcome of a property preservation check.
template <class ConcState>
struct PropPresEntry {
  std::vector<ConcState> property;
  bool conc_ef = false;  // Kc |= EF property
  bool abs_ef = false;   // K |= EF (E-image of property)
  bool implication = false;
};

template <class ConcState>
struct PropPresResult {
  /// True iff the provisos held: the refinement itself and
  /// init K contained in the E-image of init Kc.
  bool proviso_ok = false;
  std::vector<PropPresEntry<ConcState>> entries;
  bool all_hold = false;
};

/// Property preservation: under the provisos, every EF property of the
/// concrete system transfers to its E-image in the abstraction. `props` is a
/// sample of concrete state sets; the check never enumerates the powerset.
template <class AbsState, class AbsHash, class ConcState, class ConcHash, class Map>
PropPresResult<ConcState> check_prop_pres(
    const KripkeStructure<AbsState, AbsHash>& k,
    const KripkeStructure<ConcState, ConcHash>& kc, Map&& e,
    const std::vector<std::vector<ConcState>>& props) {
  PropPresResult<ConcState> result;
  if (!check_refinement(k, kc, e).holds) return result;
  std::vector<AbsState> init_image;
  init_image.reserve(kc.init.size());
  for (const ConcState& s : kc.init) init_image.push_back(e(s));
  init_image = sort_unique(std::move(init_image));
  if (!is_subset_sorted(k.init, init_image)) return result;
  result.proviso_ok = true;
  result.all_hold = true;
  for (const std::vector<ConcState>& prop : props) {
    PropPresEntry<ConcState> entry;
    entry.property = sort_unique(prop);
    entry.conc_ef = check_EF(kc, entry.property).holds;
    std::vector<AbsState> image;
    image.reserve(entry.property.size());
    for (const ConcState& s : entry.property) image.push_back(e(s));
    entry.abs_ef = check_EF(k, sort_unique(std::move(image))).holds;
    entry.implication = !entry.conc_ef || entry.abs_ef;
    result.all_hold = result.all_hold && entry.implication;
    result.entries.push_back(std::move(entry));
  }
  return result;
}

/// Function composition for abstraction maps: (e1 . e2)(s) = e1(e2(s)).
/// The codomain of e2 must be the domain of e1.
template <class F1, class F2>
auto compose_maps(F1 e1, F2 e2) {
  return [e1 = std::move(e1), e2 = std::move(e2)](const auto& s) {
    return e1(e2(s));
  };
}

/// Diagnostics for the risk-refinement predicate
///   (K |= EF E-image(s)  and  K refined-by Kc under E)  implies  not (Kc |= EF s).
template <class ConcState>
struct RRCycleResult {
  bool predicate = false;
  bool abs_ef = false;          // K |= EF (E-image of s)
  bool refinement_holds = false;
  bool conc_ef = false;         // Kc |= EF s
  /// Witness that the concrete attack persists; present iff conc_ef holds
  /// and the antecedent holds (the case that falsifies the predicate).
  std::optional<Trace<ConcState>> conc_witness;
  /// True when the predicate holds only because the antecedent fails.
  bool vacuous = false;
};

/// Evaluates the risk-refinement predicate for a concrete target set `s`.
/// A false verdict means the hardening captured by Kc did not eliminate the
/// attack: the abstraction had it, the refinement is sound, and the concrete
/// system still reaches `s`.
template <class AbsState, class AbsHash, class ConcState, class ConcHash, class Map>
RRCycleResult<ConcState> check_rr_cycle(
    const KripkeStructure<AbsState, AbsHash>& k,
    const KripkeStructure<ConcState, ConcHash>& kc, Map&& e,
    std::vector<ConcState> s) {
  RRCycleResult<ConcState> r;
  s = sort_unique(std::move(s));
  std::vector<AbsState> image;
  image.reserve(s.size());
  for (const ConcState& x : s) image.push_back(e(x));
  r.abs_ef = check_EF(k, sort_unique(std::move(image))).holds;
  r.refinement_holds = check_refinement(k, kc, e).holds;
  EFResult<ConcState> conc = check_EF(kc, s);
  r.conc_ef = conc.holds;
  bool antecedent = r.abs_ef && r.refinement_holds;
  r.predicate = !antecedent || !r.conc_ef;
  r.vacuous = r.predicate && !antecedent;
  if (antecedent && r.conc_ef && !conc.witnesses.empty()) {
    r.conc_witness = conc.witnesses.front();
  }
  return r;
}

}  // namespace riskref
