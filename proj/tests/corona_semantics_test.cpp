#include <catch2/catch_amalgamated.hpp>

#include <riskref/corona/scenario.hpp>
#include <riskref/corona/semantics.hpp>
#include <riskref/kripke.hpp>
#include <riskref/refinement.hpp>

#include <memory>
#include <string>
#include <vector>

using namespace riskref;
using namespace riskref::corona;

namespace {

std::string json_level(const std::string& tmpl, int level) {
    std::string out = tmpl;
    const std::string needle = "\"level\": L";
    auto pos = out.find(needle);
    REQUIRE(pos != std::string::npos);
    out.replace(pos, needle.size(), "\"level\": " + std::to_string(level));
    return out;
}

std::vector<Efid> efids(std::initializer_list<std::uint32_t> values) {
    std::vector<Efid> out;
    for (std::uint32_t v : values) out.push_back(Efid{v});
    return out;
}

const std::string kBundledTemplate = R"({
  "locations": ["pub", "shop"],
  "edges": [["pub", "shop"], ["shop", "pub"]],
  "actors": {
    "Alice":  {"location": "pub",  "efids": [1, 11, 21]},
    "Bob":    {"location": "pub",  "efids": [2, 12, 22]},
    "Charly": {"location": "shop", "efids": [3, 13, 23]},
    "David":  {"location": "shop", "efids": [4, 14, 24]},
    "Eve":    {"location": "pub",  "efids": [5, 15, 25]}
  },
  "policies": {
    "pub":  [{"who": "any", "actions": ["get", "move", "put"]}],
    "shop": [{"who": "any", "actions": ["get", "move", "put"]}]
  },
  "attacker": "Eve",
  "level": L
})";

const std::string kDeskTemplate = R"({
  "locations": ["pub", "shop"],
  "edges": [["pub", "shop"], ["shop", "pub"]],
  "actors": {
    "Alice": {"location": "pub", "efids": [1, 11, 21]},
    "Bob":   {"location": "pub", "efids": [2, 12, 22]},
    "Eve":   {"location": "pub", "efids": [5, 15, 25]}
  },
  "policies": {
    "pub":  [{"who": "any", "actions": ["get", "move", "put"]}],
    "shop": [{"who": "any", "actions": ["get", "move", "put"]}]
  },
  "attacker": "Eve",
  "level": L
})";

std::shared_ptr<const Model> bundled(int level, ModelOverrides o = {}) {
    return make_model(parse_scenario(json_level(kBundledTemplate, level)), o);
}

std::shared_ptr<const Model> desk(int level, ModelOverrides o = {}) {
    return make_model(parse_scenario(json_level(kDeskTemplate, level)), o);
}

ModelOverrides attacker_only() {
    ModelOverrides o;
    o.knowledge_attacker_only = true;
    return o;
}

ModelOverrides attacker_only_no_put() {
    ModelOverrides o;
    o.knowledge_attacker_only = true;
    o.no_standalone_put = true;
    return o;
}

// Actor ids follow name order; locations follow file order.
constexpr ActorId kAlice = 0;
constexpr ActorId kBob = 1;
constexpr ActorId kEveDesk = 2;
constexpr ActorId kEve = 4;
constexpr LocationId kPub = 0;
constexpr LocationId kShop = 1;

ActionStep get_at(ActorId a, LocationId l) { return {Action::get, a, l, l}; }
ActionStep move_to(ActorId a, LocationId from, LocationId to) {
    return {Action::move, a, from, to};
}
ActionStep put_at(ActorId a, LocationId l) { return {Action::put, a, l, l}; }

template <class StateT>
std::size_t count_scorona(const Model& m, const std::vector<StateT>& states) {
    std::size_t n = 0;
    for (const StateT& s : states)
        if (scorona(m, s)) ++n;
    return n;
}

}  // namespace

TEST_CASE("the initial state publishes present ids and knows nothing") {
    auto m = bundled(0);
    State0 s = initial_state0(*m);
    CHECK(s.actors_at[kPub] == std::vector<ActorId>{kAlice, kBob, kEve});
    CHECK(s.actors_at[kShop] == std::vector<ActorId>{2, 3});
    CHECK(s.credential == efids({1, 2, 3, 4, 5}));
    CHECK(s.efids_at[kPub] == efids({1, 2, 5}));
    CHECK(s.efids_at[kShop] == efids({3, 4}));
    for (std::size_t a = 0; a < m->num_actors(); ++a)
        for (std::size_t l = 0; l < m->num_locations(); ++l)
            CHECK(s.kgra(static_cast<ActorId>(a), static_cast<LocationId>(l)).empty());

    auto m1 = bundled(1);
    State1 s1 = initial_state1(*m1);
    CHECK(s1.credential[kEve].entries == efids({5, 15, 25}));
    CHECK(s1.credential[kEve].index == 0);
    CHECK(s1.efids_at[kPub] == efids({1, 2, 5}));
}

TEST_CASE("get caches the full product of the location's actors and ids") {
    auto m = bundled(0);
    State0 s = initial_state0(*m);
    auto got = apply_action(*m, s, get_at(kEve, kPub));
    REQUIRE(got.has_value());
    std::vector<IdEfid> expect;
    for (ActorId x : {kAlice, kBob, kEve})
        for (Efid e : efids({1, 2, 5})) expect.emplace_back(x, e);
    CHECK(got->kgra(kEve, kPub) == sort_unique(std::move(expect)));
    // Nobody else's slot moved.
    CHECK(got->kgra(kAlice, kPub).empty());
    CHECK(got->kgra(kEve, kShop).empty());
}

TEST_CASE("a later get replaces the slot instead of accumulating") {
    auto m = bundled(0);
    State0 s = initial_state0(*m);
    s = *apply_action(*m, s, get_at(kEve, kPub));
    s = *apply_action(*m, s, move_to(kBob, kPub, kShop));
    s = *apply_action(*m, s, get_at(kEve, kPub));
    std::vector<IdEfid> expect;
    for (ActorId x : {kAlice, kEve})
        for (Efid e : efids({1, 5})) expect.emplace_back(x, e);
    CHECK(s.kgra(kEve, kPub) == sort_unique(std::move(expect)));
}

TEST_CASE("the knowledge switch limits get to the attacker") {
    auto m = bundled(0, attacker_only());
    State0 s = initial_state0(*m);
    CHECK(action_applicable(*m, s, get_at(kEve, kPub)));
    CHECK_FALSE(action_applicable(*m, s, get_at(kAlice, kPub)));

    auto all = bundled(0);
    CHECK(action_applicable(*all, initial_state0(*all), get_at(kAlice, kPub)));
}

TEST_CASE("moves carry the current id at levels 0 and 1") {
    auto m0 = bundled(0);
    State0 s0 = initial_state0(*m0);
    State0 t0 = *apply_action(*m0, s0, move_to(kBob, kPub, kShop));
    CHECK(t0.actors_at[kPub] == std::vector<ActorId>{kAlice, kEve});
    CHECK(t0.actors_at[kShop] == std::vector<ActorId>{kBob, 2, 3});
    CHECK(t0.efids_at[kPub] == efids({1, 5}));
    CHECK(t0.efids_at[kShop] == efids({2, 3, 4}));
    CHECK(t0.knowledge == s0.knowledge);

    auto m1 = bundled(1);
    State1 s1 = initial_state1(*m1);
    State1 t1 = *apply_action(*m1, s1, move_to(kBob, kPub, kShop));
    CHECK(t1.credential[kBob].index == 0);
    CHECK(t1.efids_at[kShop] == efids({2, 3, 4}));
}

TEST_CASE("moves rotate the id at level 2") {
    auto m = desk(2);
    State1 s = initial_state1(*m);
    State1 t = *apply_action(*m, s, move_to(kBob, kPub, kShop));
    CHECK(t.credential[kBob].index == 1);
    CHECK(t.credential[kBob].current() == Efid{12});
    CHECK(t.efids_at[kPub] == efids({1, 5}));
    CHECK(t.efids_at[kShop] == efids({12}));
}

TEST_CASE("a move to the current location is derivable and changes nothing") {
    auto m = bundled(0);
    State0 s = initial_state0(*m);
    auto stay = apply_action(*m, s, move_to(kBob, kPub, kPub));
    REQUIRE(stay.has_value());
    CHECK(*stay == s);
    CHECK(contains_sorted(successors(*m, s), s));
}

TEST_CASE("level 3 occupancy bounds gate moves on the pre-state") {
    // Five actors can never satisfy 4-at-source plus 3-at-target, so every
    // move is derivable yet keeps the state.
    auto m = bundled(3);
    State1 s = initial_state1(*m);
    auto stuck = apply_action(*m, s, move_to(kBob, kPub, kShop));
    REQUIRE(stuck.has_value());
    CHECK(*stuck == s);

    auto d = desk(3);
    State1 ds = initial_state1(*d);
    auto dstuck = apply_action(*d, ds, move_to(kBob, kPub, kShop));
    REQUIRE(dstuck.has_value());
    CHECK(*dstuck == ds);
}

TEST_CASE("put rotates the actor's id in place from level 1 on") {
    auto m = desk(1);
    State1 s = initial_state1(*m);
    State1 t = *apply_action(*m, s, put_at(kEveDesk, kPub));
    CHECK(t.credential[kEveDesk].index == 1);
    CHECK(t.credential[kEveDesk].current() == Efid{15});
    CHECK(t.efids_at[kPub] == efids({1, 2, 15}));
    CHECK(t.actors_at == s.actors_at);
}

TEST_CASE("put at level 0 is a derivable identity step") {
    auto m = bundled(0);
    State0 s = initial_state0(*m);
    auto t = apply_action(*m, s, put_at(kBob, kPub));
    REQUIRE(t.has_value());
    CHECK(*t == s);
    CHECK(contains_sorted(successors(*m, s), s));
}

TEST_CASE("credential indices wrap by default and clamp when saturating") {
    auto m = desk(1);
    State1 s = initial_state1(*m);
    for (int i = 0; i < 3; ++i) s = *apply_action(*m, s, put_at(kEveDesk, kPub));
    CHECK(s.credential[kEveDesk].index == 0);
    CHECK(s.efids_at[kPub] == efids({1, 2, 5}));

    Model clamped = *m;
    clamped.saturate_indices = true;
    State1 c = initial_state1(clamped);
    for (int i = 0; i < 4; ++i) c = *apply_action(clamped, c, put_at(kEveDesk, kPub));
    CHECK(c.credential[kEveDesk].index == 2);
    CHECK(c.credential[kEveDesk].current() == Efid{25});
}

TEST_CASE("no_standalone_put removes the put rule entirely") {
    auto m = desk(1, attacker_only_no_put());
    State1 s = initial_state1(*m);
    for (std::size_t a = 0; a < m->num_actors(); ++a)
        CHECK_FALSE(action_applicable(*m, s, put_at(static_cast<ActorId>(a), kPub)));
}

TEST_CASE("moves_require_edge keeps moves on the location graph") {
    const std::string text = R"({
      "locations": ["pub", "shop", "attic"],
      "edges": [["pub", "shop"], ["shop", "pub"]],
      "actors": {
        "Alice": {"location": "pub", "efids": [1]},
        "Eve":   {"location": "pub", "efids": [5]}
      },
      "policies": {
        "pub":   [{"who": "any", "actions": ["get", "move", "put"]}],
        "shop":  [{"who": "any", "actions": ["get", "move", "put"]}],
        "attic": [{"who": "any", "actions": ["move"]}]
      },
      "attacker": "Eve",
      "level": 0
    })";
    auto scenario = parse_scenario(text);
    auto lax = make_model(scenario);
    State0 s = initial_state0(*lax);
    CHECK(action_applicable(*lax, s, move_to(kAlice, 0, 2)));

    ModelOverrides o;
    o.moves_require_edge = true;
    auto strict = make_model(scenario, o);
    CHECK_FALSE(action_applicable(*strict, s, move_to(kAlice, 0, 2)));
    CHECK(action_applicable(*strict, s, move_to(kAlice, 0, 1)));
}

TEST_CASE("policy who-lists bind per actor") {
    const std::string text = R"({
      "locations": ["pub", "shop"],
      "edges": [["pub", "shop"]],
      "actors": {
        "Alice": {"location": "pub", "efids": [1]},
        "Bob":   {"location": "pub", "efids": [2]},
        "Eve":   {"location": "pub", "efids": [5]}
      },
      "policies": {
        "pub":  [{"who": "any", "actions": ["get", "put"]}],
        "shop": [{"who": ["Bob"], "actions": ["move"]}]
      },
      "attacker": "Eve",
      "level": 0
    })";
    auto m = make_model(parse_scenario(text));
    State0 s = initial_state0(*m);
    CHECK(action_applicable(*m, s, move_to(kBob, kPub, kShop)));
    CHECK_FALSE(action_applicable(*m, s, move_to(kAlice, kPub, kShop)));
    // No clause at pub grants move, so nobody moves back.
    State0 t = *apply_action(*m, s, move_to(kBob, kPub, kShop));
    CHECK_FALSE(action_applicable(*m, t, move_to(kBob, kShop, kPub)));
}

TEST_CASE("a location without policy clauses enables nothing") {
    const std::string text = R"({
      "locations": ["pub", "void"],
      "edges": [["pub", "void"]],
      "actors": {"Eve": {"location": "pub", "efids": [5]}},
      "policies": {"pub": [{"who": "any", "actions": ["get"]}]},
      "attacker": "Eve",
      "level": 0
    })";
    auto m = make_model(parse_scenario(text));
    State0 s = initial_state0(*m);
    CHECK(action_applicable(*m, s, get_at(0, 0)));
    CHECK_FALSE(action_applicable(*m, s, move_to(0, 0, 1)));
    CHECK_FALSE(action_applicable(*m, s, put_at(0, 0)));
}

TEST_CASE("identifiable means exactly one pair carries the id") {
    std::vector<IdEfid> pairs{{0, Efid{1}}, {0, Efid{5}}, {1, Efid{5}}};
    CHECK(identifiable(pairs, Efid{1}));
    CHECK_FALSE(identifiable(pairs, Efid{5}));
    CHECK_FALSE(identifiable(pairs, Efid{9}));
    CHECK_FALSE(identifiable({}, Efid{1}));
}

TEST_CASE("replaying the canonical four actions flips the verdict by level") {
    std::vector<ActionStep> pattern{
        get_at(kEve, kPub),
        move_to(kBob, kPub, kShop),
        move_to(kEve, kPub, kShop),
        get_at(kEve, kShop),
    };

    auto m0 = bundled(0, attacker_only());
    auto r0 = replay_actions(*m0, initial_state0(*m0), pattern);
    REQUIRE(r0.has_value());
    CHECK(scorona(*m0, *r0));
    // The pub and shop views intersect to {(Bob,2), (Bob,5)}, pinning both
    // ids down to Bob.
    CHECK_FALSE(global_policy(*m0, *r0, Efid{2}));
    CHECK_FALSE(global_policy(*m0, *r0, Efid{5}));
    CHECK(global_policy(*m0, *r0, Efid{1}));
    CHECK(global_policy(*m0, *r0, Efid{3}));
    CHECK(global_policy(*m0, *r0, Efid{11}));

    auto m1 = bundled(1, attacker_only());
    auto r1 = replay_actions(*m1, initial_state1(*m1), pattern);
    REQUIRE(r1.has_value());
    CHECK(scorona(*m1, *r1));

    // Level 2 rotates on the moves, so the shop view shares no id with pub.
    auto m2 = bundled(2, attacker_only());
    auto r2 = replay_actions(*m2, initial_state1(*m2), pattern);
    REQUIRE(r2.has_value());
    CHECK_FALSE(scorona(*m2, *r2));

    // Level 3 keeps every move in place, so Eve never reaches the shop and
    // the final get is not derivable there.
    auto m3 = bundled(3, attacker_only());
    CHECK_FALSE(replay_actions(*m3, initial_state1(*m3), pattern).has_value());
}

TEST_CASE("small closures match their frozen sizes and verdicts") {
    TraversalOptions opt;

    SECTION("three actors, fixed ids") {
        auto m = desk(0, attacker_only());
        ClosureStats stats;
        auto k = reachability_closure<State0>({initial_state0(*m)}, system0(m), opt,
                                              &stats);
        CHECK(stats.states == 200);
        CHECK(stats.depth == 8);
        CHECK(count_scorona(*m, k.states) == 128);
        CHECK_FALSE(check_AG(k, [&](const State0& s) { return !scorona(*m, s); }).holds);
    }

    SECTION("three actors, level 3") {
        auto m = desk(3, attacker_only());
        ClosureStats stats;
        auto k = reachability_closure<State1>({initial_state1(*m)}, system1(m), opt,
                                              &stats);
        CHECK(stats.states == 756);
        CHECK(stats.depth == 13);
        CHECK(check_AG(k, [&](const State1& s) { return !scorona(*m, s); }).holds);
    }

    SECTION("five actors, fixed ids") {
        auto m = bundled(0, attacker_only());
        ClosureStats stats;
        auto k = reachability_closure<State0>({initial_state0(*m)}, system0(m), opt,
                                              &stats);
        CHECK(stats.states == 9248);
        CHECK(stats.depth == 12);
    }

    SECTION("five actors, level 3") {
        auto m = bundled(3, attacker_only());
        ClosureStats stats;
        auto k = reachability_closure<State1>({initial_state1(*m)}, system1(m), opt,
                                              &stats);
        CHECK(stats.states == 6804);
        CHECK(stats.depth == 17);
        CHECK(check_AG(k, [&](const State1& s) { return !scorona(*m, s); }).holds);
    }
}

TEST_CASE("the shortest fixed-id attack isolates a victim before looking") {
    auto m = bundled(0, attacker_only());
    auto r = explore<State0>({initial_state0(*m)}, system0(m),
                             [&](const State0& s) { return scorona(*m, s); });
    REQUIRE(r.found);
    REQUIRE(r.witness->states.size() == 3);
    CHECK(annotate_step(*m, r.witness->states[0], r.witness->states[1]) ==
          "move(Bob:pub->shop)");
    CHECK(annotate_step(*m, r.witness->states[1], r.witness->states[2]) ==
          "get(Eve@pub)");
}

TEST_CASE("trace annotation picks the least rendering among producers") {
    // From the initial bundled state, put(Alice@pub) and put(Bob@pub) both
    // produce the state itself at level 0, as does move-in-place; the least
    // rendered form wins.
    auto m = bundled(0);
    State0 s = initial_state0(*m);
    auto label = annotate_step(*m, s, s);
    REQUIRE(label.has_value());
    CHECK(*label == "move(Alice:pub->pub)");
    CHECK_FALSE(annotate_step(*m, s, *apply_action(*m, s, get_at(kEve, kPub)))
                    .value()
                    .empty());
    // A pair with no producing instance annotates to nothing.
    State0 foreign = s;
    foreign.credential[0] = Efid{99};
    CHECK_FALSE(annotate_step(*m, s, foreign).has_value());
}

TEST_CASE("refmap commutes with replay down to the fixed abstraction") {
    auto m1 = desk(1);
    auto m0 = desk(0);
    CHECK(refmap(*m1, initial_state1(*m1)) == initial_state0(*m0));

    std::vector<ActionStep> script{
        put_at(kEveDesk, kPub),
        get_at(kEveDesk, kPub),
        move_to(kEveDesk, kPub, kShop),
        get_at(kEveDesk, kShop),
    };
    auto conc = replay_actions(*m1, initial_state1(*m1), script);
    auto abs = replay_actions(*m0, initial_state0(*m0), script);
    REQUIRE(conc.has_value());
    REQUIRE(abs.has_value());
    CHECK(refmap(*m1, *conc) == *abs);

    // The rotated id 15 is recorded in the concrete knowledge but maps back
    // to Eve's root 5.
    std::vector<IdEfid> slot = conc->kgra(kEveDesk, kPub);
    CHECK(contains_sorted(slot, IdEfid{kEveDesk, Efid{15}}));
    CHECK(contains_sorted(abs->kgra(kEveDesk, kPub), IdEfid{kEveDesk, Efid{5}}));
}

TEST_CASE("rotation-free level 1 strongly simulates its fixed abstraction") {
    auto m0 = desk(0, attacker_only_no_put());
    auto m1 = desk(1, attacker_only_no_put());
    auto k0 = reachability_closure<State0>({initial_state0(*m0)}, system0(m0));
    auto k1 = reachability_closure<State1>({initial_state1(*m1)}, system1(m1));
    CHECK(k0.states.size() == k1.states.size());
    auto e = [&m1](const State1& s) { return refmap(*m1, s); };
    CHECK(check_strong_mt_prime(k0, k1, e));
    CHECK(check_refinement(k0, k1, e).holds);
}

TEST_CASE("every reachable state keeps the visible ids consistent") {
    // Both closures rotate credentials through puts, so the visible-id sets
    // are exercised away from their initial values.
    for (auto m : {desk(3, attacker_only()), bundled(3, attacker_only())}) {
        auto k = reachability_closure<State1>({initial_state1(*m)}, system1(m));
        std::size_t bad = 0;
        for (const State1& s : k.states) {
            for (std::size_t l = 0; l < m->num_locations(); ++l) {
                std::vector<Efid> currents;
                for (ActorId a : s.actors_at[l])
                    currents.push_back(s.credential[a].current());
                if (s.efids_at[l] != sort_unique(std::move(currents))) ++bad;
            }
            std::size_t placed = 0;
            for (const auto& v : s.actors_at) placed += v.size();
            if (placed != m->num_actors()) ++bad;
        }
        CHECK(bad == 0);
    }
}

TEST_CASE("efid ownership resolves strays with a clear error") {
    auto m = desk(1);
    CHECK(m->anonymous_actor(Efid{15}) == kEveDesk);
    CHECK(m->anonymous_actor(Efid{1}) == kAlice);
    CHECK_THROWS_AS(m->anonymous_actor(Efid{99}), std::invalid_argument);
}

TEST_CASE("level numbers convert both ways and reject strays") {
    CHECK(level_number(level_from_number(2)) == 2);
    CHECK(level_from_number(0) == Level::l0);
    CHECK_THROWS_AS(level_from_number(4), std::invalid_argument);
    CHECK_THROWS_AS(level_from_number(-1), std::invalid_argument);
}
