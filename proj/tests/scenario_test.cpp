#include <catch2/catch_amalgamated.hpp>

#include <riskref/corona/scenario.hpp>

#include <string>

using namespace riskref;
using namespace riskref::corona;

namespace {

const std::string kFull = R"({
  "locations": ["pub", "shop"],
  "edges": [["pub", "shop"], ["shop", "pub"]],
  "actors": {
    "Eve":   {"location": "pub",  "efids": [5, 15]},
    "Alice": {"location": "pub",  "efids": [1, 11]},
    "Bob":   {"location": "shop", "efids": [2, 12]}
  },
  "policies": {
    "pub":  [{"who": "any", "actions": ["get", "move", "put"]}],
    "shop": [{"who": ["Bob", "Alice"], "actions": ["move"]},
             {"who": "any", "actions": ["get"]}]
  },
  "attacker": "Eve",
  "level": 2,
  "bounds": {"max_states": 5000},
  "moves_require_edge": true
})";

void expect_error(const std::string& text, const std::string& needle) {
    try {
        parse_scenario(text, "doc");
        FAIL("expected ScenarioError containing: " << needle);
    } catch (const ScenarioError& e) {
        INFO(e.what());
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
}

/// kFull with one literal substring swapped out.
std::string tweaked(const std::string& from, const std::string& to) {
    std::string out = kFull;
    auto pos = out.find(from);
    REQUIRE(pos != std::string::npos);
    out.replace(pos, from.size(), to);
    return out;
}

}  // namespace

TEST_CASE("a full scenario parses into canonical form") {
    Scenario s = parse_scenario(kFull);
    CHECK(s.locations == std::vector<std::string>{"pub", "shop"});
    REQUIRE(s.actors.size() == 3);
    CHECK(s.actors[0].name == "Alice");
    CHECK(s.actors[1].name == "Bob");
    CHECK(s.actors[2].name == "Eve");
    CHECK(s.actors[2].efids == std::vector<std::uint32_t>{5, 15});
    CHECK(s.attacker == "Eve");
    CHECK(s.level == 2);
    CHECK(s.max_states == 5000);
    CHECK(s.moves_require_edge);
    REQUIRE(s.policies.count("shop") == 1);
    REQUIRE(s.policies.at("shop").size() == 2);
    // Who-lists come out sorted; "any" comes out as an absent list.
    CHECK(s.policies.at("shop")[0].who ==
          std::vector<std::string>{"Alice", "Bob"});
    CHECK_FALSE(s.policies.at("shop")[1].who.has_value());
    CHECK(s.policies.at("shop")[1].actions == std::vector<std::string>{"get"});
}

TEST_CASE("rendering and reparsing is the identity") {
    Scenario s = parse_scenario(kFull);
    CHECK(parse_scenario(render_scenario(s).dump()) == s);

    // Also without the optional fields.
    Scenario bare = parse_scenario(
        tweaked(",\n  \"bounds\": {\"max_states\": 5000},\n  \"moves_require_edge\": true",
                ""));
    CHECK_FALSE(bare.max_states.has_value());
    CHECK_FALSE(bare.moves_require_edge);
    CHECK(parse_scenario(render_scenario(bare).dump()) == bare);
}

TEST_CASE("syntax errors report origin, line and column") {
    try {
        parse_scenario("{\n  \"locations\": [}", "broken.json");
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        std::string what = e.what();
        CHECK(what.starts_with("broken.json:2:"));
    }
}

TEST_CASE("structural mistakes are rejected with the offending entity") {
    expect_error(tweaked("\"attacker\": \"Eve\",\n", ""),
                 "scenario is missing required field \"attacker\"");
    expect_error(tweaked("\"level\": 2", "\"level\": 2, \"color\": 7"),
                 "scenario has unknown field \"color\"");
    expect_error(tweaked("[\"pub\", \"shop\"],", "[],"),
                 "\"locations\" must not be empty");
    expect_error(tweaked("[\"pub\", \"shop\"],", "[\"pub\", \"pub\"],"),
                 "\"locations\" contains a duplicate name");
    expect_error(tweaked("[\"shop\", \"pub\"]", "[\"shop\", \"zoo\"]"),
                 "unknown location \"zoo\" in edge (shop, zoo)");
    expect_error(tweaked("[\"shop\", \"pub\"]", "[\"shop\"]"),
                 "edge must be a pair of location names");
    expect_error(tweaked("{\"location\": \"shop\", \"efids\": [2, 12]}",
                         "{\"location\": \"cave\", \"efids\": [2, 12]}"),
                 "actor \"Bob\" starts at unknown location \"cave\"");
    expect_error(tweaked("\"efids\": [2, 12]", "\"efids\": []"),
                 "actor \"Bob\" needs a nonempty \"efids\" list");
    expect_error(tweaked("\"efids\": [2, 12]", "\"efids\": [2, -3]"),
                 "efid of actor \"Bob\" must be a natural number");
    expect_error(tweaked("\"efids\": [2, 12]", "\"efids\": [2, 5]"),
                 "efid ranges not disjoint: efid 5 belongs to both \"Bob\" and \"Eve\"");
    expect_error(tweaked("\"pub\":  [{\"who\": \"any\"", "\"zoo\":  [{\"who\": \"any\""),
                 "policy for unknown location \"zoo\"");
    expect_error(tweaked("[\"Bob\", \"Alice\"]", "[\"Bob\", \"Mallory\"]"),
                 "policy at \"shop\" names unknown actor \"Mallory\"");
    expect_error(tweaked("\"actions\": [\"get\"]", "\"actions\": [\"fly\"]"),
                 "policy at \"shop\" lists unknown action \"fly\"");
    expect_error(tweaked("{\"who\": \"any\", \"actions\": [\"get\"]}",
                         "{\"who\": \"some\", \"actions\": [\"get\"]}"),
                 "must be \"any\" or a list of actor names");
    expect_error(tweaked("\"attacker\": \"Eve\"", "\"attacker\": \"Mallory\""),
                 "attacker \"Mallory\" is not a declared actor");
    expect_error(tweaked("\"level\": 2", "\"level\": 4"),
                 "\"level\" must be 0, 1, 2 or 3");
    expect_error(tweaked("\"level\": 2", "\"level\": -1"),
                 "\"level\" must be 0, 1, 2 or 3");
    expect_error(tweaked("{\"max_states\": 5000}", "{\"max_states\": 0}"),
                 "\"max_states\" must be at least 1");
    expect_error(tweaked("{\"max_states\": 5000}", "{\"maxstates\": 9}"),
                 "\"bounds\" has unknown field \"maxstates\"");
    expect_error(tweaked("\"moves_require_edge\": true",
                         "\"moves_require_edge\": \"yes\""),
                 "\"moves_require_edge\" must be a boolean");
    expect_error("[1, 2]", "top level must be a JSON object");
}

TEST_CASE("loading a missing file names the path") {
    try {
        load_scenario("/nonexistent/dir/x.json");
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        std::string what = e.what();
        CHECK(what.find("/nonexistent/dir/x.json") != std::string::npos);
        CHECK(what.find("cannot open file") != std::string::npos);
    }
}

TEST_CASE("models assign actor ids by name and location ids by file order") {
    auto m = make_model(parse_scenario(kFull));
    CHECK(m->actor_id("Alice") == 0);
    CHECK(m->actor_id("Bob") == 1);
    CHECK(m->actor_id("Eve") == 2);
    CHECK(m->location_id("pub") == 0);
    CHECK(m->location_id("shop") == 1);
    CHECK(m->attacker == 2);
    CHECK(m->level == Level::l2);
    CHECK(m->moves_require_edge);
    CHECK(m->max_states == 5000);
    CHECK_THROWS_AS(m->actor_id("Mallory"), std::invalid_argument);
    CHECK_THROWS_AS(m->location_id("zoo"), std::invalid_argument);

    // The compiled shop policy keeps the who-list as sorted ids.
    REQUIRE(m->policy[1].size() == 2);
    REQUIRE(m->policy[1][0].who.has_value());
    CHECK(*m->policy[1][0].who == std::vector<ActorId>{0, 1});
    CHECK(m->enables(1, 0, Action::move));
    CHECK_FALSE(m->enables(1, 2, Action::move));
    CHECK(m->enables(1, 2, Action::get));
    CHECK_FALSE(m->enables(1, 2, Action::put));
}

TEST_CASE("overrides outrank the scenario, which outranks the default") {
    Scenario s = parse_scenario(kFull);

    ModelOverrides o;
    o.level = 0;
    o.knowledge_attacker_only = true;
    o.no_standalone_put = true;
    o.moves_require_edge = false;
    o.max_states = 77;
    auto m = make_model(s, o);
    CHECK(m->level == Level::l0);
    CHECK(m->knowledge_attacker_only);
    CHECK(m->no_standalone_put);
    CHECK_FALSE(m->moves_require_edge);
    CHECK(m->max_states == 77);

    // Without overrides the scenario's own bound and switches apply.
    auto plain = make_model(s);
    CHECK(plain->max_states == 5000);
    CHECK_FALSE(plain->knowledge_attacker_only);

    // Without a scenario bound the model default stands.
    Scenario unbounded = s;
    unbounded.max_states.reset();
    CHECK(make_model(unbounded)->max_states == 10000000);

    ModelOverrides bad;
    bad.level = 9;
    CHECK_THROWS_AS(make_model(s, bad), ScenarioError);
}

TEST_CASE("a location missing from the policy map permits nothing") {
    Scenario s = parse_scenario(kFull);
    s.policies.erase("shop");
    auto m = make_model(s);
    for (auto action : {Action::get, Action::move, Action::put})
        for (ActorId a = 0; a < 3; ++a) CHECK_FALSE(m->enables(1, a, action));
    CHECK(m->enables(0, 0, Action::get));
}
