#pragma once

// Scenario documents: the JSON front end for contact-tracing models.
//
// A scenario file names the locations, the directed edges between them, the
// actors with their credential lists, the per-location policies, the attacker,
// and the analysis level.  load_scenario/parse_scenario validate the document
// and report precise errors; make_model combines a validated Scenario with
// command-line overrides into the immutable Model the semantics consume.

#include <riskref/corona/model.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace riskref::corona {

using json = nlohmann::json;

/// Raised for malformed or invalid scenario documents.  The message carries
/// the origin (file name), a line:column pair for parse errors, and the
/// offending entity for validation errors.
class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& message) : std::runtime_error(message) {}
};

/// One policy clause as written in the file: either open to any actor
/// (who == nullopt) or restricted to a list of names, granting a set of
/// actions.  Names and actions are kept sorted.
struct ScenarioClause {
    std::optional<std::vector<std::string>> who;
    std::vector<std::string> actions;

    bool operator==(const ScenarioClause&) const = default;
};

/// One actor: starting location and personal credential list.
struct ScenarioActor {
    std::string name;
    std::string location;
    std::vector<std::uint32_t> efids;

    bool operator==(const ScenarioActor&) const = default;
};

/// A validated scenario.  Locations keep file order; actors are sorted by
/// name; policies hold exactly the locations the file mentioned (a location
/// absent from the map has no clauses, so no action is permitted there).
struct Scenario {
    std::vector<std::string> locations;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<ScenarioActor> actors;
    std::map<std::string, std::vector<ScenarioClause>> policies;
    std::string attacker;
    int level = 0;
    std::optional<std::uint64_t> max_states;
    bool moves_require_edge = false;

    bool operator==(const Scenario&) const = default;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

[[noreturn]] inline void fail(const std::string& origin, const std::string& message) {
    throw ScenarioError(origin + ": " + message);
}

inline void require_keys(const std::string& origin, const json& object,
                         const std::vector<std::string>& required,
                         const std::vector<std::string>& optional,
                         const std::string& where) {
    for (const auto& key : required) {
        if (!object.contains(key)) fail(origin, where + " is missing required field \"" + key + "\"");
    }
    for (const auto& item : object.items()) {
        const std::string& key = item.key();
        bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                     std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known) fail(origin, where + " has unknown field \"" + key + "\"");
    }
}

inline std::vector<std::string> string_list(const std::string& origin, const json& value,
                                            const std::string& where) {
    if (!value.is_array()) fail(origin, where + " must be a list of strings");
    std::vector<std::string> out;
    for (const auto& entry : value) {
        if (!entry.is_string()) fail(origin, where + " must be a list of strings");
        out.push_back(entry.get<std::string>());
    }
    return out;
}

inline std::uint64_t natural(const std::string& origin, const json& value, const std::string& where) {
    if (!value.is_number_unsigned()) fail(origin, where + " must be a natural number");
    return value.get<std::uint64_t>();
}

} // namespace detail

/// Parses and validates a scenario document.  `origin` names the source in
/// error messages (typically the file path).
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>") {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, column] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ScenarioError(origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
                            ": " + e.what());
    }
    if (!doc.is_object()) detail::fail(origin, "top level must be a JSON object");
    detail::require_keys(origin, doc,
                         {"locations", "edges", "actors", "policies", "attacker", "level"},
                         {"bounds", "moves_require_edge"}, "scenario");

    Scenario s;
    s.locations = detail::string_list(origin, doc["locations"], "\"locations\"");
    if (s.locations.empty()) detail::fail(origin, "\"locations\" must not be empty");
    std::set<std::string> location_names(s.locations.begin(), s.locations.end());
    if (location_names.size() != s.locations.size())
        detail::fail(origin, "\"locations\" contains a duplicate name");

    if (!doc["edges"].is_array()) detail::fail(origin, "\"edges\" must be a list of name pairs");
    for (const auto& entry : doc["edges"]) {
        auto pair = detail::string_list(origin, entry, "edge");
        if (pair.size() != 2) detail::fail(origin, "edge must be a pair of location names");
        for (const auto& endpoint : pair)
            if (!location_names.contains(endpoint))
                detail::fail(origin, "unknown location \"" + endpoint + "\" in edge (" + pair[0] +
                                         ", " + pair[1] + ")");
        s.edges.emplace_back(pair[0], pair[1]);
    }

    if (!doc["actors"].is_object()) detail::fail(origin, "\"actors\" must map names to actor objects");
    std::map<std::uint32_t, std::string> efid_owners;
    for (const auto& item : doc["actors"].items()) {
        const std::string& name = item.key();
        const json& body = item.value();
        if (!body.is_object()) detail::fail(origin, "actor \"" + name + "\" must be an object");
        detail::require_keys(origin, body, {"location", "efids"}, {}, "actor \"" + name + "\"");
        ScenarioActor actor;
        actor.name = name;
        if (!body["location"].is_string())
            detail::fail(origin, "actor \"" + name + "\" location must be a name");
        actor.location = body["location"].get<std::string>();
        if (!location_names.contains(actor.location))
            detail::fail(origin, "actor \"" + name + "\" starts at unknown location \"" +
                                     actor.location + "\"");
        if (!body["efids"].is_array() || body["efids"].empty())
            detail::fail(origin, "actor \"" + name + "\" needs a nonempty \"efids\" list");
        for (const auto& value : body["efids"]) {
            auto efid = detail::natural(origin, value, "efid of actor \"" + name + "\"");
            if (efid > 0xffffffffull)
                detail::fail(origin, "efid " + std::to_string(efid) + " of actor \"" + name +
                                         "\" is out of range");
            auto [it, inserted] = efid_owners.emplace(static_cast<std::uint32_t>(efid), name);
            if (!inserted && it->second != name)
                detail::fail(origin, "efid ranges not disjoint: efid " + std::to_string(efid) +
                                         " belongs to both \"" + it->second + "\" and \"" + name +
                                         "\"");
            actor.efids.push_back(static_cast<std::uint32_t>(efid));
        }
        s.actors.push_back(std::move(actor));
    }
    if (s.actors.empty()) detail::fail(origin, "\"actors\" must not be empty");
    std::sort(s.actors.begin(), s.actors.end(),
              [](const ScenarioActor& a, const ScenarioActor& b) { return a.name < b.name; });

    if (!doc["policies"].is_object())
        detail::fail(origin, "\"policies\" must map locations to clause lists");
    for (const auto& item : doc["policies"].items()) {
        const std::string& location = item.key();
        if (!location_names.contains(location))
            detail::fail(origin, "policy for unknown location \"" + location + "\"");
        if (!item.value().is_array())
            detail::fail(origin, "policy for \"" + location + "\" must be a list of clauses");
        std::vector<ScenarioClause> clauses;
        for (const auto& entry : item.value()) {
            if (!entry.is_object())
                detail::fail(origin, "policy clause at \"" + location + "\" must be an object");
            detail::require_keys(origin, entry, {"who", "actions"},
                                 {}, "policy clause at \"" + location + "\"");
            ScenarioClause clause;
            if (entry["who"].is_string()) {
                if (entry["who"].get<std::string>() != "any")
                    detail::fail(origin, "policy \"who\" at \"" + location +
                                             "\" must be \"any\" or a list of actor names");
            } else {
                auto names = detail::string_list(origin, entry["who"],
                                                 "policy \"who\" at \"" + location + "\"");
                for (const auto& name : names) {
                    bool known = std::any_of(s.actors.begin(), s.actors.end(),
                                             [&](const ScenarioActor& a) { return a.name == name; });
                    if (!known)
                        detail::fail(origin, "policy at \"" + location +
                                                 "\" names unknown actor \"" + name + "\"");
                }
                clause.who = sort_unique(std::move(names));
            }
            auto actions = detail::string_list(origin, entry["actions"],
                                               "policy \"actions\" at \"" + location + "\"");
            for (const auto& action : actions)
                if (action != "get" && action != "move" && action != "put")
                    detail::fail(origin, "policy at \"" + location + "\" lists unknown action \"" +
                                             action + "\"");
            clause.actions = sort_unique(std::move(actions));
            clauses.push_back(std::move(clause));
        }
        s.policies.emplace(location, std::move(clauses));
    }

    if (!doc["attacker"].is_string()) detail::fail(origin, "\"attacker\" must be an actor name");
    s.attacker = doc["attacker"].get<std::string>();
    bool attacker_known = std::any_of(s.actors.begin(), s.actors.end(),
                                      [&](const ScenarioActor& a) { return a.name == s.attacker; });
    if (!attacker_known)
        detail::fail(origin, "attacker \"" + s.attacker + "\" is not a declared actor");

    if (!doc["level"].is_number_unsigned() || doc["level"].get<std::uint64_t>() > 3)
        detail::fail(origin, "\"level\" must be 0, 1, 2 or 3");
    s.level = static_cast<int>(doc["level"].get<std::uint64_t>());

    if (doc.contains("bounds")) {
        const json& bounds = doc["bounds"];
        if (!bounds.is_object()) detail::fail(origin, "\"bounds\" must be an object");
        detail::require_keys(origin, bounds, {}, {"max_states"}, "\"bounds\"");
        if (bounds.contains("max_states")) {
            auto limit = detail::natural(origin, bounds["max_states"], "\"max_states\"");
            if (limit == 0) detail::fail(origin, "\"max_states\" must be at least 1");
            s.max_states = limit;
        }
    }
    if (doc.contains("moves_require_edge")) {
        if (!doc["moves_require_edge"].is_boolean())
            detail::fail(origin, "\"moves_require_edge\" must be a boolean");
        s.moves_require_edge = doc["moves_require_edge"].get<bool>();
    }
    return s;
}

/// Reads and parses a scenario file.
inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError(path.string() + ": cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), path.string());
}

/// Serializes a scenario back to JSON.  parse_scenario(render_scenario(s)) == s.
inline json render_scenario(const Scenario& s) {
    json doc;
    doc["locations"] = s.locations;
    json edges = json::array();
    for (const auto& [from, to] : s.edges) edges.push_back(json::array({from, to}));
    doc["edges"] = std::move(edges);
    json actors = json::object();
    for (const auto& actor : s.actors)
        actors[actor.name] = {{"location", actor.location}, {"efids", actor.efids}};
    doc["actors"] = std::move(actors);
    json policies = json::object();
    for (const auto& [location, clauses] : s.policies) {
        json list = json::array();
        for (const auto& clause : clauses) {
            json body;
            if (clause.who)
                body["who"] = *clause.who;
            else
                body["who"] = "any";
            body["actions"] = clause.actions;
            list.push_back(std::move(body));
        }
        policies[location] = std::move(list);
    }
    doc["policies"] = std::move(policies);
    doc["attacker"] = s.attacker;
    doc["level"] = s.level;
    if (s.max_states) doc["bounds"] = {{"max_states", *s.max_states}};
    if (s.moves_require_edge) doc["moves_require_edge"] = true;
    return doc;
}

/// Command-line adjustments applied on top of a scenario.  Unset fields keep
/// the scenario's own values; max_states falls back to the scenario bound and
/// finally to the Model default.
struct ModelOverrides {
    std::optional<int> level;
    std::optional<bool> knowledge_attacker_only;
    std::optional<bool> no_standalone_put;
    std::optional<bool> moves_require_edge;
    std::optional<std::uint64_t> max_states;
};

/// Builds the immutable model for a validated scenario.  Actor ids follow
/// name order, location ids file order; credential lists keep file order with
/// entry 0 as the root efid.
inline std::shared_ptr<const Model> make_model(const Scenario& s,
                                               const ModelOverrides& overrides = {}) {
    auto model = std::make_shared<Model>();
    model->locations = s.locations;
    for (const auto& actor : s.actors) model->actors.push_back(actor.name);

    for (const auto& [from, to] : s.edges)
        model->edges.emplace_back(model->location_id(from), model->location_id(to));
    model->edges = sort_unique(std::move(model->edges));

    model->policy.assign(s.locations.size(), {});
    for (const auto& [location, clauses] : s.policies) {
        auto& slot = model->policy[model->location_id(location)];
        for (const auto& clause : clauses) {
            PolicyClause compiled;
            if (clause.who) {
                std::vector<ActorId> ids;
                for (const auto& name : *clause.who) ids.push_back(model->actor_id(name));
                compiled.who = sort_unique(std::move(ids));
            }
            for (const auto& action : clause.actions) {
                if (action == "get") compiled.actions[0] = true;
                if (action == "move") compiled.actions[1] = true;
                if (action == "put") compiled.actions[2] = true;
            }
            slot.push_back(std::move(compiled));
        }
    }

    model->location_payload.assign(s.locations.size(), std::string{});
    for (const auto& actor : s.actors) {
        std::vector<Efid> entries;
        for (auto value : actor.efids) entries.push_back(Efid{value});
        model->efid_entries.push_back(std::move(entries));
        model->initial_location.push_back(model->location_id(actor.location));
    }
    model->attacker = model->actor_id(s.attacker);

    int level = overrides.level.value_or(s.level);
    if (level < 0 || level > 3) throw ScenarioError("level override must be 0, 1, 2 or 3");
    model->level = level_from_number(level);
    model->knowledge_attacker_only = overrides.knowledge_attacker_only.value_or(false);
    model->no_standalone_put = overrides.no_standalone_put.value_or(false);
    model->moves_require_edge = overrides.moves_require_edge.value_or(s.moves_require_edge);
    model->max_states = overrides.max_states.value_or(s.max_states.value_or(model->max_states));

    model->finalize();
    return model;
}

} // namespace riskref::corona
