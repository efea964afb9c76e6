#pragma once

// JSON and text rendering for contact-tracing states, traces, and attack
// trees.  All JSON documents carry a top-level "format": 1 marker and are
// emitted with sorted object keys, so equal values serialize to identical
// bytes regardless of construction order.

#include <riskref/attack_tree.hpp>
#include <riskref/corona/model.hpp>
#include <riskref/corona/semantics.hpp>
#include <riskref/kripke.hpp>

#include <json.hpp>

#include <string>
#include <vector>

namespace riskref::corona {

using json = nlohmann::json;

inline json state_json(const Model& m, const State0& s) {
    json placement = json::object();
    json credentials = json::object();
    for (ActorId a = 0; a < m.num_actors(); ++a) {
        placement[m.actors[a]] = m.locations[s.location_of(a)];
        credentials[m.actors[a]] = s.credential[a].value;
    }
    json efids = json::object();
    for (LocationId l = 0; l < m.num_locations(); ++l) {
        json list = json::array();
        for (const auto& e : s.efids_at[l]) list.push_back(e.value);
        efids[m.locations[l]] = std::move(list);
    }
    json knowledge = json::object();
    for (ActorId a = 0; a < m.num_actors(); ++a) {
        json per_location = json::object();
        for (LocationId l = 0; l < m.num_locations(); ++l) {
            const auto& pairs = s.kgra(a, l);
            if (pairs.empty()) continue;
            json list = json::array();
            for (const auto& [who, efid] : pairs)
                list.push_back(json::array({m.actors[who], efid.value}));
            per_location[m.locations[l]] = std::move(list);
        }
        if (!per_location.empty()) knowledge[m.actors[a]] = std::move(per_location);
    }
    return json{{"placement", std::move(placement)},
                {"credentials", std::move(credentials)},
                {"location_efids", std::move(efids)},
                {"knowledge", std::move(knowledge)}};
}

inline json state_json(const Model& m, const State1& s) {
    json placement = json::object();
    json credentials = json::object();
    for (ActorId a = 0; a < m.num_actors(); ++a) {
        placement[m.actors[a]] = m.locations[s.location_of(a)];
        credentials[m.actors[a]] = {{"index", s.credential[a].index},
                                    {"current", s.credential[a].current().value}};
    }
    json efids = json::object();
    for (LocationId l = 0; l < m.num_locations(); ++l) {
        json list = json::array();
        for (const auto& e : s.efids_at[l]) list.push_back(e.value);
        efids[m.locations[l]] = std::move(list);
    }
    json knowledge = json::object();
    for (ActorId a = 0; a < m.num_actors(); ++a) {
        json per_location = json::object();
        for (LocationId l = 0; l < m.num_locations(); ++l) {
            const auto& pairs = s.kgra(a, l);
            if (pairs.empty()) continue;
            json list = json::array();
            for (const auto& [who, efid] : pairs)
                list.push_back(json::array({m.actors[who], efid.value}));
            per_location[m.locations[l]] = std::move(list);
        }
        if (!per_location.empty()) knowledge[m.actors[a]] = std::move(per_location);
    }
    return json{{"placement", std::move(placement)},
                {"credentials", std::move(credentials)},
                {"location_efids", std::move(efids)},
                {"knowledge", std::move(knowledge)}};
}

/// Renders the action annotations of a trace, one line per step, by diffing
/// consecutive states.
template <typename State>
std::vector<std::string> trace_text(const Model& m, const Trace<State>& trace) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i + 1 < trace.states.size(); ++i)
        lines.push_back(annotate_step(m, trace.states[i], trace.states[i + 1]).value_or("?"));
    return lines;
}

template <typename State>
json trace_json(const Model& m, const Trace<State>& trace) {
    json steps = json::array();
    for (std::size_t i = 0; i + 1 < trace.states.size(); ++i)
        steps.push_back(
            json{{"action", annotate_step(m, trace.states[i], trace.states[i + 1]).value_or("?")},
                 {"state", state_json(m, trace.states[i + 1])}});
    return json{{"format", 1},
                {"initial", state_json(m, trace.states.front())},
                {"steps", std::move(steps)}};
}

namespace detail {

template <typename State>
json tree_node_json(const Model& m, const AttackTree<State>& tree) {
    json source = json::array();
    for (const auto& s : tree.source) source.push_back(state_json(m, s));
    json target = json::array();
    for (const auto& s : tree.target) target.push_back(state_json(m, s));
    json node{{"kind", to_string(tree.kind)},
              {"source", std::move(source)},
              {"target", std::move(target)}};
    if (tree.kind != AttackKind::base) {
        json children = json::array();
        for (const auto& child : tree.children) children.push_back(tree_node_json(m, child));
        node["children"] = std::move(children);
    }
    return node;
}

} // namespace detail

template <typename State>
json tree_json(const Model& m, const AttackTree<State>& tree) {
    return json{{"format", 1}, {"tree", detail::tree_node_json(m, tree)}};
}

/// Serializes with sorted keys and stable spacing; the single dump point for
/// every machine-readable document the tools emit.
inline std::string dump_json(const json& value) { return value.dump(2) + "\n"; }

} // namespace riskref::corona
