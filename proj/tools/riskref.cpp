// riskref: explicit-state privacy analysis for contact-tracing scenarios.
//
// Subcommands:
//   check     evaluate AG of the global privacy policy; on failure print the
//             counterexample trace and the synthesized attack tree
//   attack    search EF of a policy violation; print the shortest trace, the
//             synthesized and-attack, and the adequacy cross-check
//   refine    verify a refinement between two scenario files under a named map
//   rr-cycle  run a chain manifest and evaluate the termination predicate
//   states    build the reachability closure and print its size and depth
//
// Exit codes: 0 the checked property holds, 2 an attack or refutation was
// found, 1 errors (bad input, resource limit).

#include <riskref/corona/report.hpp>
#include <riskref/corona/scenario.hpp>
#include <riskref/refinement.hpp>

#include <CLI11.hpp>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace riskref;
using namespace riskref::corona;

struct Options {
    bool json = false;
    unsigned workers = 1;
    std::optional<std::uint64_t> max_states;
    std::optional<bool> attacker_only;
    std::optional<bool> no_standalone_put;
    std::optional<bool> moves_require_edge;
};

std::optional<std::uint64_t> env_max_states() {
    const char* value = std::getenv("RISKREF_MAX_STATES");
    if (value == nullptr) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    unsigned long long parsed = std::strtoull(value, &end, 10);
    if (errno != 0 || end == value || *end != '\0' || parsed == 0)
        throw ScenarioError("RISKREF_MAX_STATES must be a positive integer, got \"" +
                            std::string(value) + "\"");
    return parsed;
}

ModelOverrides to_overrides(const Options& o, std::optional<int> level) {
    ModelOverrides m;
    m.level = level;
    m.knowledge_attacker_only = o.attacker_only;
    m.no_standalone_put = o.no_standalone_put;
    m.moves_require_edge = o.moves_require_edge;
    m.max_states = o.max_states;
    return m;
}

TraversalOptions traversal(const Options& o, const Model& m) {
    TraversalOptions t;
    t.max_states = m.max_states;
    t.workers = o.workers;
    return t;
}

void emit(const Options& o, const json& doc, const std::string& human) {
    if (o.json)
        std::cout << dump_json(doc);
    else
        std::cout << human;
}

template <class State>
State make_initial(const Model& m);
template <>
State0 make_initial<State0>(const Model& m) { return initial_state0(m); }
template <>
State1 make_initial<State1>(const Model& m) { return initial_state1(m); }

template <class State>
TransitionSystem<State> make_system(std::shared_ptr<const Model> m);
template <>
TransitionSystem<State0> make_system<State0>(std::shared_ptr<const Model> m) { return system0(std::move(m)); }
template <>
TransitionSystem<State1> make_system<State1>(std::shared_ptr<const Model> m) { return system1(std::move(m)); }

template <class State>
KripkeStructure<State> build_closure(std::shared_ptr<const Model> m, const Options& o,
                                     ClosureStats* stats = nullptr) {
    return reachability_closure<State>({make_initial<State>(*m)}, make_system<State>(m),
                                       traversal(o, *m), stats);
}

const char* correctness_name(CorrectnessStatus status) {
    switch (status) {
        case CorrectnessStatus::agreement: return "agreement";
        case CorrectnessStatus::skipped_invalid: return "skipped-invalid";
        default: return "soundness-violation";
    }
}

// check and attack share the search; attack additionally reports the
// adequacy cross-check of the synthesized tree.
template <class State>
int run_check(std::shared_ptr<const Model> m, const Options& o, const std::string& path,
              bool attack_mode) {
    TransitionSystem<State> sys = make_system<State>(m);
    State init = make_initial<State>(*m);
    auto violation = [m](const State& s) { return scorona(*m, s); };
    ExploreResult<State> r = explore<State>({init}, sys, violation, traversal(o, *m));

    json doc{{"format", 1},
             {"command", attack_mode ? "attack" : "check"},
             {"scenario", path},
             {"level", level_number(m->level)},
             {"state_count", r.states.size()},
             {"depth", r.depth}};
    std::ostringstream human;
    if (!r.found) {
        doc["verdict"] = "holds";
        human << "policy holds: no reachable violation among " << r.states.size()
              << " states (depth " << r.depth << ")\n";
        emit(o, doc, human.str());
        return 0;
    }

    const Trace<State>& trace = *r.witness;
    AttackTree<State> tree = synthesize_attack(trace);
    bool tree_valid = is_valid_attack(tree, sys);
    doc["verdict"] = "fails";
    doc["witness"] = {{"trace", trace_json(*m, trace)},
                      {"tree", tree_json(*m, tree)},
                      {"tree_valid", tree_valid}};
    human << "attack found: policy violated after " << (trace.states.size() - 1)
          << " actions (explored " << r.states.size() << " states)\n";
    human << "trace:\n";
    for (const std::string& line : trace_text(*m, trace)) human << "  " << line << "\n";
    human << "attack tree: " << render_attack(tree) << "\n";
    human << "tree valid: " << (tree_valid ? "yes" : "NO") << "\n";
    if (attack_mode) {
        CorrectnessResult<State> c = correctness_check_search(tree, {init}, sys, traversal(o, *m));
        doc["correctness"] = correctness_name(c.status);
        human << "correctness check: " << correctness_name(c.status) << "\n";
    }
    emit(o, doc, human.str());
    return 2;
}

template <class State>
int run_states(std::shared_ptr<const Model> m, const Options& o, const std::string& path) {
    auto start = std::chrono::steady_clock::now();
    ClosureStats stats;
    build_closure<State>(m, o, &stats);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    json doc{{"format", 1},
             {"command", "states"},
             {"scenario", path},
             {"level", level_number(m->level)},
             {"verdict", "holds"},
             {"state_count", stats.states},
             {"depth", stats.depth}};
    std::ostringstream human;
    human << "states: " << stats.states << "\n"
          << "depth: " << stats.depth << "\n"
          << "elapsed: " << elapsed.count() << " ms\n";
    emit(o, doc, human.str());
    return 0;
}

int dispatch_check(const Options& o, const std::string& path, std::optional<int> level,
                   bool attack_mode) {
    Scenario s = load_scenario(path);
    auto m = make_model(s, to_overrides(o, level));
    if (m->level == Level::l0) return run_check<State0>(m, o, path, attack_mode);
    return run_check<State1>(m, o, path, attack_mode);
}

int dispatch_states(const Options& o, const std::string& path, std::optional<int> level) {
    Scenario s = load_scenario(path);
    auto m = make_model(s, to_overrides(o, level));
    if (m->level == Level::l0) return run_states<State0>(m, o, path);
    return run_states<State1>(m, o, path);
}

// Scenario files checked against each other by refine and rr-cycle must agree
// on the static structure; placements, policies, and levels may differ.
void require_compatible(const Scenario& a, const Scenario& b, const std::string& pa,
                        const std::string& pb) {
    if (a.locations != b.locations)
        throw ScenarioError(pa + " and " + pb + ": location lists differ");
    if (a.actors.size() != b.actors.size())
        throw ScenarioError(pa + " and " + pb + ": actor lists differ");
    for (std::size_t i = 0; i < a.actors.size(); ++i) {
        if (a.actors[i].name != b.actors[i].name)
            throw ScenarioError(pa + " and " + pb + ": actor lists differ");
        if (a.actors[i].efids != b.actors[i].efids)
            throw ScenarioError(pa + " and " + pb + ": efid lists differ for actor \"" +
                                a.actors[i].name + "\"");
    }
    if (a.attacker != b.attacker)
        throw ScenarioError(pa + " and " + pb + ": attacker differs");
}

void check_map_applicable(const std::string& map, int abs_level, int conc_level) {
    bool ok = map == "refmap" ? (abs_level == 0 && conc_level >= 1)
                              : ((abs_level == 0) == (conc_level == 0));
    if (!ok)
        throw ScenarioError("map \"" + map + "\" is incompatible with levels " +
                            std::to_string(abs_level) + " and " + std::to_string(conc_level));
}

const char* clause_name(RefinementClause c) {
    return c == RefinementClause::init_membership ? "init-membership"
                                                  : "reachability-preservation";
}

template <class AbsState, class ConcState, class Map>
int report_refine(const Options& o, const KripkeStructure<AbsState>& k,
                  const KripkeStructure<ConcState>& kc, Map&& e,
                  const Model& ma, const Model& mc,
                  const std::string& map_name, const std::string& mode) {
    bool holds = false;
    json clause;
    json witness_conc;
    json witness_abs;
    if (mode == "full") {
        RefinementVerdict<ConcState> v = check_refinement(k, kc, e);
        holds = v.holds;
        if (!holds) {
            clause = clause_name(v.witness->clause);
            const ConcState& cs =
                v.witness->conc_state ? *v.witness->conc_state : v.witness->conc_init;
            witness_conc = state_json(mc, cs);
            witness_abs = state_json(ma, e(cs));
        }
    } else if (mode == "strong") {
        holds = check_strong_mt(k, kc, e);
        if (!holds) clause = "one-step-simulation";
    } else {
        holds = check_strong_mt_prime(k, kc, e);
        if (!holds) clause = "one-step-simulation";
    }
    json doc{{"format", 1},
             {"command", "refine"},
             {"map", map_name},
             {"mode", mode},
             {"verdict", holds ? "holds" : "fails"},
             {"holds", holds},
             {"clause", clause},
             {"witness_concrete_state", witness_conc},
             {"witness_abstract_state", witness_abs},
             {"abstract_state_count", k.states.size()},
             {"concrete_state_count", kc.states.size()}};
    std::ostringstream human;
    human << "refinement " << (holds ? "holds" : "FAILS") << " (map " << map_name << ", mode "
          << mode << ") over " << kc.states.size() << " concrete and " << k.states.size()
          << " abstract states\n";
    if (!holds && !clause.is_null()) human << "violated clause: " << clause.get<std::string>() << "\n";
    emit(o, doc, human.str());
    return holds ? 0 : 2;
}

int cmd_refine(const Options& o, const std::string& abs_path, const std::string& conc_path,
               const std::string& map_name, const std::string& mode) {
    Scenario sa = load_scenario(abs_path);
    Scenario sc = load_scenario(conc_path);
    require_compatible(sa, sc, abs_path, conc_path);
    auto ma = make_model(sa, to_overrides(o, std::nullopt));
    auto mc = make_model(sc, to_overrides(o, std::nullopt));
    int la = level_number(ma->level);
    int lc = level_number(mc->level);
    check_map_applicable(map_name, la, lc);

    if (map_name == "refmap") {
        auto k = build_closure<State0>(ma, o);
        auto kc = build_closure<State1>(mc, o);
        auto e = [mc](const State1& s) { return refmap(*mc, s); };
        return report_refine(o, k, kc, e, *ma, *mc, map_name, mode);
    }
    if (la == 0) {
        auto k = build_closure<State0>(ma, o);
        auto kc = build_closure<State0>(mc, o);
        auto e = [](const State0& s) { return s; };
        return report_refine(o, k, kc, e, *ma, *mc, map_name, mode);
    }
    auto k = build_closure<State1>(ma, o);
    auto kc = build_closure<State1>(mc, o);
    auto e = [](const State1& s) { return s; };
    return report_refine(o, k, kc, e, *ma, *mc, map_name, mode);
}

// One element of a chain manifest, with its closure materialized at the
// step's own level.
struct ChainStep {
    std::string name;
    std::string map = "identity";
    std::shared_ptr<const Model> model;
    int level = 0;
    std::optional<KripkeStructure<State0>> k0;
    std::optional<KripkeStructure<State1>> k1;
    std::size_t state_count = 0;
    std::size_t depth = 0;
    bool attack_found = false;
    std::optional<bool> refinement_holds;  // versus the previous step
};

template <class State>
void materialize(ChainStep& step, std::optional<KripkeStructure<State>>& slot,
                 const Options& o) {
    ClosureStats stats;
    slot = build_closure<State>(step.model, o, &stats);
    step.state_count = stats.states;
    step.depth = stats.depth;
    const Model& m = *step.model;
    for (const State& s : slot->states)
        if (scorona(m, s)) {
            step.attack_found = true;
            break;
        }
}

template <class ConcState>
std::vector<ConcState> scorona_states(const Model& m, const KripkeStructure<ConcState>& k) {
    std::vector<ConcState> out;
    for (const ConcState& s : k.states)
        if (scorona(m, s)) out.push_back(s);
    return out;
}

template <class AbsState, class ConcState, class Map>
int report_rr_cycle(const Options& o, std::vector<ChainStep>& steps,
                    const KripkeStructure<AbsState>& k, const KripkeStructure<ConcState>& kc,
                    Map&& composed, const std::string& composed_name) {
    const Model& m_conc = *steps.back().model;
    RRCycleResult<ConcState> r =
        check_rr_cycle(k, kc, composed, scorona_states(m_conc, kc));

    json step_rows = json::array();
    std::ostringstream table;
    table << "step  level  states    attack  refinement\n";
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const ChainStep& s = steps[i];
        json row{{"scenario", s.name},
                 {"level", s.level},
                 {"state_count", s.state_count},
                 {"attack_found", s.attack_found}};
        row["refinement_holds"] =
            s.refinement_holds ? json(*s.refinement_holds) : json(nullptr);
        step_rows.push_back(std::move(row));
        table << i << "     " << s.level << "      ";
        table.width(10);
        table << std::left << s.state_count;
        table << (s.attack_found ? "yes     " : "no      ");
        if (s.refinement_holds)
            table << (*s.refinement_holds ? "holds" : "FAILS");
        else
            table << "-";
        table << "\n";
    }

    json doc{{"format", 1},
             {"command", "rr-cycle"},
             {"verdict", r.predicate ? "holds" : "fails"},
             {"steps", std::move(step_rows)},
             {"composed_map", composed_name},
             {"abstract_attack", r.abs_ef},
             {"refinement_holds", r.refinement_holds},
             {"concrete_attack", r.conc_ef},
             {"predicate", r.predicate},
             {"vacuous", r.vacuous}};
    std::ostringstream human;
    human << table.str();
    human << "composed map: " << composed_name << "\n";
    human << "abstract attack reachable: " << (r.abs_ef ? "yes" : "no") << "\n";
    human << "composed refinement holds: " << (r.refinement_holds ? "yes" : "no") << "\n";
    human << "concrete attack reachable: " << (r.conc_ef ? "yes" : "no") << "\n";
    human << "termination predicate: " << (r.predicate ? "true" : "false");
    if (r.vacuous) human << " (vacuous)";
    human << "\n";
    if (!r.predicate && r.conc_witness) {
        doc["surviving_attack"] = trace_json(m_conc, *r.conc_witness);
        human << "surviving attack:\n";
        for (const std::string& line : trace_text(m_conc, *r.conc_witness))
            human << "  " << line << "\n";
    }
    emit(o, doc, human.str());
    return r.predicate ? 0 : 2;
}

int cmd_rr_cycle(const Options& o, const std::string& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw ScenarioError(manifest_path + ": cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
        throw ScenarioError(manifest_path + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("steps") || !doc["steps"].is_array() ||
        doc["steps"].empty())
        throw ScenarioError(manifest_path + ": manifest needs a nonempty \"steps\" list");
    if (!doc.contains("policy") || doc["policy"] != "global")
        throw ScenarioError(manifest_path + ": only \"policy\": \"global\" is supported");

    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    std::vector<ChainStep> steps;
    std::vector<Scenario> scenarios;
    for (const json& entry : doc["steps"]) {
        if (!entry.is_object() || !entry.contains("scenario") || !entry["scenario"].is_string())
            throw ScenarioError(manifest_path + ": each step needs a \"scenario\" path");
        ChainStep step;
        step.name = entry["scenario"].get<std::string>();
        if (entry.contains("map")) {
            step.map = entry["map"].get<std::string>();
            if (step.map != "identity" && step.map != "refmap")
                throw ScenarioError(manifest_path + ": unknown map \"" + step.map + "\"");
        }
        Scenario s = load_scenario(base / step.name);
        if (!scenarios.empty())
            require_compatible(scenarios.front(), s, steps.front().name, step.name);
        step.model = make_model(s, to_overrides(o, std::nullopt));
        step.level = level_number(step.model->level);
        scenarios.push_back(std::move(s));
        steps.push_back(std::move(step));
    }
    for (std::size_t i = 1; i < steps.size(); ++i)
        check_map_applicable(steps[i].map, steps[i - 1].level, steps[i].level);

    for (ChainStep& step : steps) {
        if (step.level == 0)
            materialize(step, step.k0, o);
        else
            materialize(step, step.k1, o);
    }

    // Adjacent refinements, each with the step's own map.
    for (std::size_t i = 1; i < steps.size(); ++i) {
        ChainStep& prev = steps[i - 1];
        ChainStep& cur = steps[i];
        if (cur.map == "refmap") {
            auto mc = cur.model;
            auto e = [mc](const State1& s) { return refmap(*mc, s); };
            cur.refinement_holds = check_refinement(*prev.k0, *cur.k1, e).holds;
        } else if (cur.level == 0) {
            cur.refinement_holds =
                check_refinement(*prev.k0, *cur.k0, [](const State0& s) { return s; }).holds;
        } else {
            cur.refinement_holds =
                check_refinement(*prev.k1, *cur.k1, [](const State1& s) { return s; }).holds;
        }
    }

    // End-to-end map: refmap exactly when the chain crosses from level 0 into
    // the richer state type, identity otherwise.
    const ChainStep& first = steps.front();
    ChainStep& last = steps.back();
    if (first.level == 0 && last.level >= 1) {
        auto mc = last.model;
        auto composed = [mc](const State1& s) { return refmap(*mc, s); };
        return report_rr_cycle(o, steps, *first.k0, *last.k1, composed, "refmap");
    }
    if (first.level == 0) {
        return report_rr_cycle(o, steps, *first.k0, *last.k0,
                               [](const State0& s) { return s; }, "identity");
    }
    return report_rr_cycle(o, steps, *first.k1, *last.k1,
                           [](const State1& s) { return s; }, "identity");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explicit-state privacy analysis for contact-tracing scenarios"};
    app.require_subcommand(1);

    Options o;
    std::uint64_t max_states_arg = 0;
    std::string knowledge = "all";
    app.add_flag("--json", o.json, "emit one machine-readable JSON document");
    app.add_option("--workers", o.workers, "worker threads for state exploration")
        ->check(CLI::Range(1u, 64u));
    auto* opt_max = app.add_option("--max-states", max_states_arg,
                                   "abort once more states than this are discovered");
    auto* opt_knowledge =
        app.add_option("--knowledge", knowledge, "who runs get steps: attacker-only or all")
            ->check(CLI::IsMember({"attacker-only", "all"}));
    auto* opt_nsp =
        app.add_flag("--no-standalone-put", "disable the standalone put action at levels 1-3");
    auto* opt_mre = app.add_flag("--moves-require-edge", "restrict moves to declared edges");

    std::string check_path;
    int check_level = 0;
    auto* c_check = app.add_subcommand("check", "evaluate AG of the global privacy policy");
    c_check->add_option("scenario", check_path, "scenario file")->required();
    auto* check_level_opt =
        c_check->add_option("--level", check_level, "override the scenario level")
            ->check(CLI::Range(0, 3));
    c_check->fallthrough();

    std::string attack_path;
    int attack_level = 0;
    auto* c_attack =
        app.add_subcommand("attack", "search a reachable policy violation and its attack tree");
    c_attack->add_option("scenario", attack_path, "scenario file")->required();
    auto* attack_level_opt =
        c_attack->add_option("--level", attack_level, "override the scenario level")
            ->check(CLI::Range(0, 3));
    c_attack->fallthrough();

    std::string refine_abs;
    std::string refine_conc;
    std::string refine_map = "refmap";
    std::string refine_mode = "full";
    auto* c_refine = app.add_subcommand("refine", "verify a refinement between two scenarios");
    c_refine->add_option("abstract", refine_abs, "abstract scenario file")->required();
    c_refine->add_option("concrete", refine_conc, "concrete scenario file")->required();
    c_refine->add_option("--map", refine_map, "abstraction map: refmap or identity")
        ->check(CLI::IsMember({"refmap", "identity"}));
    c_refine->add_option("--mode", refine_mode, "check: full, strong, or strong-prime")
        ->check(CLI::IsMember({"full", "strong", "strong-prime"}));
    c_refine->fallthrough();

    std::string cycle_manifest;
    auto* c_cycle =
        app.add_subcommand("rr-cycle", "evaluate the termination predicate over a chain manifest");
    c_cycle->add_option("manifest", cycle_manifest, "chain manifest file")->required();
    c_cycle->fallthrough();

    std::string states_path;
    int states_level = 0;
    auto* c_states = app.add_subcommand("states", "build and measure the reachability closure");
    c_states->add_option("scenario", states_path, "scenario file")->required();
    auto* states_level_opt =
        c_states->add_option("--level", states_level, "override the scenario level")
            ->check(CLI::Range(0, 3));
    c_states->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (opt_max->count() > 0)
            o.max_states = max_states_arg;
        else
            o.max_states = env_max_states();
        if (o.max_states && *o.max_states == 0)
            throw ScenarioError("--max-states must be positive");
        if (opt_knowledge->count() > 0) o.attacker_only = (knowledge == "attacker-only");
        if (opt_nsp->count() > 0) o.no_standalone_put = true;
        if (opt_mre->count() > 0) o.moves_require_edge = true;

        if (c_check->parsed()) {
            std::optional<int> level;
            if (check_level_opt->count() > 0) level = check_level;
            return dispatch_check(o, check_path, level, false);
        }
        if (c_attack->parsed()) {
            std::optional<int> level;
            if (attack_level_opt->count() > 0) level = attack_level;
            return dispatch_check(o, attack_path, level, true);
        }
        if (c_refine->parsed()) return cmd_refine(o, refine_abs, refine_conc, refine_map, refine_mode);
        if (c_cycle->parsed()) return cmd_rr_cycle(o, cycle_manifest);
        if (c_states->parsed()) {
            std::optional<int> level;
            if (states_level_opt->count() > 0) level = states_level;
            return dispatch_states(o, states_path, level);
        }
    } catch (const StateLimitError& e) {
        std::cerr << "error: " << e.what()
                  << " (raise --max-states or RISKREF_MAX_STATES)\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
