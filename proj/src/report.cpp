#include "gridstate/report.hpp"

#include <fstream>
#include <sstream>

namespace gridstate {

json to_json(const ReuseEvents& e) {
    return json{{"matrix_reused", e.matrix_reused},
                {"pattern_reused", e.pattern_reused},
                {"factor_reused", e.factor_reused},
                {"warm_start", e.warm_start}};
}

namespace {

json trace_json(const std::vector<IterationRecord>& trace) {
    json t = json::array();
    for (const auto& rec : trace)
        t.push_back(json{{"iteration", rec.iteration}, {"max_mismatch", rec.max_mismatch}});
    return t;
}

json bus_ids(const NetworkModel& net) {
    json ids = json::array();
    for (const auto& b : net.buses()) ids.push_back(b.id);
    return ids;
}

}  // namespace

json to_json(const PowerFlowResult& r, const NetworkModel& net) {
    json j;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["max_mismatch"] = r.max_mismatch;
    j["bus"] = bus_ids(net);
    j["vm"] = r.vm;
    j["va"] = r.va;
    j["p_injection"] = r.p_injection;
    j["q_injection"] = r.q_injection;
    j["p_from"] = r.p_from;
    j["q_from"] = r.q_from;
    j["p_to"] = r.p_to;
    j["q_to"] = r.q_to;
    j["trace"] = trace_json(r.trace);
    j["reuse"] = to_json(r.reuse);
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

json to_json(const DcPowerFlowResult& r, const NetworkModel& net) {
    json j;
    j["success"] = r.success;
    j["bus"] = bus_ids(net);
    j["theta"] = r.theta;
    j["p_injection"] = r.p_injection;
    j["p_from"] = r.p_from;
    j["slack_p"] = r.slack_p;
    j["reuse"] = to_json(r.reuse);
    if (!r.error.empty()) j["error"] = r.error;
    if (!r.unsolvable_island.empty()) j["unsolvable_island"] = r.unsolvable_island;
    return j;
}

json to_json(const DcOpfResult& r, const NetworkModel& net) {
    json j;
    j["success"] = r.success;
    j["objective"] = r.objective;
    j["generator_p"] = r.generator_p;
    j["bus"] = bus_ids(net);
    j["theta"] = r.theta;
    j["p_from"] = r.p_from;
    j["reuse"] = to_json(r.reuse);
    if (r.infeasible) j["infeasible"] = true;
    if (r.unbounded) j["unbounded"] = true;
    if (!r.violated_constraints.empty()) j["violated_constraints"] = r.violated_constraints;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

json to_json(const EstimationResult& r, const NetworkModel& net) {
    json j;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["objective"] = r.objective;
    j["k_rows"] = r.k_rows;
    j["m_states"] = r.m_states;
    j["bus"] = bus_ids(net);
    j["vm"] = r.vm;
    j["va"] = r.va;
    j["residuals"] = r.residuals;
    j["trace"] = trace_json(r.trace);
    j["reuse"] = to_json(r.reuse);
    if (!r.error.empty()) j["error"] = r.error;
    if (!r.deficient_columns.empty()) j["deficient_columns"] = r.deficient_columns;
    return j;
}

json to_json(const ChiSquaredOutcome& c) {
    return json{{"pass", c.pass},
                {"statistic", c.statistic},
                {"threshold", c.threshold},
                {"degrees_of_freedom", c.degrees_of_freedom},
                {"confidence", c.confidence}};
}

json to_json(const BadDataReport& r, const NetworkModel& net) {
    json j;
    j["chi_squared"] = to_json(r.chi_squared);
    j["lnr_ran"] = r.lnr_ran;
    json removals = json::array();
    for (const auto& rem : r.removals)
        removals.push_back(json{{"pass", rem.pass},
                                {"measurement", rem.measurement_id},
                                {"normalized_residual", rem.normalized_residual},
                                {"threshold", rem.threshold}});
    j["removals"] = removals;
    j["critical_measurements"] = r.critical_measurements;
    j["final_max_normalized"] = r.final_max_normalized;
    j["final_chi_squared_pass"] = r.final_chi_squared_pass;
    j["passes"] = r.passes;
    j["estimate"] = to_json(r.final_estimate, net);
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

json to_json(const IslandPartition& p, const NetworkModel& net) {
    json j;
    j["kind"] = p.kind == IslandPartition::Kind::Flow ? "flow" : "maximal";
    json islands = json::array();
    for (const auto& isl : p.islands) {
        json ids = json::array();
        for (int i : isl) ids.push_back(net.bus(i).id);
        islands.push_back(ids);
    }
    j["islands"] = islands;
    json ties = json::array();
    for (int b : p.tie_branches) ties.push_back(b + 1);
    j["tie_branches"] = ties;
    json tb = json::array();
    for (int i : p.tie_buses) tb.push_back(net.bus(i).id);
    j["tie_buses"] = tb;
    return j;
}

json to_json(const RestorationResult& r) {
    json j;
    j["selected"] = r.selected;
    j["observable_after"] = r.observable_after;
    j["pivot_threshold"] = r.pivot_threshold;
    j["r_diagonal"] = r.r_diagonal;
    if (!r.remaining_groups.empty()) j["remaining_groups"] = r.remaining_groups;
    return j;
}

json to_json(const PmuPlacementResult& r) {
    json j;
    j["buses"] = r.buses;
    j["count"] = r.buses.size();
    j["optimal"] = r.optimal;
    j["nodes"] = r.nodes;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

std::string file_digest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return "missing";
    uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (f.eof()) break;
    }
    char hex[17];
    snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

json make_report(const std::string& command, const std::vector<std::string>& input_files,
                 json results) {
    json j;
    j["schema_version"] = 1;
    j["command"] = command;
    json inputs = json::array();
    for (const auto& p : input_files)
        inputs.push_back(json{{"path", p}, {"fnv1a64", file_digest(p)}});
    j["inputs"] = inputs;
    j["results"] = std::move(results);
    return j;
}

void write_report(const json& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report to " + path);
    out << report.dump(1) << "\n";
}

}  // namespace gridstate
