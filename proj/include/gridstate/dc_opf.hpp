#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridstate/network.hpp"
#include "gridstate/power_flow.hpp"

namespace gridstate {

struct DcOpfOptions {
    // Quadratic polynomial costs are outside the LP; opt in to an automatic
    // convex piecewise linearization instead of the default rejection.
    bool linearize_quadratic = false;
    int piecewise_segments = 8;
    // Warm start: bus angles from a previous power-flow or OPF solution seed
    // the free variables, so phase 1 starts near feasibility.
    std::optional<std::vector<double>> warm_theta;
};

struct DcOpfResult {
    bool success = false;
    bool infeasible = false;
    bool unbounded = false;
    std::string error;
    std::vector<std::string> violated_constraints;
    std::vector<double> generator_p;  // per generator, 0 when out of service
    std::vector<double> theta;        // per bus, radians
    std::vector<double> p_from;       // per branch
    double objective = 0.0;
    ReuseEvents reuse;
};

/// DC optimal power flow as an LP over generator outputs and bus angles:
/// nodal balance, branch flow limits, generator limits, slack angle pinned.
/// Piecewise-linear costs enter through epigraph variables.
DcOpfResult solve_dc_opf(NetworkModel& net, const DcOpfOptions& opts = {});

}  // namespace gridstate
