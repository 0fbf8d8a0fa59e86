#pragma once

#include <vector>

#include "gridstate/network.hpp"
#include "gridstate/parallel.hpp"

namespace gridstate {

/// Branch currents/powers and bus injections evaluated from the branch
/// admittance blocks at a given voltage state.
struct BranchFlowQuantities {
    std::vector<cdouble> i_from, i_to;
    std::vector<double> p_from, q_from, p_to, q_to;
    std::vector<double> p_injection, q_injection;
};

/// OpenMP-parallel evaluation: phase one over branches, phase two over
/// buses via fixed-order incidence lists, so results match the serial
/// reference exactly, thread count notwithstanding.
BranchFlowQuantities evaluate_branch_flows(NetworkModel& net, const std::vector<double>& vm,
                                           const std::vector<double>& va,
                                           ExecPolicy policy = ExecPolicy::Auto);

/// Serial reference implementation kept for testing and benchmarking.
BranchFlowQuantities evaluate_branch_flows_serial(NetworkModel& net,
                                                  const std::vector<double>& vm,
                                                  const std::vector<double>& va);

}  // namespace gridstate
