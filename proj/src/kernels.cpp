#include "gridstate/kernels.hpp"

#include <cmath>

namespace gridstate {

namespace {

struct Incidence {
    // Per bus: (branch, side) pairs in branch order; side 0 = from, 1 = to.
    std::vector<std::vector<std::pair<int, int>>> at_bus;
};

Incidence build_incidence(const NetworkModel& net) {
    Incidence inc;
    inc.at_bus.resize(net.n_buses());
    for (int b = 0; b < net.n_branches(); ++b) {
        const auto& br = net.branch(b);
        inc.at_bus[net.bus_index(br.from)].push_back({b, 0});
        inc.at_bus[net.bus_index(br.to)].push_back({b, 1});
    }
    return inc;
}

BranchFlowQuantities evaluate_impl(NetworkModel& net, const std::vector<double>& vm,
                                   const std::vector<double>& va, bool parallel) {
    const AcModel& ac = net.ac();
    const int nb = net.n_branches();
    const int n = net.n_buses();
    std::vector<cdouble> v(n);
    for (int i = 0; i < n; ++i) v[i] = std::polar(vm[i], va[i]);

    BranchFlowQuantities q;
    q.i_from.resize(nb);
    q.i_to.resize(nb);
    q.p_from.resize(nb);
    q.q_from.resize(nb);
    q.p_to.resize(nb);
    q.q_to.resize(nb);

    // Phase one: per-branch currents and powers, disjoint writes.
#pragma omp parallel for if (parallel) schedule(static)
    for (int b = 0; b < nb; ++b) {
        const auto& br = net.branch(b);
        const int f = net.bus_index(br.from), t = net.bus_index(br.to);
        const auto& blk = ac.blocks[b];
        const cdouble i_f = blk.yff * v[f] + blk.yft * v[t];
        const cdouble i_t = blk.ytf * v[f] + blk.ytt * v[t];
        q.i_from[b] = i_f;
        q.i_to[b] = i_t;
        const cdouble s_f = v[f] * std::conj(i_f);
        const cdouble s_t = v[t] * std::conj(i_t);
        q.p_from[b] = s_f.real();
        q.q_from[b] = s_f.imag();
        q.p_to[b] = s_t.real();
        q.q_to[b] = s_t.imag();
    }

    // Phase two: per-bus injections summed in fixed incidence order.
    const Incidence inc = build_incidence(net);
    q.p_injection.resize(n);
    q.q_injection.resize(n);
#pragma omp parallel for if (parallel) schedule(static)
    for (int i = 0; i < n; ++i) {
        cdouble current = cdouble(net.bus(i).g_shunt, net.bus(i).b_shunt) * v[i];
        for (const auto& [b, side] : inc.at_bus[i])
            current += side == 0 ? q.i_from[b] : q.i_to[b];
        const cdouble s = v[i] * std::conj(current);
        q.p_injection[i] = s.real();
        q.q_injection[i] = s.imag();
    }
    return q;
}

}  // namespace

BranchFlowQuantities evaluate_branch_flows(NetworkModel& net, const std::vector<double>& vm,
                                           const std::vector<double>& va, ExecPolicy policy) {
    return evaluate_impl(net, vm, va, run_parallel(policy, net.n_branches()));
}

BranchFlowQuantities evaluate_branch_flows_serial(NetworkModel& net,
                                                  const std::vector<double>& vm,
                                                  const std::vector<double>& va) {
    return evaluate_impl(net, vm, va, false);
}

}  // namespace gridstate
