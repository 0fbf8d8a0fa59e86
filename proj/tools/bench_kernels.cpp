// Benchmark comparing the serial reference kernels against the
// OpenMP-parallel versions on a synthetic network: branch-flow evaluation
// and estimation-model measurement evaluation.

#include <chrono>
#include <cstdio>
#include <string>

#include "gridstate/estimation.hpp"
#include "gridstate/kernels.hpp"
#include "gridstate/power_flow.hpp"
#include "gridstate/synthetic.hpp"

using namespace gridstate;
using clock_type = std::chrono::steady_clock;

namespace {

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int buses = 20000;
    int repeats = 20;
    if (argc > 1) buses = std::atoi(argv[1]);
    if (argc > 2) repeats = std::atoi(argv[2]);

    SyntheticSpec spec;
    spec.n_buses = buses;
    spec.n_branches = buses + buses / 5;
    NetworkModel net = make_synthetic_network(spec);
    printf("synthetic network: %d buses, %d branches\n", net.n_buses(), net.n_branches());

    std::vector<double> vm(net.n_buses(), 1.0), va(net.n_buses(), 0.0);
    for (int i = 0; i < net.n_buses(); ++i) va[i] = 0.001 * (i % 17);
    net.ac();

    // Branch flow evaluation kernel.
    auto t0 = clock_type::now();
    BranchFlowQuantities serial;
    for (int r = 0; r < repeats; ++r) serial = evaluate_branch_flows_serial(net, vm, va);
    const double t_serial = ms_since(t0) / repeats;

    t0 = clock_type::now();
    BranchFlowQuantities parallel;
    for (int r = 0; r < repeats; ++r)
        parallel = evaluate_branch_flows(net, vm, va, ExecPolicy::Parallel);
    const double t_parallel = ms_since(t0) / repeats;

    double dmax = 0.0;
    for (size_t i = 0; i < serial.p_injection.size(); ++i)
        dmax = std::max(dmax, std::abs(serial.p_injection[i] - parallel.p_injection[i]));
    printf("branch flows: serial %.3f ms, parallel %.3f ms (x%.2f), max diff %.1e\n", t_serial,
           t_parallel, t_serial / t_parallel, dmax);

    // Measurement evaluation kernel inside the estimation model.
    const auto pf = solve_dc(net);
    if (!pf.success) {
        printf("dc power flow failed: %s\n", pf.error.c_str());
        return 1;
    }
    MeasurementTemplate tmpl;
    tmpl.p_injection = 1.0;
    tmpl.p_flow_to = 1.0;
    MeasurementSet set = generate_from_solution(net, {vm, va}, tmpl, 7);
    EstimationModel model(net, set, EstimationModelKind::AcNonlinear);
    printf("measurement rows: %d\n", model.k_rows());

    std::vector<double> x(model.m_states(), 0.0);
    for (int i = 0; i < net.n_buses(); ++i) x[model.m_states() - net.n_buses() + i] = 1.0;

    t0 = clock_type::now();
    for (int r = 0; r < repeats; ++r) model.evaluate(x, ExecPolicy::Serial);
    const double e_serial = ms_since(t0) / repeats;
    std::vector<double> h_serial = model.h_values();

    t0 = clock_type::now();
    for (int r = 0; r < repeats; ++r) model.evaluate(x, ExecPolicy::Parallel);
    const double e_parallel = ms_since(t0) / repeats;

    dmax = 0.0;
    for (int i = 0; i < model.k_rows(); ++i)
        dmax = std::max(dmax, std::abs(h_serial[i] - model.h_values()[i]));
    printf("measurement eval: serial %.3f ms, parallel %.3f ms (x%.2f), max diff %.1e\n",
           e_serial, e_parallel, e_serial / e_parallel, dmax);
    return 0;
}
