#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridstate/lu.hpp"
#include "gridstate/network.hpp"

namespace gridstate {

/// What a solve was able to reuse from earlier work. Consumed by the
/// quasi-steady-state runner and surfaced in reports.
struct ReuseEvents {
    bool matrix_reused = false;   // nodal model not rebuilt
    bool pattern_reused = false;  // factorization pattern reused (in-place refactor)
    bool factor_reused = false;   // numeric factorization reused outright
    bool warm_start = false;      // initial state taken from a previous solution
};

struct IterationRecord {
    int iteration = 0;
    double max_mismatch = 0.0;
};

struct PowerFlowResult {
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
    std::vector<IterationRecord> trace;
    std::vector<double> vm, va;
    std::vector<double> p_injection, q_injection;       // per bus
    std::vector<double> p_from, q_from, p_to, q_to;     // per branch
    ReuseEvents reuse;
    std::string error;  // nonempty when the solve failed
};

enum class StartMode { FromFile, Flat, Warm };
enum class FdVariant { XB, BX };

struct PowerFlowOptions {
    double tolerance = 1e-8;
    int max_iterations = 50;      // Newton-Raphson / fast-decoupled
    int max_iterations_gs = 1000; // Gauss-Seidel
    StartMode start = StartMode::FromFile;
};

/// AC power flow session. Holds the Jacobian workspace, the fast-decoupled
/// factorizations and the previous solution so repeated solves on an evolving
/// network reuse patterns, factors and warm starts whenever the network's
/// revision counters allow.
class AcPowerFlowSolver {
public:
    PowerFlowResult solve_newton_raphson(NetworkModel& net, const PowerFlowOptions& opts = {});
    PowerFlowResult solve_fast_decoupled(NetworkModel& net, FdVariant variant,
                                         const PowerFlowOptions& opts = {});
    PowerFlowResult solve_gauss_seidel(NetworkModel& net, const PowerFlowOptions& opts = {});

    bool has_previous() const { return previous_.has_value(); }
    void forget_previous() { previous_.reset(); }

private:
    struct Indexing {
        int slack = -1;
        std::vector<int> pvpq, pq;       // internal bus indices
        std::vector<int> angle_col, vm_col;  // per bus, -1 when not a variable
    };
    Indexing make_indexing(const NetworkModel& net) const;
    std::vector<double> initial_vm(const NetworkModel& net, StartMode mode) const;
    std::vector<double> initial_va(const NetworkModel& net, StartMode mode) const;
    void finalize(NetworkModel& net, PowerFlowResult& r);

    struct JacobianWorkspace {
        SparseMatrix<double> j;
        // Per Y column: the two J columns it feeds and the slot ranges.
        uint64_t ac_pattern_rev = 0;
        int n_state = 0;
        bool valid = false;
    };
    JacobianWorkspace jac_;
    LuFactorization jac_lu_;
    bool jac_lu_valid_ = false;

    struct FdCache {
        SparseMatrix<double> bp, bpp;
        LuFactorization bp_lu, bpp_lu;
        uint64_t ac_pattern_rev = 0, ac_value_rev = 0;
        bool valid = false;
    };
    FdCache fd_[2];

    struct Previous {
        std::vector<double> vm, va;
    };
    std::optional<Previous> previous_;
};

struct DcPowerFlowResult {
    bool success = false;
    std::vector<double> theta;        // radians, all buses
    std::vector<double> p_injection;  // per bus (includes shift and shunt terms)
    std::vector<double> p_from;       // per branch
    double slack_p = 0.0;
    ReuseEvents reuse;
    std::string error;
    std::vector<int> unsolvable_island;  // bus ids of an island without a slack
};

/// DC power flow session: one linear solve of the reduced susceptance
/// matrix; the factorization is cached and reused across value-preserving
/// changes (load and generation updates).
class DcPowerFlowSolver {
public:
    DcPowerFlowResult solve(NetworkModel& net);

private:
    SparseMatrix<double> reduced_;
    std::vector<int> value_map_;  // reduced slot -> dc.b slot
    LuFactorization lu_;
    uint64_t pattern_rev_ = 0, value_rev_ = 0;
    int slack_ = -1;
    bool valid_ = false;
};

// One-shot conveniences (fresh session per call).
PowerFlowResult solve_newton_raphson(NetworkModel& net, const PowerFlowOptions& opts = {});
PowerFlowResult solve_fast_decoupled(NetworkModel& net, FdVariant variant,
                                     const PowerFlowOptions& opts = {});
PowerFlowResult solve_gauss_seidel(NetworkModel& net, const PowerFlowOptions& opts = {});
DcPowerFlowResult solve_dc(NetworkModel& net);

/// Fast-decoupled matrix assembly (exposed for tests).
/// Construction conventions, following the standard fast-decoupled
/// literature:
///   B':  from -Im(Y) with charging and bus shunts zeroed, taps forced to 1,
///        phase shifts kept; XB additionally zeroes series resistance.
///   B'': from -Im(Y) with phase shifts zeroed, taps/shunts/charging kept;
///        BX additionally zeroes series resistance.
SparseMatrix<double> make_b_prime(const NetworkModel& net, FdVariant variant,
                                  const std::vector<int>& keep);
SparseMatrix<double> make_b_double_prime(const NetworkModel& net, FdVariant variant,
                                         const std::vector<int>& keep);

}  // namespace gridstate
