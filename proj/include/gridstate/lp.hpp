#pragma once

#include <limits>
#include <string>
#include <vector>

#include "gridstate/sparse.hpp"

namespace gridstate {

enum class RowSense { LessEqual, Equal, GreaterEqual };

struct LinearProgram {
    int num_vars = 0;
    std::vector<double> objective;
    std::vector<double> lower, upper;
    std::vector<uint8_t> binary;

    std::vector<std::vector<int>> row_idx;
    std::vector<std::vector<double>> row_val;
    std::vector<RowSense> senses;
    std::vector<double> rhs;
    std::vector<std::string> row_names;

    double objective_constant = 0.0;

    // Initial values seed free variables (a warm start); bounded variables
    // always start at a bound.
    std::vector<double> initial;

    int add_var(double lo, double hi, double cost, bool is_binary = false) {
        lower.push_back(lo);
        upper.push_back(hi);
        objective.push_back(cost);
        binary.push_back(is_binary ? 1 : 0);
        initial.push_back(std::numeric_limits<double>::quiet_NaN());
        return num_vars++;
    }

    void set_initial(int var, double value) { initial[var] = value; }

    int add_row(RowSense sense, double b, std::vector<int> idx, std::vector<double> val,
                std::string name = {}) {
        senses.push_back(sense);
        rhs.push_back(b);
        row_idx.push_back(std::move(idx));
        row_val.push_back(std::move(val));
        row_names.push_back(std::move(name));
        return static_cast<int>(senses.size()) - 1;
    }

    int num_rows() const { return static_cast<int>(senses.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
    LpStatus status = LpStatus::IterationLimit;
    std::vector<double> x;
    double objective = 0.0;
    std::vector<double> row_duals;
    std::vector<std::string> infeasible_rows;  // positive artificials after phase 1
    int iterations = 0;
};

struct SimplexOptions {
    int max_iterations = 0;  // 0: scale with problem size
    double feas_tol = 1e-9;
    double cost_tol = 1e-9;
};

/// Bounded-variable two-phase revised simplex. Deterministic for a given
/// input ordering; switches to Bland's rule after prolonged degeneracy.
/// Iteration exhaustion is an explicit IterationLimit status, never a
/// silently wrong answer.
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});

enum class IlpStatus { Optimal, Infeasible, NodeBudget };

struct IlpSolution {
    IlpStatus status = IlpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    int nodes = 0;
    bool has_incumbent = false;  // set when NodeBudget hit with a feasible point
};

struct IlpOptions {
    int node_budget = 200000;
    SimplexOptions lp;
};

/// Exact binary ILP via depth-first branch and bound on the LP relaxation.
/// Branches on the most fractional variable, ties broken by lowest index.
IlpSolution solve_binary_ilp(const LinearProgram& lp, const IlpOptions& opts = {});

}  // namespace gridstate
