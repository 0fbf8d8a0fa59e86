#include "gridstate/lp.hpp"

#include <algorithm>
#include <cmath>

#include "gridstate/lu.hpp"

namespace gridstate {

namespace {

enum class VarState : uint8_t { Basic, AtLower, AtUpper, FreeZero };

// Working tableau in computational standard form: original variables,
// one slack per row (bounds encode the sense), one artificial per row.
struct Tableau {
    int m = 0;                  // rows
    int n_struct = 0;           // structural variables
    int n_total = 0;            // structural + slack + artificial
    std::vector<std::vector<int>> col_idx;
    std::vector<std::vector<double>> col_val;
    std::vector<double> lo, hi, cost;
    std::vector<double> initial;  // free-variable warm values (NaN = none)
    std::vector<double> b;

    int slack(int row) const { return n_struct + row; }
    int artificial(int row) const { return n_struct + m + row; }
};

Tableau build_tableau(const LinearProgram& lp) {
    Tableau t;
    t.m = lp.num_rows();
    t.n_struct = lp.num_vars;
    t.n_total = t.n_struct + 2 * t.m;
    t.col_idx.resize(t.n_total);
    t.col_val.resize(t.n_total);
    t.lo.assign(t.n_total, 0.0);
    t.hi.assign(t.n_total, 0.0);
    t.cost.assign(t.n_total, 0.0);
    t.initial.assign(t.n_total, std::numeric_limits<double>::quiet_NaN());
    t.b = lp.rhs;

    for (int j = 0; j < t.n_struct; ++j) {
        t.lo[j] = lp.lower[j];
        t.hi[j] = lp.upper[j];
        t.cost[j] = lp.objective[j];
        t.initial[j] = lp.initial[j];
    }
    for (int i = 0; i < t.m; ++i) {
        for (size_t k = 0; k < lp.row_idx[i].size(); ++k) {
            t.col_idx[lp.row_idx[i][k]].push_back(i);
            t.col_val[lp.row_idx[i][k]].push_back(lp.row_val[i][k]);
        }
        const int s = t.slack(i);
        t.col_idx[s] = {i};
        t.col_val[s] = {1.0};
        switch (lp.senses[i]) {
            case RowSense::LessEqual:
                t.lo[s] = 0.0;
                t.hi[s] = kInf;
                break;
            case RowSense::GreaterEqual:
                t.lo[s] = -kInf;
                t.hi[s] = 0.0;
                break;
            case RowSense::Equal:
                t.lo[s] = t.hi[s] = 0.0;
                break;
        }
        // Artificial columns get their sign fixed at phase-1 setup.
        t.col_idx[t.artificial(i)] = {i};
        t.col_val[t.artificial(i)] = {1.0};
        t.lo[t.artificial(i)] = 0.0;
        t.hi[t.artificial(i)] = 0.0;
    }
    return t;
}

class Simplex {
public:
    Simplex(Tableau& t, const SimplexOptions& opts) : t_(t), opts_(opts) {
        max_iter_ = opts.max_iterations > 0 ? opts.max_iterations
                                            : 20000 + 200 * (t.m + t.n_total);
    }

    // Phase 1 then phase 2. Returns final status; x() has variable values.
    LpStatus run() {
        basis_.resize(t_.m);
        state_.assign(t_.n_total, VarState::AtLower);
        value_.assign(t_.n_total, 0.0);

        for (int j = 0; j < t_.n_struct + t_.m; ++j) set_nonbasic_at_best_bound(j);

        // Residuals decide artificial signs; artificials start basic.
        std::vector<double> resid = t_.b;
        for (int j = 0; j < t_.n_struct + t_.m; ++j) {
            if (value_[j] == 0.0) continue;
            for (size_t k = 0; k < t_.col_idx[j].size(); ++k)
                resid[t_.col_idx[j][k]] -= t_.col_val[j][k] * value_[j];
        }
        std::vector<double> phase1_cost(t_.n_total, 0.0);
        for (int i = 0; i < t_.m; ++i) {
            const int a = t_.artificial(i);
            t_.col_val[a][0] = resid[i] >= 0.0 ? 1.0 : -1.0;
            t_.hi[a] = kInf;
            phase1_cost[a] = 1.0;
            basis_[i] = a;
            state_[a] = VarState::Basic;
        }

        cost_ = &phase1_cost;
        LpStatus st = iterate(/*phase1=*/true);
        if (st != LpStatus::Optimal) return st;

        compute_basic_values();
        double infeas = 0.0;
        for (int i = 0; i < t_.m; ++i)
            if (basis_[i] >= t_.n_struct + t_.m) infeas += std::abs(value_[basis_[i]]);
        if (infeas > 1e-7) {
            phase1_infeasible_ = true;
            return LpStatus::Infeasible;
        }

        // Pin artificials to zero for phase 2 (basic ones may stay at level 0).
        for (int i = 0; i < t_.m; ++i) t_.hi[t_.artificial(i)] = 0.0;
        cost_ = &t_.cost;
        return iterate(/*phase1=*/false);
    }

    const std::vector<double>& values() const { return value_; }
    const std::vector<int>& basis() const { return basis_; }
    int iterations() const { return iter_; }
    bool phase1_infeasible() const { return phase1_infeasible_; }

    std::vector<double> row_duals() const {
        std::vector<double> cb(t_.m);
        for (int i = 0; i < t_.m; ++i) cb[i] = t_.cost[basis_[i]];
        return btran(cb);
    }

    std::vector<double> positive_artificials() const {
        std::vector<double> a(t_.m, 0.0);
        for (int i = 0; i < t_.m; ++i)
            if (basis_[i] >= t_.n_struct + t_.m && std::abs(value_[basis_[i]]) > 1e-9)
                a[basis_[i] - t_.n_struct - t_.m] = std::abs(value_[basis_[i]]);
        return a;
    }

private:
    void set_nonbasic_at_best_bound(int j) {
        if (std::isfinite(t_.lo[j])) {
            state_[j] = VarState::AtLower;
            value_[j] = t_.lo[j];
        } else if (std::isfinite(t_.hi[j])) {
            state_[j] = VarState::AtUpper;
            value_[j] = t_.hi[j];
        } else {
            state_[j] = VarState::FreeZero;
            value_[j] = std::isfinite(t_.initial[j]) ? t_.initial[j] : 0.0;
        }
    }

    void factor_basis() {
        SparseBuilder<double> b(t_.m, t_.m);
        for (int i = 0; i < t_.m; ++i) {
            const int j = basis_[i];
            for (size_t k = 0; k < t_.col_idx[j].size(); ++k)
                b.add(t_.col_idx[j][k], static_cast<int>(i), t_.col_val[j][k]);
        }
        LuOptions o;
        o.ordering = Ordering::MinDegree;
        fact_.factor(b.compress(), o);
    }

    std::vector<double> ftran(const std::vector<double>& col) const { return fact_.solve(col); }
    std::vector<double> btran(const std::vector<double>& c) const {
        return fact_.solve_transpose(c);
    }

    void compute_basic_values() {
        std::vector<double> rhs = t_.b;
        for (int j = 0; j < t_.n_total; ++j) {
            if (state_[j] == VarState::Basic || value_[j] == 0.0) continue;
            for (size_t k = 0; k < t_.col_idx[j].size(); ++k)
                rhs[t_.col_idx[j][k]] -= t_.col_val[j][k] * value_[j];
        }
        const std::vector<double> xb = ftran(rhs);
        for (int i = 0; i < t_.m; ++i) value_[basis_[i]] = xb[i];
    }

    double reduced_cost(int j, const std::vector<double>& y) const {
        double d = (*cost_)[j];
        for (size_t k = 0; k < t_.col_idx[j].size(); ++k)
            d -= y[t_.col_idx[j][k]] * t_.col_val[j][k];
        return d;
    }

    LpStatus iterate(bool phase1) {
        int degenerate_streak = 0;
        bool bland = false;
        while (true) {
            if (++iter_ > max_iter_) return LpStatus::IterationLimit;
            factor_basis();
            compute_basic_values();

            std::vector<double> cb(t_.m);
            for (int i = 0; i < t_.m; ++i) cb[i] = (*cost_)[basis_[i]];
            const std::vector<double> y = btran(cb);

            // Entering variable.
            int enter = -1, dir = 0;
            double best = opts_.cost_tol;
            for (int j = 0; j < t_.n_total; ++j) {
                if (state_[j] == VarState::Basic) continue;
                if (t_.lo[j] == t_.hi[j]) continue;  // fixed
                const double d = reduced_cost(j, y);
                int cand_dir = 0;
                if (state_[j] == VarState::AtLower && d < -opts_.cost_tol) cand_dir = +1;
                else if (state_[j] == VarState::AtUpper && d > opts_.cost_tol) cand_dir = -1;
                else if (state_[j] == VarState::FreeZero && std::abs(d) > opts_.cost_tol)
                    cand_dir = d < 0 ? +1 : -1;
                if (cand_dir == 0) continue;
                if (bland) {
                    enter = j;
                    dir = cand_dir;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    enter = j;
                    dir = cand_dir;
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            // Direction through the basis.
            std::vector<double> col(t_.m, 0.0);
            for (size_t k = 0; k < t_.col_idx[enter].size(); ++k)
                col[t_.col_idx[enter][k]] = t_.col_val[enter][k];
            const std::vector<double> w = ftran(col);

            // Ratio test: entering moves by t*dir; basic i moves by -dir*w_i*t.
            // The bound-flip distance of the entering variable is the initial
            // candidate (leave_pos stays -1 when it wins).
            double t_limit = (std::isfinite(t_.hi[enter]) && std::isfinite(t_.lo[enter]))
                                 ? t_.hi[enter] - t_.lo[enter]
                                 : kInf;
            int leave_pos = -1;
            bool leave_to_upper = false;
            const double tie_tol = 1e-9;
            for (int i = 0; i < t_.m; ++i) {
                const double step = -dir * w[i];
                const int bj = basis_[i];
                double limit = kInf;
                bool to_upper = false;
                if (step < -1e-11) {  // basic decreases toward its lower bound
                    if (std::isfinite(t_.lo[bj])) limit = (value_[bj] - t_.lo[bj]) / (-step);
                } else if (step > 1e-11) {  // basic increases toward its upper bound
                    if (std::isfinite(t_.hi[bj])) {
                        limit = (t_.hi[bj] - value_[bj]) / step;
                        to_upper = true;
                    }
                } else {
                    continue;
                }
                if (!std::isfinite(limit)) continue;
                limit = std::max(limit, 0.0);
                bool take;
                if (limit < t_limit - tie_tol) {
                    take = true;
                } else if (limit <= t_limit + tie_tol) {
                    // Tie: prefer a basic leave over a flip; among basic rows
                    // prefer the larger pivot magnitude (Bland: lowest index).
                    if (leave_pos < 0)
                        take = true;
                    else if (bland)
                        take = basis_[i] < basis_[leave_pos];
                    else
                        take = std::abs(w[i]) > std::abs(w[leave_pos]);
                } else {
                    take = false;
                }
                if (take) {
                    t_limit = std::min(t_limit, limit);
                    leave_pos = i;
                    leave_to_upper = to_upper;
                }
            }

            if (!std::isfinite(t_limit)) return phase1 ? LpStatus::Infeasible : LpStatus::Unbounded;

            if (t_limit < 1e-11) {
                if (++degenerate_streak > 2 * t_.m + 50) bland = true;
            } else {
                degenerate_streak = 0;
            }

            if (leave_pos < 0) {
                // Bound flip: entering runs to its opposite bound.
                state_[enter] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
                value_[enter] = dir > 0 ? t_.hi[enter] : t_.lo[enter];
                continue;
            }

            // Pivot.
            const int leave = basis_[leave_pos];
            value_[enter] = nonbasic_value(enter) + dir * t_limit;
            basis_[leave_pos] = enter;
            state_[enter] = VarState::Basic;
            if (leave_to_upper) {
                state_[leave] = VarState::AtUpper;
                value_[leave] = t_.hi[leave];
            } else {
                state_[leave] = std::isfinite(t_.lo[leave]) ? VarState::AtLower
                                                            : VarState::FreeZero;
                value_[leave] = std::isfinite(t_.lo[leave]) ? t_.lo[leave] : 0.0;
            }
        }
    }

    double nonbasic_value(int j) const { return value_[j]; }

    Tableau& t_;
    SimplexOptions opts_;
    int max_iter_ = 0;
    int iter_ = 0;
    bool phase1_infeasible_ = false;
    const std::vector<double>* cost_ = nullptr;
    std::vector<int> basis_;
    std::vector<VarState> state_;
    std::vector<double> value_;
    LuFactorization fact_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
    Tableau t = build_tableau(lp);
    Simplex s(t, opts);
    LpSolution sol;
    sol.status = s.run();
    sol.iterations = s.iterations();
    if (sol.status == LpStatus::Infeasible && s.phase1_infeasible()) {
        const auto arts = s.positive_artificials();
        for (int i = 0; i < lp.num_rows(); ++i)
            if (arts[i] > 0.0)
                sol.infeasible_rows.push_back(lp.row_names[i].empty()
                                                  ? "row " + std::to_string(i)
                                                  : lp.row_names[i]);
        return sol;
    }
    if (sol.status != LpStatus::Optimal) return sol;
    sol.x.assign(s.values().begin(), s.values().begin() + lp.num_vars);
    sol.objective = lp.objective_constant;
    for (int j = 0; j < lp.num_vars; ++j) sol.objective += lp.objective[j] * sol.x[j];
    sol.row_duals = s.row_duals();
    return sol;
}

IlpSolution solve_binary_ilp(const LinearProgram& lp, const IlpOptions& opts) {
    for (int j = 0; j < lp.num_vars; ++j)
        if (lp.binary[j] && (lp.lower[j] < -1e-12 || lp.upper[j] > 1.0 + 1e-12))
            throw std::invalid_argument("ilp: integrality flags only on 0/1 variables");

    IlpSolution best;
    best.status = IlpStatus::Infeasible;
    best.objective = kInf;

    struct Node {
        std::vector<std::pair<int, int>> fixes;  // (var, value)
    };
    std::vector<Node> stack{{}};
    int nodes = 0;

    while (!stack.empty()) {
        if (++nodes > opts.node_budget) {
            IlpSolution out = best;
            out.status = IlpStatus::NodeBudget;
            out.nodes = nodes;
            out.has_incumbent = std::isfinite(best.objective);
            return out;
        }
        Node node = std::move(stack.back());
        stack.pop_back();

        LinearProgram sub = lp;
        for (auto [v, val] : node.fixes) {
            sub.lower[v] = val;
            sub.upper[v] = val;
        }
        const LpSolution rel = solve_lp(sub, opts.lp);
        if (rel.status == LpStatus::Infeasible) continue;
        if (rel.status != LpStatus::Optimal) continue;  // budget/unbounded: prune
        if (std::isfinite(best.objective) && rel.objective >= best.objective - 1e-9) continue;

        // Most fractional binary; ties broken by lowest index.
        int branch_var = -1;
        double best_frac = 1e-6;
        for (int j = 0; j < lp.num_vars; ++j) {
            if (!lp.binary[j]) continue;
            const double f = rel.x[j] - std::floor(rel.x[j]);
            const double dist = std::min(f, 1.0 - f);
            if (dist > best_frac + 1e-12) {
                best_frac = dist;
                branch_var = j;
            }
        }
        if (branch_var < 0) {
            IlpSolution cand;
            cand.status = IlpStatus::Optimal;
            cand.x = rel.x;
            for (int j = 0; j < lp.num_vars; ++j)
                if (lp.binary[j]) cand.x[j] = std::round(cand.x[j]);
            cand.objective = lp.objective_constant;
            for (int j = 0; j < lp.num_vars; ++j)
                cand.objective += lp.objective[j] * cand.x[j];
            if (cand.objective < best.objective) {
                best = cand;
            }
            continue;
        }

        // Depth-first: push the far child first so the near child pops first.
        const int near = rel.x[branch_var] >= 0.5 ? 1 : 0;
        Node far_child = node, near_child = node;
        far_child.fixes.push_back({branch_var, 1 - near});
        near_child.fixes.push_back({branch_var, near});
        stack.push_back(std::move(far_child));
        stack.push_back(std::move(near_child));
    }
    best.nodes = nodes;
    if (best.status == IlpStatus::Optimal) best.has_incumbent = true;
    return best;
}

}  // namespace gridstate
