#include "gridstate/dc_opf.hpp"

#include <cmath>

#include "gridstate/lp.hpp"

namespace gridstate {

DcOpfResult solve_dc_opf(NetworkModel& net, const DcOpfOptions& opts) {
    DcOpfResult res;
    const DcModel& dc = net.dc();
    const int n = net.n_buses();
    const int slack = net.slack_index();
    const double theta_slack = net.bus(slack).va_init;

    LinearProgram lp;

    // Bus angle variables (slack excluded, pinned to its file angle).
    std::vector<int> theta_var(n, -1);
    for (int i = 0; i < n; ++i) {
        if (i == slack) continue;
        theta_var[i] = lp.add_var(-kInf, kInf, 0.0);
        if (opts.warm_theta && static_cast<int>(opts.warm_theta->size()) == n)
            lp.set_initial(theta_var[i], (*opts.warm_theta)[i]);
    }
    res.reuse.warm_start = opts.warm_theta.has_value();

    // Generator output variables and their costs.
    std::vector<int> pg_var(net.n_generators(), -1);
    for (int g = 0; g < net.n_generators(); ++g) {
        const Generator& gen = net.generator(g);
        if (!gen.in_service) continue;
        CostCurve cost = gen.cost;
        double lo = gen.p_min, hi = gen.p_max;
        if (lo > hi) {
            res.error = "generator " + std::to_string(g) + ": p_min > p_max";
            return res;
        }

        if (cost.kind == CostCurve::Kind::LinearPolynomial && !cost.is_polynomial_linear()) {
            if (!opts.linearize_quadratic) {
                res.error =
                    "generator " + std::to_string(g) +
                    ": polynomial cost has a nonzero quadratic term; the DC OPF is an exact "
                    "LP. Re-run with piecewise linearization enabled to approximate it.";
                return res;
            }
            if (cost.poly.size() > 3 || (cost.poly.size() == 3 && cost.poly[2] < 0.0)) {
                res.error = "generator " + std::to_string(g) +
                            ": only convex quadratic costs can be linearized";
                return res;
            }
            if (!std::isfinite(lo) || !std::isfinite(hi) || hi <= lo) {
                res.error = "generator " + std::to_string(g) +
                            ": quadratic linearization needs finite output limits";
                return res;
            }
            CostCurve pwl;
            pwl.kind = CostCurve::Kind::PiecewiseLinear;
            const int segs = std::max(1, opts.piecewise_segments);
            for (int k = 0; k <= segs; ++k) {
                const double p = lo + (hi - lo) * k / segs;
                double c = 0.0, pk = 1.0;
                for (double coef : cost.poly) {
                    c += coef * pk;
                    pk *= p;
                }
                pwl.points.push_back({p, c});
            }
            cost = pwl;
        }

        if (cost.kind == CostCurve::Kind::LinearPolynomial) {
            const double c0 = cost.poly.empty() ? 0.0 : cost.poly[0];
            const double c1 = cost.poly.size() > 1 ? cost.poly[1] : 0.0;
            pg_var[g] = lp.add_var(lo, hi, c1);
            lp.objective_constant += c0;
        } else {
            cost.validate();
            const double plo = std::max(lo, cost.points.front().first);
            const double phi = std::min(hi, cost.points.back().first);
            if (plo > phi) {
                res.error = "generator " + std::to_string(g) +
                            ": piecewise cost domain does not cover the output limits";
                return res;
            }
            pg_var[g] = lp.add_var(plo, phi, 0.0);
            const int t = lp.add_var(-kInf, kInf, 1.0);  // epigraph variable
            for (size_t k = 1; k < cost.points.size(); ++k) {
                const auto& [p0, c0] = cost.points[k - 1];
                const auto& [p1, c1] = cost.points[k];
                const double slope = (c1 - c0) / (p1 - p0);
                // t >= c0 + slope (pg - p0)
                lp.add_row(RowSense::GreaterEqual, c0 - slope * p0, {t, pg_var[g]},
                           {1.0, -slope}, "cost-seg(g" + std::to_string(g) + ")");
            }
        }
    }

    // Nodal balance: sum Pg - B theta = Pd + Gs + shift (+ slack column).
    for (int i = 0; i < n; ++i) {
        std::vector<int> idx;
        std::vector<double> val;
        double rhs = net.bus(i).p_load + dc.shunt_p[i] + dc.shift_injection[i];
        for (int g = 0; g < net.n_generators(); ++g) {
            if (pg_var[g] < 0) continue;
            if (net.bus_index(net.generator(g).bus) == i) {
                idx.push_back(pg_var[g]);
                val.push_back(1.0);
            }
        }
        // B row i via the symmetric column.
        for (int p = dc.b.col_ptr[i]; p < dc.b.col_ptr[i + 1]; ++p) {
            const int j = dc.b.row_idx[p];
            const double bij = dc.b.values[p];
            if (theta_var[j] >= 0) {
                idx.push_back(theta_var[j]);
                val.push_back(-bij);
            } else {
                rhs += bij * theta_slack;
            }
        }
        lp.add_row(RowSense::Equal, rhs, std::move(idx), std::move(val),
                   "balance(" + std::to_string(net.bus(i).id) + ")");
    }

    // Branch flow limits.
    for (int b = 0; b < net.n_branches(); ++b) {
        const Branch& br = net.branch(b);
        if (!br.in_service || br.rate_a <= 0.0) continue;
        const int f = net.bus_index(br.from), t = net.bus_index(br.to);
        const double bb = dc.branch_susceptance[b];
        std::vector<int> idx;
        std::vector<double> val;
        double base = -br.shift * bb;
        if (theta_var[f] >= 0) {
            idx.push_back(theta_var[f]);
            val.push_back(bb);
        } else {
            base += bb * theta_slack;
        }
        if (theta_var[t] >= 0) {
            idx.push_back(theta_var[t]);
            val.push_back(-bb);
        } else {
            base -= bb * theta_slack;
        }
        lp.add_row(RowSense::LessEqual, br.rate_a - base, idx, val,
                   "limit(" + std::to_string(b + 1) + ",fwd)");
        std::vector<double> neg(val.size());
        for (size_t k = 0; k < val.size(); ++k) neg[k] = -val[k];
        lp.add_row(RowSense::LessEqual, br.rate_a + base, idx, neg,
                   "limit(" + std::to_string(b + 1) + ",rev)");
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Infeasible) {
        res.infeasible = true;
        res.violated_constraints = sol.infeasible_rows;
        res.error = "DC OPF infeasible (limits too tight)";
        return res;
    }
    if (sol.status == LpStatus::Unbounded) {
        res.unbounded = true;
        res.error = "DC OPF unbounded (missing generator limits)";
        return res;
    }
    if (sol.status != LpStatus::Optimal) {
        res.error = "DC OPF solver stalled within its pivot budget";
        return res;
    }

    res.success = true;
    res.objective = sol.objective;
    res.generator_p.assign(net.n_generators(), 0.0);
    for (int g = 0; g < net.n_generators(); ++g)
        if (pg_var[g] >= 0) res.generator_p[g] = sol.x[pg_var[g]];
    res.theta.assign(n, theta_slack);
    for (int i = 0; i < n; ++i)
        if (theta_var[i] >= 0) res.theta[i] = sol.x[theta_var[i]];
    res.p_from.resize(net.n_branches());
    for (int b = 0; b < net.n_branches(); ++b) {
        const Branch& br = net.branch(b);
        const int f = net.bus_index(br.from), t = net.bus_index(br.to);
        res.p_from[b] = dc.branch_susceptance[b] * (res.theta[f] - res.theta[t] - br.shift);
    }
    return res;
}

}  // namespace gridstate
