#include "gridstate/power_flow.hpp"

#include <cmath>

#include "gridstate/kernels.hpp"

namespace gridstate {

namespace {

std::vector<cdouble> complex_voltages(const std::vector<double>& vm,
                                      const std::vector<double>& va) {
    std::vector<cdouble> v(vm.size());
    for (size_t i = 0; i < vm.size(); ++i) v[i] = std::polar(vm[i], va[i]);
    return v;
}

}  // namespace

AcPowerFlowSolver::Indexing AcPowerFlowSolver::make_indexing(const NetworkModel& net) const {
    Indexing ix;
    ix.slack = net.slack_index();
    ix.angle_col.assign(net.n_buses(), -1);
    ix.vm_col.assign(net.n_buses(), -1);
    for (int i = 0; i < net.n_buses(); ++i) {
        if (i == ix.slack) continue;
        ix.pvpq.push_back(i);
        if (net.bus(i).kind == BusKind::Pq) ix.pq.push_back(i);
    }
    for (size_t k = 0; k < ix.pvpq.size(); ++k) ix.angle_col[ix.pvpq[k]] = static_cast<int>(k);
    for (size_t k = 0; k < ix.pq.size(); ++k)
        ix.vm_col[ix.pq[k]] = static_cast<int>(ix.pvpq.size() + k);
    return ix;
}

std::vector<double> AcPowerFlowSolver::initial_vm(const NetworkModel& net, StartMode mode) const {
    std::vector<double> vm(net.n_buses(), 1.0);
    if (mode == StartMode::Warm && previous_) return previous_->vm;
    if (mode == StartMode::FromFile)
        for (int i = 0; i < net.n_buses(); ++i) vm[i] = net.bus(i).vm_init;
    else  // flat start keeps PV and slack magnitudes pinned at their setpoints
        for (int i = 0; i < net.n_buses(); ++i)
            if (net.bus(i).kind != BusKind::Pq) vm[i] = net.bus(i).vm_init;
    return vm;
}

std::vector<double> AcPowerFlowSolver::initial_va(const NetworkModel& net, StartMode mode) const {
    std::vector<double> va(net.n_buses(), 0.0);
    if (mode == StartMode::Warm && previous_) return previous_->va;
    if (mode == StartMode::FromFile)
        for (int i = 0; i < net.n_buses(); ++i) va[i] = net.bus(i).va_init;
    else
        for (int i = 0; i < net.n_buses(); ++i) va[i] = net.bus(net.slack_index()).va_init;
    return va;
}

void AcPowerFlowSolver::finalize(NetworkModel& net, PowerFlowResult& r) {
    const auto quantities = evaluate_branch_flows(net, r.vm, r.va);
    r.p_from = quantities.p_from;
    r.q_from = quantities.q_from;
    r.p_to = quantities.p_to;
    r.q_to = quantities.q_to;
    r.p_injection = quantities.p_injection;
    r.q_injection = quantities.q_injection;
    previous_ = Previous{r.vm, r.va};
}

PowerFlowResult AcPowerFlowSolver::solve_newton_raphson(NetworkModel& net,
                                                        const PowerFlowOptions& opts) {
    PowerFlowResult res;
    const bool had_model = net.has_ac();
    const AcModel& ac = net.ac();
    res.reuse.matrix_reused = had_model;
    res.reuse.warm_start = opts.start == StartMode::Warm && previous_.has_value();

    const auto components = net.connected_components();
    if (components.size() > 1) {
        res.error = "network is not connected; islands without the slack cannot be solved";
        return res;
    }
    const Indexing ix = make_indexing(net);
    const int n = net.n_buses();
    const int n_state = static_cast<int>(ix.pvpq.size() + ix.pq.size());

    res.vm = initial_vm(net, opts.start);
    res.va = initial_va(net, opts.start);
    const std::vector<double> p_spec = net.specified_p();
    const std::vector<double> q_spec = net.specified_q();

    // Fixed Jacobian pattern from the Y pattern: each Y column feeds one
    // angle column and (for PQ buses) one magnitude column; rows are the
    // P equations of non-slack buses then the Q equations of PQ buses.
    if (!jac_.valid || jac_.ac_pattern_rev != ac.pattern_rev || jac_.n_state != n_state) {
        SparseBuilder<double> jb(n_state, n_state);
        for (int j = 0; j < n; ++j) {
            for (int p = ac.ybus.col_ptr[j]; p < ac.ybus.col_ptr[j + 1]; ++p) {
                const int i = ac.ybus.row_idx[p];
                const int prow = ix.angle_col[i];  // same position as the P row
                const int qrow = ix.vm_col[i] >= 0
                                     ? static_cast<int>(ix.pq.size() ? ix.vm_col[i] : -1)
                                     : -1;
                if (ix.angle_col[j] >= 0) {
                    if (prow >= 0) jb.add(prow, ix.angle_col[j], 0.0);
                    if (qrow >= 0) jb.add(qrow, ix.angle_col[j], 0.0);
                }
                if (ix.vm_col[j] >= 0) {
                    if (prow >= 0) jb.add(prow, ix.vm_col[j], 0.0);
                    if (qrow >= 0) jb.add(qrow, ix.vm_col[j], 0.0);
                }
            }
        }
        jac_.j = jb.compress();
        jac_.ac_pattern_rev = ac.pattern_rev;
        jac_.n_state = n_state;
        jac_.valid = true;
        jac_lu_valid_ = false;
    } else {
        res.reuse.pattern_reused = true;
    }
    SparseMatrix<double>& jac = jac_.j;

    int grow_streak = 0;
    double prev_mis = kInf;
    for (int iter = 0;; ++iter) {
        const auto v = complex_voltages(res.vm, res.va);
        const auto ibus = ac.ybus.multiply(v);
        std::vector<double> p_calc(n), q_calc(n);
        for (int i = 0; i < n; ++i) {
            const cdouble s = v[i] * std::conj(ibus[i]);
            p_calc[i] = s.real();
            q_calc[i] = s.imag();
        }
        double mis = 0.0;
        std::vector<double> f(n_state);
        for (size_t k = 0; k < ix.pvpq.size(); ++k) {
            f[k] = p_calc[ix.pvpq[k]] - p_spec[ix.pvpq[k]];
            mis = std::max(mis, std::abs(f[k]));
        }
        for (size_t k = 0; k < ix.pq.size(); ++k) {
            f[ix.pvpq.size() + k] = q_calc[ix.pq[k]] - q_spec[ix.pq[k]];
            mis = std::max(mis, std::abs(f[ix.pvpq.size() + k]));
        }
        res.trace.push_back({iter, mis});
        res.max_mismatch = mis;
        if (!std::isfinite(mis)) {
            res.error = "newton-raphson diverged (non-finite mismatch)";
            return res;
        }
        if (mis < opts.tolerance) {
            res.converged = true;
            res.iterations = iter;
            break;
        }
        if (mis > prev_mis) {
            if (++grow_streak >= 5) {
                res.error = "newton-raphson diverged (mismatch grew for 5 iterations)";
                return res;
            }
        } else {
            grow_streak = 0;
        }
        prev_mis = mis;
        if (iter >= opts.max_iterations) {
            res.error = "newton-raphson exhausted max iterations";
            res.iterations = iter;
            return res;
        }

        // Numeric Jacobian refill over the fixed pattern, column by column.
        jac.set_zero();
        for (int j = 0; j < n; ++j) {
            const int ca = ix.angle_col[j], cv = ix.vm_col[j];
            if (ca < 0 && cv < 0) continue;
            for (int p = ac.ybus.col_ptr[j]; p < ac.ybus.col_ptr[j + 1]; ++p) {
                const int i = ac.ybus.row_idx[p];
                const double g = ac.ybus.values[p].real(), b = ac.ybus.values[p].imag();
                const int prow = ix.angle_col[i];
                const int qrow = ix.vm_col[i];
                double dp_da, dq_da, dp_dv, dq_dv;
                if (i == j) {
                    const double vi = res.vm[i];
                    dp_da = -q_calc[i] - b * vi * vi;
                    dq_da = p_calc[i] - g * vi * vi;
                    dp_dv = p_calc[i] / vi + g * vi;
                    dq_dv = q_calc[i] / vi - b * vi;
                } else {
                    const double vi = res.vm[i], vj = res.vm[j];
                    const double th = res.va[i] - res.va[j];
                    const double c = std::cos(th), s = std::sin(th);
                    dp_da = vi * vj * (g * s - b * c);
                    dq_da = -vi * vj * (g * c + b * s);
                    dp_dv = vi * (g * c + b * s);
                    dq_dv = vi * (g * s - b * c);
                }
                if (ca >= 0) {
                    if (prow >= 0) jac.values[jac.find_slot(prow, ca)] += dp_da;
                    if (qrow >= 0) jac.values[jac.find_slot(qrow, ca)] += dq_da;
                }
                if (cv >= 0) {
                    if (prow >= 0) jac.values[jac.find_slot(prow, cv)] += dp_dv;
                    if (qrow >= 0) jac.values[jac.find_slot(qrow, cv)] += dq_dv;
                }
            }
        }

        try {
            if (!jac_lu_valid_) {
                jac_lu_.factor(jac);
                jac_lu_valid_ = true;
            } else {
                jac_lu_.refactor(jac);
            }
        } catch (const SparseError& e) {
            res.error = std::string("jacobian factorization failed: ") + e.what();
            return res;
        }
        const std::vector<double> dx = jac_lu_.solve(f);
        for (size_t k = 0; k < ix.pvpq.size(); ++k) res.va[ix.pvpq[k]] -= dx[k];
        for (size_t k = 0; k < ix.pq.size(); ++k) res.vm[ix.pq[k]] -= dx[ix.pvpq.size() + k];
    }

    finalize(net, res);
    return res;
}

SparseMatrix<double> make_b_prime(const NetworkModel& net, FdVariant variant,
                                  const std::vector<int>& keep) {
    const int n = net.n_buses();
    std::vector<int> pos(n, -1);
    for (size_t k = 0; k < keep.size(); ++k) pos[keep[k]] = static_cast<int>(k);
    SparseBuilder<double> b(static_cast<int>(keep.size()), static_cast<int>(keep.size()));
    for (int br_i = 0; br_i < net.n_branches(); ++br_i) {
        const Branch& br = net.branch(br_i);
        if (!br.in_service) continue;
        const double r = variant == FdVariant::XB ? 0.0 : br.r;
        const cdouble y = 1.0 / cdouble(r, br.x);
        const cdouble rot = std::polar(1.0, br.shift);
        // taps forced to 1, charging and shunts dropped, shifts kept
        const double yff = -(y).imag();
        const double yft = -(-y * rot).imag();
        const double ytf = -(-y * std::conj(rot)).imag();
        const double ytt = -(y).imag();
        const int f = pos[net.bus_index(br.from)], t = pos[net.bus_index(br.to)];
        if (f >= 0) b.add(f, f, yff);
        if (f >= 0 && t >= 0) {
            b.add(f, t, yft);
            b.add(t, f, ytf);
        }
        if (t >= 0) b.add(t, t, ytt);
    }
    return b.compress();
}

SparseMatrix<double> make_b_double_prime(const NetworkModel& net, FdVariant variant,
                                         const std::vector<int>& keep) {
    const int n = net.n_buses();
    std::vector<int> pos(n, -1);
    for (size_t k = 0; k < keep.size(); ++k) pos[keep[k]] = static_cast<int>(k);
    SparseBuilder<double> b(static_cast<int>(keep.size()), static_cast<int>(keep.size()));
    for (int i = 0; i < n; ++i)
        if (pos[i] >= 0) b.add(pos[i], pos[i], -net.bus(i).b_shunt);
    for (int br_i = 0; br_i < net.n_branches(); ++br_i) {
        const Branch& br = net.branch(br_i);
        if (!br.in_service) continue;
        const double r = variant == FdVariant::BX ? 0.0 : br.r;
        const cdouble y = 1.0 / cdouble(r, br.x);
        const cdouble half(br.g_charging / 2.0, br.b_charging / 2.0);
        const double tau = br.tap;
        // shifts dropped, taps/charging kept
        const double yff = -((y + half) / (tau * tau)).imag();
        const double yft = -(-y / tau).imag();
        const double ytf = -(-y / tau).imag();
        const double ytt = -(y + half).imag();
        const int f = pos[net.bus_index(br.from)], t = pos[net.bus_index(br.to)];
        if (f >= 0) b.add(f, f, yff);
        if (f >= 0 && t >= 0) {
            b.add(f, t, yft);
            b.add(t, f, ytf);
        }
        if (t >= 0) b.add(t, t, ytt);
    }
    return b.compress();
}

PowerFlowResult AcPowerFlowSolver::solve_fast_decoupled(NetworkModel& net, FdVariant variant,
                                                        const PowerFlowOptions& opts) {
    PowerFlowResult res;
    const bool had_model = net.has_ac();
    const AcModel& ac = net.ac();
    res.reuse.matrix_reused = had_model;
    res.reuse.warm_start = opts.start == StartMode::Warm && previous_.has_value();

    if (net.connected_components().size() > 1) {
        res.error = "network is not connected";
        return res;
    }
    const Indexing ix = make_indexing(net);
    const int n = net.n_buses();

    FdCache& cache = fd_[variant == FdVariant::XB ? 0 : 1];
    if (cache.valid && cache.ac_pattern_rev == ac.pattern_rev &&
        cache.ac_value_rev == ac.value_rev) {
        res.reuse.factor_reused = true;
        res.reuse.pattern_reused = true;
    } else {
        SparseMatrix<double> bp = make_b_prime(net, variant, ix.pvpq);
        SparseMatrix<double> bpp = make_b_double_prime(net, variant, ix.pq);
        const bool same_pattern = cache.valid && bp.same_pattern(cache.bp) &&
                                  bpp.same_pattern(cache.bpp);
        try {
            if (same_pattern) {
                cache.bp = std::move(bp);
                cache.bpp = std::move(bpp);
                cache.bp_lu.refactor(cache.bp);
                if (cache.bpp.cols > 0) cache.bpp_lu.refactor(cache.bpp);
                res.reuse.pattern_reused = true;
            } else {
                cache.bp = std::move(bp);
                cache.bpp = std::move(bpp);
                cache.bp_lu.factor(cache.bp);
                if (cache.bpp.cols > 0) cache.bpp_lu.factor(cache.bpp);
            }
        } catch (const SparseError& e) {
            res.error = std::string("fast-decoupled factorization failed: ") + e.what();
            cache.valid = false;
            return res;
        }
        cache.ac_pattern_rev = ac.pattern_rev;
        cache.ac_value_rev = ac.value_rev;
        cache.valid = true;
    }

    res.vm = initial_vm(net, opts.start);
    res.va = initial_va(net, opts.start);
    const std::vector<double> p_spec = net.specified_p();
    const std::vector<double> q_spec = net.specified_q();

    auto mismatches = [&](std::vector<double>& pmis, std::vector<double>& qmis) -> double {
        const auto v = complex_voltages(res.vm, res.va);
        const auto ibus = ac.ybus.multiply(v);
        double mis = 0.0;
        pmis.resize(ix.pvpq.size());
        qmis.resize(ix.pq.size());
        for (size_t k = 0; k < ix.pvpq.size(); ++k) {
            const int i = ix.pvpq[k];
            const cdouble s = v[i] * std::conj(ibus[i]);
            pmis[k] = (s.real() - p_spec[i]) / res.vm[i];
            mis = std::max(mis, std::abs(s.real() - p_spec[i]));
        }
        for (size_t k = 0; k < ix.pq.size(); ++k) {
            const int i = ix.pq[k];
            const cdouble s = v[i] * std::conj(ibus[i]);
            qmis[k] = (s.imag() - q_spec[i]) / res.vm[i];
            mis = std::max(mis, std::abs(s.imag() - q_spec[i]));
        }
        return mis;
    };

    std::vector<double> pmis, qmis;
    int grow_streak = 0;
    double prev_mis = kInf;
    for (int iter = 0;; ++iter) {
        const double mis = mismatches(pmis, qmis);
        res.trace.push_back({iter, mis});
        res.max_mismatch = mis;
        if (!std::isfinite(mis)) {
            res.error = "fast-decoupled diverged (non-finite mismatch)";
            return res;
        }
        if (mis < opts.tolerance) {
            res.converged = true;
            res.iterations = iter;
            break;
        }
        if (mis > prev_mis) {
            if (++grow_streak >= 5) {
                res.error = "fast-decoupled diverged (mismatch grew for 5 iterations)";
                return res;
            }
        } else {
            grow_streak = 0;
        }
        prev_mis = mis;
        if (iter >= opts.max_iterations) {
            res.error = "fast-decoupled exhausted max iterations";
            res.iterations = iter;
            return res;
        }

        // P half-iteration.
        const std::vector<double> dva = cache.bp_lu.solve(pmis);
        for (size_t k = 0; k < ix.pvpq.size(); ++k) res.va[ix.pvpq[k]] -= dva[k];
        // Q half-iteration on the refreshed state.
        if (!ix.pq.empty()) {
            mismatches(pmis, qmis);
            const std::vector<double> dvm = cache.bpp_lu.solve(qmis);
            for (size_t k = 0; k < ix.pq.size(); ++k) res.vm[ix.pq[k]] -= dvm[k];
        }
    }

    finalize(net, res);
    return res;
}

PowerFlowResult AcPowerFlowSolver::solve_gauss_seidel(NetworkModel& net,
                                                      const PowerFlowOptions& opts) {
    PowerFlowResult res;
    const bool had_model = net.has_ac();
    const AcModel& ac = net.ac();
    res.reuse.matrix_reused = had_model;
    res.reuse.warm_start = opts.start == StartMode::Warm && previous_.has_value();
    if (net.connected_components().size() > 1) {
        res.error = "network is not connected";
        return res;
    }
    const Indexing ix = make_indexing(net);
    const int n = net.n_buses();
    res.vm = initial_vm(net, opts.start);
    res.va = initial_va(net, opts.start);
    const std::vector<double> p_spec = net.specified_p();
    const std::vector<double> q_spec = net.specified_q();

    auto v = complex_voltages(res.vm, res.va);
    auto row_sum = [&](int i) {
        cdouble s = 0.0;
        for (int p = ac.row_ptr[i]; p < ac.row_ptr[i + 1]; ++p)
            s += ac.ybus.values[ac.row_slot[p]] * v[ac.row_col[p]];
        return s;
    };

    int grow_streak = 0;
    double prev_mis = kInf;
    for (int iter = 0;; ++iter) {
        double mis = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == ix.slack) continue;
            const cdouble s = v[i] * std::conj(row_sum(i));
            mis = std::max(mis, std::abs(s.real() - p_spec[i]));
            if (net.bus(i).kind == BusKind::Pq)
                mis = std::max(mis, std::abs(s.imag() - q_spec[i]));
        }
        res.trace.push_back({iter, mis});
        res.max_mismatch = mis;
        if (!std::isfinite(mis)) {
            res.error = "gauss-seidel diverged (non-finite mismatch)";
            return res;
        }
        if (mis < opts.tolerance) {
            res.converged = true;
            res.iterations = iter;
            break;
        }
        if (mis > prev_mis) {
            if (++grow_streak >= 20) {  // slow divergence window
                res.error = "gauss-seidel diverged (mismatch grew for 20 iterations)";
                return res;
            }
        } else {
            grow_streak = 0;
        }
        prev_mis = mis;
        if (iter >= opts.max_iterations_gs) {
            res.error = "gauss-seidel exhausted max iterations";
            res.iterations = iter;
            return res;
        }

        for (int i = 0; i < n; ++i) {
            if (i == ix.slack) continue;
            const cdouble yii = ac.ybus.values[ac.diag_slot[i]];
            if (net.bus(i).kind == BusKind::Pq) {
                const cdouble s_spec(p_spec[i], q_spec[i]);
                const cdouble rest = row_sum(i) - yii * v[i];
                v[i] = (std::conj(s_spec / v[i]) - rest) / yii;
            } else {
                // PV bus: use the computed reactive injection, then pin the
                // magnitude back to its setpoint.
                const double q_calc = (v[i] * std::conj(row_sum(i))).imag();
                const cdouble s_spec(p_spec[i], q_calc);
                const cdouble rest = row_sum(i) - yii * v[i];
                const cdouble vnew = (std::conj(s_spec / v[i]) - rest) / yii;
                v[i] = std::polar(res.vm[i], std::arg(vnew));
            }
        }
        for (int i = 0; i < n; ++i) {
            res.vm[i] = std::abs(v[i]);
            res.va[i] = std::arg(v[i]);
        }
        for (int i = 0; i < n; ++i)
            if (net.bus(i).kind != BusKind::Pq) res.vm[i] = initial_vm(net, opts.start)[i];
        v = complex_voltages(res.vm, res.va);
    }

    finalize(net, res);
    return res;
}

DcPowerFlowResult DcPowerFlowSolver::solve(NetworkModel& net) {
    DcPowerFlowResult res;
    const bool had_model = net.has_dc();
    const DcModel& dc = net.dc();
    res.reuse.matrix_reused = had_model;
    const int n = net.n_buses();
    const int slack = net.slack_index();

    const auto components = net.connected_components();
    if (components.size() > 1) {
        for (const auto& comp : components) {
            bool has_slack = false;
            for (int i : comp) has_slack |= (i == slack);
            if (!has_slack) {
                for (int i : comp) res.unsolvable_island.push_back(net.bus(i).id);
                break;
            }
        }
        res.error = "reduced susceptance matrix is singular: island without a slack bus";
        return res;
    }

    if (!valid_ || slack_ != slack || pattern_rev_ != dc.pattern_rev) {
        // Build the reduced matrix and the slot map used for later refills.
        std::vector<int> pos(n, -1);
        int k = 0;
        for (int i = 0; i < n; ++i)
            if (i != slack) pos[i] = k++;
        SparseBuilder<double> rb(n - 1, n - 1);
        for (int j = 0; j < n; ++j) {
            if (j == slack) continue;
            for (int p = dc.b.col_ptr[j]; p < dc.b.col_ptr[j + 1]; ++p) {
                const int i = dc.b.row_idx[p];
                if (i == slack) continue;
                rb.add(pos[i], pos[j], 0.0);
            }
        }
        reduced_ = rb.compress();
        value_map_.assign(reduced_.nnz(), -1);
        for (int j = 0; j < n; ++j) {
            if (j == slack) continue;
            for (int p = dc.b.col_ptr[j]; p < dc.b.col_ptr[j + 1]; ++p) {
                const int i = dc.b.row_idx[p];
                if (i == slack) continue;
                value_map_[reduced_.find_slot(pos[i], pos[j])] = p;
            }
        }
        for (int s = 0; s < reduced_.nnz(); ++s) reduced_.values[s] = dc.b.values[value_map_[s]];
        try {
            lu_.factor(reduced_);
        } catch (const SingularMatrixError& e) {
            res.error = std::string("reduced susceptance matrix is singular: ") + e.what();
            valid_ = false;
            return res;
        }
        pattern_rev_ = dc.pattern_rev;
        value_rev_ = dc.value_rev;
        slack_ = slack;
        valid_ = true;
    } else if (value_rev_ != dc.value_rev) {
        for (int s = 0; s < reduced_.nnz(); ++s) reduced_.values[s] = dc.b.values[value_map_[s]];
        try {
            lu_.refactor(reduced_);
        } catch (const SingularMatrixError& e) {
            res.error = std::string("reduced susceptance matrix is singular: ") + e.what();
            valid_ = false;
            return res;
        }
        value_rev_ = dc.value_rev;
        res.reuse.pattern_reused = true;
    } else {
        res.reuse.factor_reused = true;
        res.reuse.pattern_reused = true;
    }

    const double theta_slack = net.bus(slack).va_init;
    const std::vector<double> p_spec = net.specified_p();
    std::vector<double> rhs;
    rhs.reserve(n - 1);
    for (int i = 0; i < n; ++i) {
        if (i == slack) continue;
        double v = p_spec[i] - dc.shift_injection[i] - dc.shunt_p[i];
        // Move the slack column's contribution to the right-hand side.
        v -= dc.b.at(i, slack) * theta_slack;
        rhs.push_back(v);
    }
    const std::vector<double> reduced_theta = lu_.solve(rhs);
    res.theta.assign(n, theta_slack);
    int k = 0;
    for (int i = 0; i < n; ++i)
        if (i != slack) res.theta[i] = reduced_theta[k++];

    const auto binj = dc.b.multiply(res.theta);
    res.p_injection.resize(n);
    for (int i = 0; i < n; ++i)
        res.p_injection[i] = binj[i] + dc.shift_injection[i] + dc.shunt_p[i];
    res.slack_p = res.p_injection[slack];
    res.p_from.resize(net.n_branches());
    for (int b = 0; b < net.n_branches(); ++b) {
        const Branch& br = net.branch(b);
        const int f = net.bus_index(br.from), t = net.bus_index(br.to);
        res.p_from[b] =
            dc.branch_susceptance[b] * (res.theta[f] - res.theta[t] - br.shift);
    }
    res.success = true;
    return res;
}

PowerFlowResult solve_newton_raphson(NetworkModel& net, const PowerFlowOptions& opts) {
    AcPowerFlowSolver s;
    return s.solve_newton_raphson(net, opts);
}
PowerFlowResult solve_fast_decoupled(NetworkModel& net, FdVariant variant,
                                     const PowerFlowOptions& opts) {
    AcPowerFlowSolver s;
    return s.solve_fast_decoupled(net, variant, opts);
}
PowerFlowResult solve_gauss_seidel(NetworkModel& net, const PowerFlowOptions& opts) {
    AcPowerFlowSolver s;
    return s.solve_gauss_seidel(net, opts);
}
DcPowerFlowResult solve_dc(NetworkModel& net) {
    DcPowerFlowSolver s;
    return s.solve(net);
}

}  // namespace gridstate
