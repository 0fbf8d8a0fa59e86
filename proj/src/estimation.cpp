#include "gridstate/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gridstate/lp.hpp"
#include "gridstate/qr.hpp"

namespace gridstate {

namespace {

// Power flow and partial derivatives of one branch side:
//   S_self = a* |V_self|^2 + V_self V_other e^{j d} b*,  d = th_self - th_other
struct FlowEval {
    double p, q;
    double dp_dth_self, dp_dth_other, dp_dv_self, dp_dv_other;
    double dq_dth_self, dq_dth_other, dq_dv_self, dq_dv_other;
};

FlowEval eval_flow(double v_self, double v_other, double th_self, double th_other, cdouble a,
                   cdouble b) {
    const double d = th_self - th_other;
    const double c = std::cos(d), s = std::sin(d);
    const double ar = a.real(), ai = a.imag();
    const double br = b.real(), bi = b.imag();
    FlowEval f;
    const double k1 = br * c + bi * s;   // in-phase term
    const double k2 = br * s - bi * c;   // quadrature term
    f.p = ar * v_self * v_self + v_self * v_other * k1;
    f.q = -ai * v_self * v_self + v_self * v_other * k2;
    f.dp_dth_self = -v_self * v_other * k2;
    f.dp_dth_other = v_self * v_other * k2;
    f.dp_dv_self = 2.0 * ar * v_self + v_other * k1;
    f.dp_dv_other = v_self * k1;
    f.dq_dth_self = v_self * v_other * k1;
    f.dq_dth_other = -v_self * v_other * k1;
    f.dq_dv_self = -2.0 * ai * v_self + v_other * k2;
    f.dq_dv_other = v_self * k2;
    return f;
}

// Complex branch-side current and its partials w.r.t. the polar state.
struct CurrentEval {
    cdouble i;
    cdouble di_dth_self, di_dth_other, di_dv_self, di_dv_other;
};

CurrentEval eval_current(double v_self, double v_other, double th_self, double th_other,
                         cdouble a, cdouble b) {
    const cdouble e_self = std::polar(1.0, th_self);
    const cdouble e_other = std::polar(1.0, th_other);
    CurrentEval ce;
    ce.i = a * v_self * e_self + b * v_other * e_other;
    ce.di_dth_self = cdouble(0, 1) * a * v_self * e_self;
    ce.di_dth_other = cdouble(0, 1) * b * v_other * e_other;
    ce.di_dv_self = a * e_self;
    ce.di_dv_other = b * e_other;
    return ce;
}

constexpr double kCurrentFloor = 1e-8;  // |I| derivative guard

// Symmetric 2x2 inverse and inverse square root.
std::array<double, 4> inv2x2(double a, double b, double c) {
    const double det = a * c - b * b;
    if (det <= 0.0) throw EstimationError("covariance block is not positive definite");
    return {c / det, -b / det, -b / det, a / det};
}

std::array<double, 4> isqrt2x2(double a, double b, double c) {
    // Eigen-decomposition of [[a,b],[b,c]].
    const double tr = a + c;
    const double gap = std::sqrt(std::max(0.0, (a - c) * (a - c) / 4.0 + b * b));
    const double l1 = tr / 2.0 + gap, l2 = tr / 2.0 - gap;
    if (l2 <= 0.0) throw EstimationError("covariance block is not positive definite");
    double v1x, v1y;
    if (std::abs(b) > 1e-300) {
        v1x = l1 - c;
        v1y = b;
    } else {
        v1x = a >= c ? 1.0 : 0.0;
        v1y = a >= c ? 0.0 : 1.0;
    }
    const double n = std::hypot(v1x, v1y);
    v1x /= n;
    v1y /= n;
    const double w1 = 1.0 / std::sqrt(l1), w2 = 1.0 / std::sqrt(l2);
    // Q diag(w) Q^T with Q = [v1, v2], v2 = rot90(v1)
    const double v2x = -v1y, v2y = v1x;
    return {w1 * v1x * v1x + w2 * v2x * v2x, w1 * v1x * v1y + w2 * v2x * v2y,
            w1 * v1x * v1y + w2 * v2x * v2y, w1 * v1y * v1y + w2 * v2y * v2y};
}

}  // namespace

EstimationModel::EstimationModel(NetworkModel& net, const MeasurementSet& set,
                                 EstimationModelKind kind, const EstimationModelOptions& opts)
    : net_(net), set_(set), kind_(kind), opts_(opts) {
    build_state_indexing();
    build_rows(set);
    seen_value_rev_ = set.value_rev();
    seen_variance_rev_ = set.variance_rev();
    seen_status_rev_ = set.status_rev();
    seen_structure_rev_ = set.structure_rev();
}

void EstimationModel::build_state_indexing() {
    const int n = net_.n_buses();
    slack_ = net_.slack_index();
    angle_col_.assign(n, -1);
    vm_col_.assign(n, -1);
    switch (kind_) {
        case EstimationModelKind::AcNonlinear: {
            int c = 0;
            for (int i = 0; i < n; ++i)
                if (i != slack_) angle_col_[i] = c++;
            for (int i = 0; i < n; ++i) vm_col_[i] = c++;
            m_states_ = 2 * n - 1;
            break;
        }
        case EstimationModelKind::PmuLinear: {
            // angle_col_ holds the real part columns, vm_col_ the imaginary.
            for (int i = 0; i < n; ++i) {
                angle_col_[i] = i;
                vm_col_[i] = n + i;
            }
            m_states_ = 2 * n;
            break;
        }
        case EstimationModelKind::Dc: {
            int c = 0;
            for (int i = 0; i < n; ++i)
                if (i != slack_) angle_col_[i] = c++;
            m_states_ = n - 1;
            break;
        }
    }
}

// Internal per-row evaluation dispatch.
enum class RowFunc : uint8_t {
    BusVmag,
    BusAngle,
    BusPinj,
    BusQinj,
    FlowP,
    FlowQ,
    CurrentMag,
    CurrentAng,
    VRe,
    VIm,
    CurrentRe,
    CurrentIm,
    Linear,
};

struct RowSpecStorage {
    std::vector<RowFunc> func;
    std::vector<int> bus;     // internal index
    std::vector<int> branch;  // 0-based
    std::vector<uint8_t> from_side;
};

namespace {

int branch_index_of(const NetworkModel& net, const Measurement& m) {
    if (m.element < 1 || m.element > net.n_branches())
        throw EstimationError("measurement " + m.id + ": dangling branch reference");
    return m.element - 1;
}

}  // namespace

void EstimationModel::build_rows(const MeasurementSet& set) {
    rows_.clear();
    active_.clear();
    blocks_.clear();
    row_block_.clear();
    jac_ = RowMatrix{};
    jac_.cols = m_states_;
    h_.clear();
    skipped_ = 0;

    spec_ = std::make_shared<RowSpecStorage>();
    auto& spec = *spec_;

    const AcModel* ac = kind_ != EstimationModelKind::Dc ? &net_.ac() : nullptr;
    const DcModel* dcm = kind_ == EstimationModelKind::Dc ? &net_.dc() : nullptr;
    ac_pattern_rev_seen_ = ac ? ac->pattern_rev : 0;
    const double theta_slack = net_.bus(slack_).va_init;

    auto push_row = [&](int meas, int component, RowFunc func, int bus, int branch,
                        bool from_side, std::vector<int> support, std::vector<double> vals,
                        double z, double c) -> int {
        rows_.push_back({meas, component, z, c});
        active_.push_back(set.at(meas).in_service ? 1 : 0);
        spec.func.push_back(func);
        spec.bus.push_back(bus);
        spec.branch.push_back(branch);
        spec.from_side.push_back(from_side ? 1 : 0);
        jac_.add_row(std::move(support), std::move(vals));
        row_block_.push_back(-1);
        return static_cast<int>(rows_.size()) - 1;
    };

    auto scalar_block = [&](int row, double var) {
        blocks_.push_back({row, -1, var, 0.0, 0.0});
        row_block_[row] = static_cast<int>(blocks_.size()) - 1;
    };

    auto ac_flow_support = [&](int f, int t) {
        std::vector<int> s;
        if (angle_col_[f] >= 0) s.push_back(angle_col_[f]);
        s.push_back(vm_col_[f]);
        if (angle_col_[t] >= 0) s.push_back(angle_col_[t]);
        s.push_back(vm_col_[t]);
        return s;
    };

    // Pairing of phasor mag/ang measurements by (group, element, side).
    std::map<std::tuple<int, int, int>, std::pair<int, int>> pairs;  // -> (mag idx, ang idx)
    for (int mi = 0; mi < set.size(); ++mi) {
        const Measurement& m = set.at(mi);
        if (!kind_is_phasor(m.kind)) continue;
        const int group = (m.kind == MeasurementKind::VphasorMag ||
                           m.kind == MeasurementKind::VphasorAng)
                              ? 0
                              : 1;
        const auto key = std::make_tuple(group, m.element, static_cast<int>(m.side));
        auto& slot = pairs.emplace(key, std::make_pair(-1, -1)).first->second;
        if (m.kind == MeasurementKind::VphasorMag || m.kind == MeasurementKind::IphasorMag)
            slot.first = mi;
        else
            slot.second = mi;
    }

    auto rect_block = [&](int mag_idx, int ang_idx, int row_re, int row_im) {
        const Measurement& mm = set.at(mag_idx);
        const Measurement& ma = set.at(ang_idx);
        const bool neglect = opts_.neglect_covariance_override.value_or(
            mm.neglect_covariance || ma.neglect_covariance);
        const RectangularPhasor r =
            phasor_to_rectangular(mm.value, ma.value, mm.variance, ma.variance);
        rows_[row_re].z = r.re;
        rows_[row_im].z = r.im;
        SigmaBlock blk;
        blk.row0 = row_re;
        blk.row1 = row_im;
        blk.c00 = r.var_re;
        blk.c01 = neglect ? 0.0 : r.cov;
        blk.c11 = r.var_im;
        blocks_.push_back(blk);
        row_block_[row_re] = row_block_[row_im] = static_cast<int>(blocks_.size()) - 1;
    };

    for (int mi = 0; mi < set.size(); ++mi) {
        const Measurement& m = set.at(mi);
        switch (kind_) {
            case EstimationModelKind::AcNonlinear: {
                if (kind_is_phasor(m.kind)) break;  // handled below
                switch (m.kind) {
                    case MeasurementKind::Vmag: {
                        const int i = net_.bus_index(m.element);
                        const int row = push_row(mi, 0, RowFunc::BusVmag, i, -1, true,
                                                 {vm_col_[i]}, {0.0}, m.value, 0.0);
                        scalar_block(row, m.variance);
                        break;
                    }
                    case MeasurementKind::Pinj:
                    case MeasurementKind::Qinj: {
                        const int i = net_.bus_index(m.element);
                        std::vector<int> support;
                        for (int p = ac->row_ptr[i]; p < ac->row_ptr[i + 1]; ++p) {
                            const int k = ac->row_col[p];
                            if (angle_col_[k] >= 0) support.push_back(angle_col_[k]);
                            support.push_back(vm_col_[k]);
                        }
                        std::vector<double> vals(support.size(), 0.0);
                        const int row = push_row(
                            mi, 0,
                            m.kind == MeasurementKind::Pinj ? RowFunc::BusPinj : RowFunc::BusQinj,
                            i, -1, true, std::move(support), std::move(vals), m.value, 0.0);
                        scalar_block(row, m.variance);
                        break;
                    }
                    case MeasurementKind::Pflow:
                    case MeasurementKind::Qflow:
                    case MeasurementKind::Imag: {
                        const int b = branch_index_of(net_, m);
                        const int f = net_.bus_index(net_.branch(b).from);
                        const int t = net_.bus_index(net_.branch(b).to);
                        RowFunc fn = m.kind == MeasurementKind::Pflow
                                         ? RowFunc::FlowP
                                         : (m.kind == MeasurementKind::Qflow ? RowFunc::FlowQ
                                                                             : RowFunc::CurrentMag);
                        auto support = ac_flow_support(f, t);
                        std::vector<double> vals(support.size(), 0.0);
                        const int row =
                            push_row(mi, 0, fn, -1, b, m.side == BranchSide::From,
                                     std::move(support), std::move(vals), m.value, 0.0);
                        scalar_block(row, m.variance);
                        break;
                    }
                    default:
                        break;
                }
                break;
            }
            case EstimationModelKind::PmuLinear:
                if (!kind_is_phasor(m.kind)) ++skipped_;
                break;
            case EstimationModelKind::Dc: {
                if (m.kind == MeasurementKind::Pflow) {
                    const int b = branch_index_of(net_, m);
                    const Branch& br = net_.branch(b);
                    const int f = net_.bus_index(br.from), t = net_.bus_index(br.to);
                    const double bb = dcm->branch_susceptance[b];
                    const double sign = m.side == BranchSide::From ? 1.0 : -1.0;
                    std::vector<int> support;
                    std::vector<double> vals;
                    double c = -sign * br.shift * bb;
                    if (angle_col_[f] >= 0) {
                        support.push_back(angle_col_[f]);
                        vals.push_back(sign * bb);
                    } else {
                        c += sign * bb * theta_slack;
                    }
                    if (angle_col_[t] >= 0) {
                        support.push_back(angle_col_[t]);
                        vals.push_back(-sign * bb);
                    } else {
                        c -= sign * bb * theta_slack;
                    }
                    const int row = push_row(mi, 0, RowFunc::Linear, -1, b, true,
                                             std::move(support), std::move(vals), m.value, c);
                    scalar_block(row, m.variance);
                } else if (m.kind == MeasurementKind::Pinj) {
                    const int i = net_.bus_index(m.element);
                    std::vector<int> support;
                    std::vector<double> vals;
                    double c = dcm->shift_injection[i] + dcm->shunt_p[i];
                    // B is numerically symmetric (shifts live in the
                    // injection vector), so column i doubles as row i.
                    for (int p = dcm->b.col_ptr[i]; p < dcm->b.col_ptr[i + 1]; ++p) {
                        const int j = dcm->b.row_idx[p];
                        const double bij = dcm->b.values[p];
                        if (angle_col_[j] >= 0) {
                            support.push_back(angle_col_[j]);
                            vals.push_back(bij);
                        } else {
                            c += bij * theta_slack;
                        }
                    }
                    const int row = push_row(mi, 0, RowFunc::Linear, i, -1, true,
                                             std::move(support), std::move(vals), m.value, c);
                    scalar_block(row, m.variance);
                } else if (m.kind == MeasurementKind::VphasorAng) {
                    const int i = net_.bus_index(m.element);
                    std::vector<int> support;
                    std::vector<double> vals;
                    double c = 0.0;
                    if (angle_col_[i] >= 0) {
                        support.push_back(angle_col_[i]);
                        vals.push_back(1.0);
                    } else {
                        c = theta_slack;
                    }
                    const int row = push_row(mi, 0, RowFunc::Linear, i, -1, true,
                                             std::move(support), std::move(vals), m.value, c);
                    scalar_block(row, m.variance);
                } else {
                    ++skipped_;
                }
                break;
            }
        }
    }

    // Phasor rows for the AC nonlinear and PMU models.
    if (kind_ != EstimationModelKind::Dc) {
        for (const auto& [key, pr] : pairs) {
            const auto [group, element, side_i] = key;
            const int mag_idx = pr.first, ang_idx = pr.second;
            const bool have_pair = mag_idx >= 0 && ang_idx >= 0;

            PhasorCoords coords = PhasorCoords::Polar;
            if (mag_idx >= 0) coords = set.at(mag_idx).coordinates;
            else if (ang_idx >= 0) coords = set.at(ang_idx).coordinates;
            if (kind_ == EstimationModelKind::PmuLinear) coords = PhasorCoords::Rect;

            if (coords == PhasorCoords::Rect && !have_pair)
                throw EstimationError(
                    "rectangular phasor treatment requires a magnitude/angle pair (element " +
                    std::to_string(element) + ")");

            if (kind_ == EstimationModelKind::AcNonlinear) {
                if (coords == PhasorCoords::Polar) {
                    if (group == 0) {
                        const int i = net_.bus_index(element);
                        if (mag_idx >= 0) {
                            const int row =
                                push_row(mag_idx, 0, RowFunc::BusVmag, i, -1, true,
                                         {vm_col_[i]}, {0.0}, set.at(mag_idx).value, 0.0);
                            scalar_block(row, set.at(mag_idx).variance);
                        }
                        if (ang_idx >= 0) {
                            std::vector<int> support;
                            std::vector<double> vals;
                            double c = 0.0;
                            if (angle_col_[i] >= 0) {
                                support.push_back(angle_col_[i]);
                                vals.push_back(0.0);
                            } else {
                                c = theta_slack;
                            }
                            const int row = push_row(ang_idx, 1, RowFunc::BusAngle, i, -1, true,
                                                     std::move(support), std::move(vals),
                                                     set.at(ang_idx).value, c);
                            scalar_block(row, set.at(ang_idx).variance);
                        }
                    } else {
                        const Measurement& any = set.at(mag_idx >= 0 ? mag_idx : ang_idx);
                        const int b = branch_index_of(net_, any);
                        const int f = net_.bus_index(net_.branch(b).from);
                        const int t = net_.bus_index(net_.branch(b).to);
                        const bool from = any.side == BranchSide::From;
                        if (mag_idx >= 0) {
                            auto support = ac_flow_support(f, t);
                            std::vector<double> vals(support.size(), 0.0);
                            const int row =
                                push_row(mag_idx, 0, RowFunc::CurrentMag, -1, b, from,
                                         std::move(support), std::move(vals),
                                         set.at(mag_idx).value, 0.0);
                            scalar_block(row, set.at(mag_idx).variance);
                        }
                        if (ang_idx >= 0) {
                            auto support = ac_flow_support(f, t);
                            std::vector<double> vals(support.size(), 0.0);
                            const int row =
                                push_row(ang_idx, 1, RowFunc::CurrentAng, -1, b, from,
                                         std::move(support), std::move(vals),
                                         set.at(ang_idx).value, 0.0);
                            scalar_block(row, set.at(ang_idx).variance);
                        }
                    }
                } else {  // rectangular pair
                    if (group == 0) {
                        const int i = net_.bus_index(element);
                        std::vector<int> s0, s1;
                        if (angle_col_[i] >= 0) s0.push_back(angle_col_[i]);
                        s0.push_back(vm_col_[i]);
                        s1 = s0;
                        const int row_re =
                            push_row(mag_idx, 0, RowFunc::VRe, i, -1, true, std::move(s0),
                                     std::vector<double>(s1.size(), 0.0), 0.0, 0.0);
                        const int row_im =
                            push_row(ang_idx, 1, RowFunc::VIm, i, -1, true, std::move(s1),
                                     std::vector<double>(jac_.idx[row_re].size(), 0.0), 0.0,
                                     0.0);
                        rect_block(mag_idx, ang_idx, row_re, row_im);
                    } else {
                        const Measurement& any = set.at(mag_idx);
                        const int b = branch_index_of(net_, any);
                        const int f = net_.bus_index(net_.branch(b).from);
                        const int t = net_.bus_index(net_.branch(b).to);
                        const bool from = any.side == BranchSide::From;
                        auto s0 = ac_flow_support(f, t);
                        auto s1 = s0;
                        const int row_re =
                            push_row(mag_idx, 0, RowFunc::CurrentRe, -1, b, from, std::move(s0),
                                     std::vector<double>(s1.size(), 0.0), 0.0, 0.0);
                        const int row_im =
                            push_row(ang_idx, 1, RowFunc::CurrentIm, -1, b, from, std::move(s1),
                                     std::vector<double>(jac_.idx[row_re].size(), 0.0), 0.0,
                                     0.0);
                        rect_block(mag_idx, ang_idx, row_re, row_im);
                    }
                }
            } else {  // PmuLinear: everything rectangular and linear in x
                if (group == 0) {
                    const int i = net_.bus_index(element);
                    const int row_re = push_row(mag_idx, 0, RowFunc::Linear, i, -1, true,
                                                {angle_col_[i]}, {1.0}, 0.0, 0.0);
                    const int row_im = push_row(ang_idx, 1, RowFunc::Linear, i, -1, true,
                                                {vm_col_[i]}, {1.0}, 0.0, 0.0);
                    rect_block(mag_idx, ang_idx, row_re, row_im);
                } else {
                    const Measurement& any = set.at(mag_idx);
                    const int b = branch_index_of(net_, any);
                    const int f = net_.bus_index(net_.branch(b).from);
                    const int t = net_.bus_index(net_.branch(b).to);
                    const bool from = any.side == BranchSide::From;
                    const auto& blk = ac->blocks[b];
                    const cdouble a = from ? blk.yff : blk.ytt;
                    const cdouble bb = from ? blk.yft : blk.ytf;
                    const int self = from ? f : t, other = from ? t : f;
                    std::vector<int> s = {angle_col_[self], vm_col_[self], angle_col_[other],
                                          vm_col_[other]};
                    const int row_re = push_row(
                        mag_idx, 0, RowFunc::Linear, -1, b, from, s,
                        {a.real(), -a.imag(), bb.real(), -bb.imag()}, 0.0, 0.0);
                    const int row_im = push_row(
                        ang_idx, 1, RowFunc::Linear, -1, b, from, s,
                        {a.imag(), a.real(), bb.imag(), bb.real()}, 0.0, 0.0);
                    rect_block(mag_idx, ang_idx, row_re, row_im);
                }
            }
        }
    }

    refresh_block_inverses();
    h_.assign(rows_.size(), 0.0);
    residuals_.assign(rows_.size(), 0.0);
    gain_pattern_built_ = false;
    gain_factored_ = false;
    gain_values_dirty_ = true;
    warm_available_ = false;
    structure_rebuilt_flag_ = true;
}

void EstimationModel::refresh_block_inverses() {
    block_inv_.assign(blocks_.size(), {0, 0, 0, 0});
    block_isqrt_.assign(blocks_.size(), {0, 0, 0, 0});
    for (size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        if (blk.row1 < 0) {
            block_inv_[b] = {1.0 / blk.c00, 0, 0, 0};
            block_isqrt_[b] = {1.0 / std::sqrt(blk.c00), 0, 0, 0};
        } else {
            block_inv_[b] = inv2x2(blk.c00, blk.c01, blk.c11);
            block_isqrt_[b] = isqrt2x2(blk.c00, blk.c01, blk.c11);
        }
    }
    gain_values_dirty_ = true;
}

double EstimationModel::sigma_diag(int row) const {
    const auto& blk = blocks_[row_block_[row]];
    if (blk.row1 < 0 || blk.row0 == row) return blk.c00;
    return blk.c11;
}

int EstimationModel::active_rows() const {
    int k = 0;
    for (uint8_t a : active_) k += a;
    return k;
}

std::string EstimationModel::row_label(int row) const {
    const Measurement& m = set_.at(rows_[row].measurement);
    return m.id + (rows_[row].component == 1 && kind_ != EstimationModelKind::AcNonlinear
                       ? "(im)"
                       : "");
}

std::string EstimationModel::state_label(int col) const {
    const int n = net_.n_buses();
    for (int i = 0; i < n; ++i) {
        if (angle_col_[i] == col)
            return (kind_ == EstimationModelKind::PmuLinear ? "re(" : "theta(") +
                   std::to_string(net_.bus(i).id) + ")";
        if (vm_col_[i] == col)
            return (kind_ == EstimationModelKind::PmuLinear ? "im(" : "vm(") +
                   std::to_string(net_.bus(i).id) + ")";
    }
    return "x" + std::to_string(col);
}

void EstimationModel::deactivate_row(int row) {
    if (row < 0 || row >= k_rows()) throw EstimationError("row index out of range");
    if (!active_[row]) return;
    active_[row] = 0;
    gain_values_dirty_ = true;
}

void EstimationModel::sync_measurements() {
    if (set_.structure_rev() != seen_structure_rev_) {
        build_rows(set_);
        seen_structure_rev_ = set_.structure_rev();
        seen_value_rev_ = set_.value_rev();
        seen_variance_rev_ = set_.variance_rev();
        seen_status_rev_ = set_.status_rev();
        return;
    }
    if (set_.status_rev() != seen_status_rev_) {
        for (int r = 0; r < k_rows(); ++r)
            active_[r] = active_[r] && set_.at(rows_[r].measurement).in_service ? 1 : 0;
        seen_status_rev_ = set_.status_rev();
        gain_values_dirty_ = true;
    }
    const bool values = set_.value_rev() != seen_value_rev_;
    const bool variances = set_.variance_rev() != seen_variance_rev_;
    if (!values && !variances) return;
    for (size_t b = 0; b < blocks_.size(); ++b) {
        auto& blk = blocks_[b];
        if (blk.row1 < 0) {
            const Measurement& m = set_.at(rows_[blk.row0].measurement);
            rows_[blk.row0].z = m.value;
            blk.c00 = m.variance;
        } else {
            // Rectangular pair: re-run the polar -> rectangular propagation.
            const Measurement& mm = set_.at(rows_[blk.row0].measurement);
            const Measurement& ma = set_.at(rows_[blk.row1].measurement);
            const bool neglect = opts_.neglect_covariance_override.value_or(
                mm.neglect_covariance || ma.neglect_covariance);
            const RectangularPhasor rp =
                phasor_to_rectangular(mm.value, ma.value, mm.variance, ma.variance);
            rows_[blk.row0].z = rp.re;
            rows_[blk.row1].z = rp.im;
            blk.c00 = rp.var_re;
            blk.c01 = neglect ? 0.0 : rp.cov;
            blk.c11 = rp.var_im;
        }
    }
    if (variances || values) refresh_block_inverses();
    if (values && !variances && kind_ != EstimationModelKind::AcNonlinear) {
        // For linear models a pure value change leaves H and Sigma alone:
        // rebuilding the inverses above was only needed when a rectangular
        // block's conversion depends on the measured values themselves.
        bool any_rect = false;
        for (const auto& blk : blocks_) any_rect |= blk.row1 >= 0;
        if (!any_rect) gain_values_dirty_ = false;
    }
    seen_value_rev_ = set_.value_rev();
    seen_variance_rev_ = set_.variance_rev();
}

std::vector<double> EstimationModel::bus_vm(const std::vector<double>& x) const {
    const int n = net_.n_buses();
    std::vector<double> vm(n, 1.0);
    if (kind_ == EstimationModelKind::AcNonlinear)
        for (int i = 0; i < n; ++i) vm[i] = x[vm_col_[i]];
    else if (kind_ == EstimationModelKind::PmuLinear)
        for (int i = 0; i < n; ++i) vm[i] = std::hypot(x[angle_col_[i]], x[vm_col_[i]]);
    return vm;
}

std::vector<double> EstimationModel::bus_va(const std::vector<double>& x) const {
    const int n = net_.n_buses();
    std::vector<double> va(n, 0.0);
    if (kind_ == EstimationModelKind::PmuLinear) {
        for (int i = 0; i < n; ++i) va[i] = std::atan2(x[vm_col_[i]], x[angle_col_[i]]);
        return va;
    }
    for (int i = 0; i < n; ++i)
        va[i] = i == slack_ ? net_.bus(slack_).va_init : x[angle_col_[i]];
    return va;
}

std::vector<double> EstimationModel::start_state(EstimationStart start) const {
    const int n = net_.n_buses();
    std::vector<double> x(m_states_, 0.0);
    if (start == EstimationStart::Warm && warm_available_) return x_;
    switch (kind_) {
        case EstimationModelKind::AcNonlinear:
            for (int i = 0; i < n; ++i)
                x[vm_col_[i]] =
                    start == EstimationStart::FromNetwork ? net_.bus(i).vm_init : 1.0;
            if (start == EstimationStart::FromNetwork)
                for (int i = 0; i < n; ++i)
                    if (i != slack_) x[angle_col_[i]] = net_.bus(i).va_init;
            break;
        case EstimationModelKind::PmuLinear:
            for (int i = 0; i < n; ++i) {
                x[angle_col_[i]] = 1.0;  // Re = 1, Im = 0 flat start
                x[vm_col_[i]] = 0.0;
            }
            break;
        case EstimationModelKind::Dc:
            if (start == EstimationStart::FromNetwork)
                for (int i = 0; i < n; ++i)
                    if (i != slack_) x[angle_col_[i]] = net_.bus(i).va_init;
            break;
    }
    return x;
}

void EstimationModel::evaluate(const std::vector<double>& x, ExecPolicy policy) {
    const auto& spec = *spec_;
    const int n = net_.n_buses();
    const bool linear_model = kind_ != EstimationModelKind::AcNonlinear;

    std::vector<double> vm, va;
    std::vector<cdouble> v;
    std::vector<double> p_calc, q_calc;
    const AcModel* ac = nullptr;
    if (!linear_model) {
        ac = &net_.ac();
        if (ac->pattern_rev != ac_pattern_rev_seen_)
            throw EstimationError("network pattern changed; rebuild the estimation model");
        vm = bus_vm(x);
        va = bus_va(x);
        v.resize(n);
        for (int i = 0; i < n; ++i) v[i] = std::polar(vm[i], va[i]);
        const auto ibus = ac->ybus.multiply(v);
        p_calc.resize(n);
        q_calc.resize(n);
        for (int i = 0; i < n; ++i) {
            const cdouble s = v[i] * std::conj(ibus[i]);
            p_calc[i] = s.real();
            q_calc[i] = s.imag();
        }
    }

    const int k = k_rows();
    const bool parallel = run_parallel(policy, k);
#pragma omp parallel for if (parallel) schedule(static)
    for (int r = 0; r < k; ++r) {
        auto& vals = jac_.val[r];
        const auto& cols = jac_.idx[r];
        switch (spec.func[r]) {
            case RowFunc::Linear: {
                double hv = rows_[r].c;
                for (size_t t = 0; t < cols.size(); ++t) hv += vals[t] * x[cols[t]];
                h_[r] = hv;
                break;
            }
            case RowFunc::BusVmag: {
                h_[r] = vm[spec.bus[r]];
                vals[0] = 1.0;
                break;
            }
            case RowFunc::BusAngle: {
                h_[r] = va[spec.bus[r]];
                if (!vals.empty()) vals[0] = 1.0;
                if (spec.bus[r] == slack_) h_[r] = rows_[r].c;
                break;
            }
            case RowFunc::BusPinj:
            case RowFunc::BusQinj: {
                const int i = spec.bus[r];
                const bool is_p = spec.func[r] == RowFunc::BusPinj;
                h_[r] = is_p ? p_calc[i] : q_calc[i];
                size_t t = 0;
                for (int p = ac->row_ptr[i]; p < ac->row_ptr[i + 1]; ++p) {
                    const int j = ac->row_col[p];
                    const double g = ac->ybus.values[ac->row_slot[p]].real();
                    const double bsus = ac->ybus.values[ac->row_slot[p]].imag();
                    double dp_da, dq_da, dp_dv, dq_dv;
                    if (i == j) {
                        dp_da = -q_calc[i] - bsus * vm[i] * vm[i];
                        dq_da = p_calc[i] - g * vm[i] * vm[i];
                        dp_dv = p_calc[i] / vm[i] + g * vm[i];
                        dq_dv = q_calc[i] / vm[i] - bsus * vm[i];
                    } else {
                        const double th = va[i] - va[j];
                        const double cs = std::cos(th), sn = std::sin(th);
                        dp_da = vm[i] * vm[j] * (g * sn - bsus * cs);
                        dq_da = -vm[i] * vm[j] * (g * cs + bsus * sn);
                        dp_dv = vm[i] * (g * cs + bsus * sn);
                        dq_dv = vm[i] * (g * sn - bsus * cs);
                    }
                    if (angle_col_[j] >= 0) vals[t++] = is_p ? dp_da : dq_da;
                    vals[t++] = is_p ? dp_dv : dq_dv;
                }
                break;
            }
            case RowFunc::FlowP:
            case RowFunc::FlowQ: {
                const int b = spec.branch[r];
                const auto& br = net_.branch(b);
                const int f = net_.bus_index(br.from), t = net_.bus_index(br.to);
                const auto& blk = ac->blocks[b];
                const bool from = spec.from_side[r];
                const int self = from ? f : t, other = from ? t : f;
                const FlowEval fe = eval_flow(vm[self], vm[other], va[self], va[other],
                                              from ? blk.yff : blk.ytt,
                                              from ? blk.yft : blk.ytf);
                const bool is_p = spec.func[r] == RowFunc::FlowP;
                h_[r] = is_p ? fe.p : fe.q;
                size_t tt = 0;
                auto put = [&](int bus, double dth, double dv) {
                    if (angle_col_[bus] >= 0) vals[tt++] = dth;
                    vals[tt++] = dv;
                };
                // support order is f then t
                if (is_p) {
                    put(f, from ? fe.dp_dth_self : fe.dp_dth_other,
                        from ? fe.dp_dv_self : fe.dp_dv_other);
                    put(t, from ? fe.dp_dth_other : fe.dp_dth_self,
                        from ? fe.dp_dv_other : fe.dp_dv_self);
                } else {
                    put(f, from ? fe.dq_dth_self : fe.dq_dth_other,
                        from ? fe.dq_dv_self : fe.dq_dv_other);
                    put(t, from ? fe.dq_dth_other : fe.dq_dth_self,
                        from ? fe.dq_dv_other : fe.dq_dv_self);
                }
                break;
            }
            case RowFunc::CurrentMag:
            case RowFunc::CurrentAng:
            case RowFunc::CurrentRe:
            case RowFunc::CurrentIm: {
                const int b = spec.branch[r];
                const auto& br = net_.branch(b);
                const int f = net_.bus_index(br.from), t = net_.bus_index(br.to);
                const auto& blk = ac->blocks[b];
                const bool from = spec.from_side[r];
                const int self = from ? f : t, other = from ? t : f;
                const CurrentEval ce =
                    eval_current(vm[self], vm[other], va[self], va[other],
                                 from ? blk.yff : blk.ytt, from ? blk.yft : blk.ytf);
                // Partials in (self, other) slots; remap to (f, t) support order.
                const cdouble d_self_th = ce.di_dth_self, d_self_v = ce.di_dv_self;
                const cdouble d_other_th = ce.di_dth_other, d_other_v = ce.di_dv_other;
                auto fill = [&](auto scalar_of) {
                    size_t tt = 0;
                    auto put = [&](int bus, cdouble dth, cdouble dv) {
                        if (angle_col_[bus] >= 0) vals[tt++] = scalar_of(dth);
                        vals[tt++] = scalar_of(dv);
                    };
                    put(f, from ? d_self_th : d_other_th, from ? d_self_v : d_other_v);
                    put(t, from ? d_other_th : d_self_th, from ? d_other_v : d_self_v);
                };
                if (spec.func[r] == RowFunc::CurrentRe) {
                    h_[r] = ce.i.real();
                    fill([](cdouble d) { return d.real(); });
                } else if (spec.func[r] == RowFunc::CurrentIm) {
                    h_[r] = ce.i.imag();
                    fill([](cdouble d) { return d.imag(); });
                } else {
                    // Magnitude and angle through the squared-magnitude
                    // chain rule with a floor guarding the |I| -> 0 pole.
                    const double mag = std::abs(ce.i);
                    const double safe = std::max(mag, kCurrentFloor);
                    if (spec.func[r] == RowFunc::CurrentMag) {
                        h_[r] = mag;
                        fill([&](cdouble d) {
                            return (ce.i.real() * d.real() + ce.i.imag() * d.imag()) / safe;
                        });
                    } else {
                        h_[r] = std::atan2(ce.i.imag(), ce.i.real());
                        fill([&](cdouble d) {
                            return (ce.i.real() * d.imag() - ce.i.imag() * d.real()) /
                                   (safe * safe);
                        });
                    }
                }
                break;
            }
            case RowFunc::VRe:
            case RowFunc::VIm: {
                const int i = spec.bus[r];
                const bool re = spec.func[r] == RowFunc::VRe;
                const double c = std::cos(va[i]), s = std::sin(va[i]);
                h_[r] = re ? vm[i] * c : vm[i] * s;
                size_t tt = 0;
                if (angle_col_[i] >= 0) vals[tt++] = re ? -vm[i] * s : vm[i] * c;
                vals[tt++] = re ? c : s;
                break;
            }
        }
    }
}

void EstimationModel::build_gain_pattern() {
    SparseBuilder<double> gb(m_states_, m_states_);
    block_gain_slots_.assign(blocks_.size(), {});
    std::vector<std::vector<int>> block_union(blocks_.size());
    for (size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        std::vector<int> u = jac_.idx[blk.row0];
        if (blk.row1 >= 0)
            u.insert(u.end(), jac_.idx[blk.row1].begin(), jac_.idx[blk.row1].end());
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        block_union[b] = u;
        for (int a : u)
            for (int c : u) gb.add(a, c, 0.0);
    }
    gain_ = gb.compress();
    for (size_t b = 0; b < blocks_.size(); ++b) {
        const auto& u = block_union[b];
        auto& slots = block_gain_slots_[b];
        slots.reserve(u.size() * u.size());
        for (int a : u)
            for (int c : u) slots.push_back(gain_.find_slot(a, c));
    }
    gain_pattern_built_ = true;
    gain_factored_ = false;
}

void EstimationModel::assemble_gain_and_rhs(std::vector<double>& rhs_out, bool with_rhs) {
    if (!gain_pattern_built_) build_gain_pattern();
    gain_.set_zero();
    if (with_rhs) rhs_out.assign(m_states_, 0.0);

    std::vector<double> scratch;
    std::vector<int> upos;
    for (size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        const bool a0 = active_[blk.row0];
        const bool a1 = blk.row1 >= 0 && active_[blk.row1];
        if (!a0 && !a1) continue;

        // Effective weights given the active rows of the block.
        double w00 = 0, w01 = 0, w11 = 0;
        if (a0 && a1) {
            w00 = block_inv_[b][0];
            w01 = block_inv_[b][1];
            w11 = block_inv_[b][3];
        } else if (a0) {
            w00 = 1.0 / blk.c00;
        } else {
            w11 = 1.0 / blk.c11;
        }

        const int u_count = static_cast<int>(std::sqrt(block_gain_slots_[b].size()) + 0.5);
        scratch.assign(static_cast<size_t>(u_count) * u_count, 0.0);

        // Union index positions for each row's support.
        auto pos_of = [&](int row, std::vector<int>& out) {
            out.resize(jac_.idx[row].size());
            // union is sorted; support entries are found by binary search
            // over the slots' implied ordering: reconstruct via gain_ slots
            // is not needed, recompute the union here instead.
        };
        (void)pos_of;
        // Recompute the sorted union (cheap at desk scale).
        std::vector<int> u = jac_.idx[blk.row0];
        if (blk.row1 >= 0)
            u.insert(u.end(), jac_.idx[blk.row1].begin(), jac_.idx[blk.row1].end());
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());

        auto place = [&](int row, std::vector<int>& out) {
            out.clear();
            for (int c : jac_.idx[row])
                out.push_back(static_cast<int>(
                    std::lower_bound(u.begin(), u.end(), c) - u.begin()));
        };
        std::vector<int> p0, p1;
        place(blk.row0, p0);
        if (blk.row1 >= 0) place(blk.row1, p1);

        auto accumulate = [&](const std::vector<int>& pa, const std::vector<double>& va,
                              const std::vector<int>& pb, const std::vector<double>& vb,
                              double w) {
            if (w == 0.0) return;
            for (size_t i = 0; i < pa.size(); ++i) {
                const double wv = w * va[i];
                for (size_t j = 0; j < pb.size(); ++j)
                    scratch[pa[i] * u_count + pb[j]] += wv * vb[j];
            }
        };
        accumulate(p0, jac_.val[blk.row0], p0, jac_.val[blk.row0], w00);
        if (blk.row1 >= 0) {
            accumulate(p0, jac_.val[blk.row0], p1, jac_.val[blk.row1], w01);
            accumulate(p1, jac_.val[blk.row1], p0, jac_.val[blk.row0], w01);
            accumulate(p1, jac_.val[blk.row1], p1, jac_.val[blk.row1], w11);
        }
        // Exact symmetry: mirror the upper triangle onto the lower.
        for (int i = 0; i < u_count; ++i)
            for (int j = i + 1; j < u_count; ++j)
                scratch[j * u_count + i] = scratch[i * u_count + j];

        const auto& slots = block_gain_slots_[b];
        for (size_t t = 0; t < slots.size(); ++t) gain_.values[slots[t]] += scratch[t];

        if (with_rhs) {
            const double r0 = a0 ? rows_[blk.row0].z - h_[blk.row0] : 0.0;
            const double r1 = a1 ? rows_[blk.row1].z - h_[blk.row1] : 0.0;
            for (size_t i = 0; i < p0.size(); ++i)
                rhs_out[jac_.idx[blk.row0][i]] +=
                    jac_.val[blk.row0][i] * (w00 * r0 + w01 * r1);
            if (blk.row1 >= 0)
                for (size_t i = 0; i < p1.size(); ++i)
                    rhs_out[jac_.idx[blk.row1][i]] +=
                        jac_.val[blk.row1][i] * (w01 * r0 + w11 * r1);
        }
    }
}

EstimationResult EstimationModel::solve(const EstimationOptions& opts) {
    EstimationResult res;
    sync_measurements();
    res.k_rows = k_rows();
    res.m_states = m_states_;
    res.reuse.pattern_reused = gain_pattern_built_;
    res.reuse.matrix_reused = !structure_rebuilt_flag_;
    structure_rebuilt_flag_ = false;
    res.reuse.warm_start = opts.start == EstimationStart::Warm && warm_available_;
    const bool linear = kind_ != EstimationModelKind::AcNonlinear;

    if (active_rows() == 0) {
        res.error = "no in-service measurements";
        return res;
    }

    std::vector<double> x = start_state(opts.start);
    bool gain_was_refactored = false;

    double prev_step = kInf;
    int grow_streak = 0;
    const int max_outer = linear && opts.method != SolveMethod::Lav ? 2 : opts.max_iterations;

    for (int iter = 0;; ++iter) {
        evaluate(x, opts.exec);

        std::vector<double> dx;
        if (opts.method == SolveMethod::Lav) {
            double obj = 0.0;
            try {
                dx = lav_step(obj);
            } catch (const std::exception& e) {
                res.error = std::string("lav: ") + e.what();
                return res;
            }
            res.objective = obj;
        } else if (opts.method == SolveMethod::NormalEquations) {
            std::vector<double> rhs;
            if (gain_values_dirty_ || !linear) {
                assemble_gain_and_rhs(rhs, true);
                try {
                    if (!gain_factored_) {
                        LuOptions lo;
                        lo.ordering = Ordering::MinDegree;
                        lo.symmetric_pivot = true;
                        gain_lu_.factor(gain_, lo);
                        gain_factored_ = true;
                    } else {
                        gain_lu_.refactor(gain_);
                    }
                } catch (const SingularMatrixError& e) {
                    res.error = "rank-deficient gain matrix: model is unobservable";
                    res.deficient_columns.push_back(state_label(e.column));
                    return res;
                }
                gain_values_dirty_ = false;
                gain_was_refactored = true;
            } else {
                assemble_gain_and_rhs(rhs, true);  // rhs still needs the residuals
            }
            dx = gain_lu_.solve(rhs);
        } else {
            dx = weighted_ls_step(opts, res);
            if (!res.error.empty()) return res;
        }

        double step = 0.0;
        for (double d : dx) step = std::max(step, std::abs(d));
        res.trace.push_back({iter, step});
        if (!std::isfinite(step)) {
            res.error = "estimation diverged (non-finite step)";
            return res;
        }
        for (int j = 0; j < m_states_; ++j) x[j] += dx[j];
        if (step < opts.tolerance) {
            res.converged = true;
            res.iterations = iter + 1;
            break;
        }
        if (step > prev_step) {
            if (++grow_streak >= 5) {
                res.error = "estimation diverged (step norm grew for 5 iterations)";
                return res;
            }
        } else {
            grow_streak = 0;
        }
        prev_step = step;
        if (iter + 1 >= max_outer) {
            if (linear && opts.method != SolveMethod::Lav) {
                // Linear solves land exactly in one step.
                res.converged = true;
                res.iterations = iter + 1;
                break;
            }
            res.error = "estimation exhausted max iterations";
            res.iterations = iter + 1;
            return res;
        }
    }

    if (!gain_was_refactored && opts.method == SolveMethod::NormalEquations)
        res.reuse.factor_reused = true;

    evaluate(x, opts.exec);
    residuals_.assign(k_rows(), 0.0);
    double wsse = 0.0, abs_sum = 0.0;
    for (int r = 0; r < k_rows(); ++r) {
        if (!active_[r]) continue;
        residuals_[r] = rows_[r].z - h_[r];
        abs_sum += std::abs(residuals_[r]);
    }
    for (size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        const double r0 = active_[blk.row0] ? residuals_[blk.row0] : 0.0;
        const double r1 = blk.row1 >= 0 && active_[blk.row1] ? residuals_[blk.row1] : 0.0;
        if (blk.row1 >= 0 && active_[blk.row0] && active_[blk.row1])
            wsse += r0 * block_inv_[b][0] * r0 + 2 * r0 * block_inv_[b][1] * r1 +
                    r1 * block_inv_[b][3] * r1;
        else if (active_[blk.row0])
            wsse += r0 * r0 / blk.c00;
        else if (blk.row1 >= 0 && active_[blk.row1])
            wsse += r1 * r1 / blk.c11;
    }
    if (opts.method != SolveMethod::Lav) res.objective = wsse;

    x_ = x;
    warm_available_ = true;
    res.state = x;
    res.vm = bus_vm(x);
    res.va = bus_va(x);
    res.residuals = residuals_;
    return res;
}

void EstimationModel::refresh_gain() {
    std::vector<double> unused;
    assemble_gain_and_rhs(unused, false);
    if (!gain_factored_) {
        LuOptions lo;
        lo.ordering = Ordering::MinDegree;
        lo.symmetric_pivot = true;
        gain_lu_.factor(gain_, lo);
        gain_factored_ = true;
    } else {
        gain_lu_.refactor(gain_);
    }
    gain_values_dirty_ = false;
}

std::vector<double> EstimationModel::weighted_ls_step(const EstimationOptions& opts,
                                                      EstimationResult& res_flags) {
    // Weighted rectangular system: A = Sigma^{-1/2} J over active rows,
    // rhs = Sigma^{-1/2} (z - h). Block square roots mix paired rows.
    std::vector<std::vector<int>> a_idx;
    std::vector<std::vector<double>> a_val;
    std::vector<double> rhs;

    auto add_scaled_row = [&](double w_self, double w_cross, int row, int partner) {
        std::vector<int> cols = jac_.idx[row];
        std::vector<double> vals(jac_.val[row].size());
        for (size_t t = 0; t < vals.size(); ++t) vals[t] = w_self * jac_.val[row][t];
        double r = w_self * (rows_[row].z - h_[row]);
        if (partner >= 0 && w_cross != 0.0) {
            for (size_t t = 0; t < jac_.idx[partner].size(); ++t) {
                cols.push_back(jac_.idx[partner][t]);
                vals.push_back(w_cross * jac_.val[partner][t]);
            }
            r += w_cross * (rows_[partner].z - h_[partner]);
        }
        a_idx.push_back(std::move(cols));
        a_val.push_back(std::move(vals));
        rhs.push_back(r);
    };

    for (size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        const bool a0 = active_[blk.row0];
        const bool a1 = blk.row1 >= 0 && active_[blk.row1];
        if (a0 && a1) {
            const auto& s = block_isqrt_[b];
            add_scaled_row(s[0], s[1], blk.row0, blk.row1);
            add_scaled_row(s[3], s[2], blk.row1, blk.row0);
        } else if (a0) {
            add_scaled_row(1.0 / std::sqrt(blk.c00), 0.0, blk.row0, -1);
        } else if (a1) {
            add_scaled_row(1.0 / std::sqrt(blk.c11), 0.0, blk.row1, -1);
        }
    }

    const int k = static_cast<int>(a_idx.size());
    SparseBuilder<double> ab(k, m_states_);
    for (int r = 0; r < k; ++r)
        for (size_t t = 0; t < a_idx[r].size(); ++t) ab.add(r, a_idx[r][t], a_val[r][t]);
    const SparseMatrix<double> a = ab.compress();

    if (opts.method == SolveMethod::Orthogonal) {
        QrFactorization qr;
        qr.factor(a);
        try {
            return qr.solve_least_squares(rhs);
        } catch (const RankDeficientError& e) {
            res_flags.error = "rank-deficient model: unobservable";
            res_flags.deficient_columns.push_back(state_label(e.column));
            return {};
        }
    }

    // Peters-Wilkinson: A = L U with L lower trapezoidal; solve
    // (L^T L) y = L^T b then U x = y.
    LuFactorization lu;
    LuOptions lo;
    lo.ordering = Ordering::Natural;
    try {
        lu.factor(a, lo);
    } catch (const SingularMatrixError& e) {
        res_flags.error = "rank-deficient model: unobservable";
        res_flags.deficient_columns.push_back(state_label(e.column));
        return {};
    }
    const int m = m_states_;
    // Dense L columns in pivot space (k x m, unit diagonal implicit).
    std::vector<std::vector<double>> lcols(m, std::vector<double>(k, 0.0));
    for (int j = 0; j < m; ++j) {
        lcols[j][j] = 1.0;
        for (int p = lu.l_ptr()[j]; p < lu.l_ptr()[j + 1]; ++p)
            lcols[j][lu.row_pinv()[lu.l_idx()[p]]] = lu.l_val()[p];
    }
    // b in pivot space.
    std::vector<double> pb(k, 0.0);
    for (int r = 0; r < k; ++r) pb[lu.row_pinv()[r]] = rhs[r];

    // Normal equations on L (SPD m x m).
    SparseBuilder<double> ltb(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) {
            double s = 0.0;
            for (int t = std::max(i, j); t < k; ++t) s += lcols[i][t] * lcols[j][t];
            if (s != 0.0) {
                ltb.add(i, j, s);
                if (i != j) ltb.add(j, i, s);
            }
        }
    LuFactorization ltl;
    LuOptions lo2;
    lo2.symmetric_pivot = true;
    try {
        ltl.factor(ltb.compress(), lo2);
    } catch (const SingularMatrixError&) {
        res_flags.error = "rank-deficient model: unobservable";
        return {};
    }
    std::vector<double> ltb_rhs(m, 0.0);
    for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int t = j; t < k; ++t) s += lcols[j][t] * pb[t];
        ltb_rhs[j] = s;
    }
    const std::vector<double> y = ltl.solve(ltb_rhs);
    // Back-substitute U (columns in pivot space, diagonal last).
    std::vector<double> w = y;
    for (int j = m - 1; j >= 0; --j) {
        const int dp = lu.u_ptr()[j + 1] - 1;
        w[j] /= lu.u_val()[dp];
        const double wj = w[j];
        for (int p = lu.u_ptr()[j]; p < dp; ++p) w[lu.u_idx()[p]] -= lu.u_val()[p] * wj;
    }
    std::vector<double> dx(m);
    for (int j = 0; j < m; ++j) dx[lu.col_perm()[j]] = w[j];
    return dx;
}

std::vector<double> EstimationModel::lav_step(double& objective) {
    // min sum (r+ + r-) s.t. J dx + r+ - r- = z - h(x), dx free.
    LinearProgram lp;
    for (int j = 0; j < m_states_; ++j) lp.add_var(-kInf, kInf, 0.0);
    std::vector<int> row_of;
    for (int r = 0; r < k_rows(); ++r) {
        if (!active_[r]) continue;
        const int rp = lp.add_var(0.0, kInf, 1.0);
        const int rm = lp.add_var(0.0, kInf, 1.0);
        std::vector<int> idx = jac_.idx[r];
        std::vector<double> val = jac_.val[r];
        idx.push_back(rp);
        val.push_back(1.0);
        idx.push_back(rm);
        val.push_back(-1.0);
        lp.add_row(RowSense::Equal, rows_[r].z - h_[r], std::move(idx), std::move(val));
    }
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal)
        throw EstimationError(sol.status == LpStatus::Infeasible
                                  ? "LAV subproblem infeasible"
                                  : (sol.status == LpStatus::Unbounded
                                         ? "LAV subproblem unbounded"
                                         : "LAV subproblem hit the pivot budget"));
    objective = sol.objective;
    return std::vector<double>(sol.x.begin(), sol.x.begin() + m_states_);
}

}  // namespace gridstate
