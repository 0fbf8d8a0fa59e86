#include "gridstate/network.hpp"

#include <cmath>
#include <limits>

namespace gridstate {

void CostCurve::validate() const {
    if (kind == Kind::PiecewiseLinear) {
        if (points.size() < 2) throw NetworkError("cost curve: piecewise needs >= 2 points");
        double prev_slope = -std::numeric_limits<double>::infinity();
        for (size_t k = 1; k < points.size(); ++k) {
            const double dp = points[k].first - points[k - 1].first;
            if (dp <= 0.0) throw NetworkError("cost curve: breakpoints must increase in power");
            const double slope = (points[k].second - points[k - 1].second) / dp;
            if (slope < prev_slope - 1e-9)
                throw NetworkError("cost curve: piecewise segments must be convex");
            prev_slope = slope;
        }
    }
}

PerUnitImpedance impedance_to_per_unit(double r_ohm, double x_ohm, double g_siemens,
                                       double b_siemens, double base_mva,
                                       double base_kv_secondary) {
    if (base_mva <= 0.0 || base_kv_secondary <= 0.0)
        throw NetworkError("per-unit conversion: base values must be positive");
    const double z_base = base_kv_secondary * base_kv_secondary / base_mva;  // ohm
    return {r_ohm / z_base, x_ohm / z_base, g_siemens * z_base, b_siemens * z_base};
}

int NetworkModel::add_bus(const Bus& bus) {
    if (bus_index_.count(bus.id)) throw NetworkError("duplicate bus id " + std::to_string(bus.id));
    if (bus.base_kv <= 0.0)
        throw NetworkError("bus " + std::to_string(bus.id) + ": base_kv must be positive");
    buses_.push_back(bus);
    bus_index_[bus.id] = n_buses() - 1;
    return n_buses() - 1;
}

int NetworkModel::add_branch(const Branch& br) {
    if (ac_ || dc_) return add_branch_live(br);
    if (br.tap == 0.0) throw NetworkError("branch: turns ratio must be nonzero");
    if (br.r == 0.0 && br.x == 0.0) throw NetworkError("branch: zero series impedance");
    bus_index(br.from);
    bus_index(br.to);
    branches_.push_back(br);
    return n_branches() - 1;
}

int NetworkModel::add_generator(const Generator& gen) {
    bus_index(gen.bus);
    generators_.push_back(gen);
    return n_generators() - 1;
}

int NetworkModel::bus_index(int id) const {
    auto it = bus_index_.find(id);
    if (it == bus_index_.end()) throw NetworkError("unknown bus id " + std::to_string(id));
    return it->second;
}

int NetworkModel::slack_index() const {
    int slack = -1;
    for (int i = 0; i < n_buses(); ++i) {
        if (buses_[i].kind == BusKind::Slack) {
            if (slack >= 0) throw NetworkError("duplicate slack bus");
            slack = i;
        }
    }
    if (slack < 0) throw NetworkError("no slack bus");
    return slack;
}

void NetworkModel::validate() const {
    slack_index();
    for (const auto& br : branches_) {
        if (br.tap == 0.0) throw NetworkError("branch: turns ratio must be nonzero");
        if (br.r == 0.0 && br.x == 0.0) throw NetworkError("branch: zero series impedance");
        bus_index(br.from);
        bus_index(br.to);
    }
    for (const auto& g : generators_) bus_index(g.bus);
}

BranchAdmittance NetworkModel::branch_block(const Branch& br) const {
    if (!br.in_service) return {};
    const cdouble y = 1.0 / cdouble(br.r, br.x);
    const cdouble half_charging(br.g_charging / 2.0, br.b_charging / 2.0);
    const double tau = br.tap;
    const cdouble rot = std::polar(1.0, br.shift);
    BranchAdmittance blk;
    blk.yff = (y + half_charging) / (tau * tau);
    blk.yft = -y * rot / tau;             // -conj(alpha) * y, alpha = e^{-j shift}/tau
    blk.ytf = -y * std::conj(rot) / tau;  // -alpha * y
    blk.ytt = y + half_charging;
    return blk;
}

void NetworkModel::build_ac() {
    validate();
    const int n = n_buses();
    AcModel m;
    m.blocks.resize(n_branches());

    SparseBuilder<cdouble> builder(n, n);
    for (int i = 0; i < n; ++i)
        builder.add(i, i, cdouble(buses_[i].g_shunt, buses_[i].b_shunt));
    for (int b = 0; b < n_branches(); ++b) {
        const auto& br = branches_[b];
        const int f = bus_index(br.from), t = bus_index(br.to);
        const BranchAdmittance blk = branch_block(br);
        m.blocks[b] = blk;
        // Out-of-service branches still claim their pattern slots so later
        // status toggles are numeric-only updates.
        builder.add(f, f, blk.yff);
        builder.add(f, t, blk.yft);
        builder.add(t, f, blk.ytf);
        builder.add(t, t, blk.ytt);
    }
    m.ybus = builder.compress();

    m.slots.resize(n_branches());
    for (int b = 0; b < n_branches(); ++b) {
        const int f = bus_index(branches_[b].from), t = bus_index(branches_[b].to);
        m.slots[b] = {m.ybus.find_slot(f, f), m.ybus.find_slot(f, t), m.ybus.find_slot(t, f),
                      m.ybus.find_slot(t, t)};
    }
    m.diag_slot.resize(n);
    for (int i = 0; i < n; ++i) m.diag_slot[i] = m.ybus.find_slot(i, i);

    const uint64_t old_value = ac_ ? ac_->value_rev : 0;
    const uint64_t old_pattern = ac_ ? ac_->pattern_rev : 0;
    m.value_rev = old_value + 1;
    m.pattern_rev = old_pattern + 1;
    ac_ = std::move(m);
    rebuild_row_view();
}

void NetworkModel::rebuild_row_view() {
    if (!ac_) return;
    AcModel& m = *ac_;
    const int n = n_buses();
    m.row_ptr.assign(n + 1, 0);
    for (int i : m.ybus.row_idx) ++m.row_ptr[i + 1];
    for (int i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    m.row_col.resize(m.ybus.nnz());
    m.row_slot.resize(m.ybus.nnz());
    std::vector<int> next(m.row_ptr.begin(), m.row_ptr.end() - 1);
    for (int j = 0; j < n; ++j) {
        for (int p = m.ybus.col_ptr[j]; p < m.ybus.col_ptr[j + 1]; ++p) {
            const int q = next[m.ybus.row_idx[p]]++;
            m.row_col[q] = j;
            m.row_slot[q] = p;
        }
    }
}

void NetworkModel::build_dc() {
    validate();
    const int n = n_buses();
    DcModel m;
    m.branch_susceptance.assign(n_branches(), 0.0);
    m.shift_injection.assign(n, 0.0);
    m.shunt_p.resize(n);
    for (int i = 0; i < n; ++i) m.shunt_p[i] = buses_[i].g_shunt;

    SparseBuilder<double> builder(n, n);
    for (int b = 0; b < n_branches(); ++b) {
        const auto& br = branches_[b];
        if (br.from == br.to) throw NetworkError("dc model: self-loop branch");
        if (br.in_service && br.x == 0.0)
            throw NetworkError("dc model: zero reactance on in-service branch");
        const int f = bus_index(br.from), t = bus_index(br.to);
        const double bb = br.in_service ? 1.0 / (br.tap * br.x) : 0.0;
        m.branch_susceptance[b] = bb;
        builder.add(f, f, bb);
        builder.add(f, t, -bb);
        builder.add(t, f, -bb);
        builder.add(t, t, bb);
        m.shift_injection[f] -= br.shift * bb;
        m.shift_injection[t] += br.shift * bb;
    }
    m.b = builder.compress();
    m.slots.resize(n_branches());
    for (int b = 0; b < n_branches(); ++b) {
        const int f = bus_index(branches_[b].from), t = bus_index(branches_[b].to);
        m.slots[b] = {m.b.find_slot(f, f), m.b.find_slot(f, t), m.b.find_slot(t, f),
                      m.b.find_slot(t, t)};
    }
    const uint64_t old_value = dc_ ? dc_->value_rev : 0;
    const uint64_t old_pattern = dc_ ? dc_->pattern_rev : 0;
    m.value_rev = old_value + 1;
    m.pattern_rev = old_pattern + 1;
    dc_ = std::move(m);
}

const AcModel& NetworkModel::ac() {
    if (!ac_) build_ac();
    return *ac_;
}

const DcModel& NetworkModel::dc() {
    if (!dc_) build_dc();
    return *dc_;
}

std::vector<double> NetworkModel::specified_p() const {
    std::vector<double> p(n_buses(), 0.0);
    for (int i = 0; i < n_buses(); ++i) p[i] -= buses_[i].p_load;
    for (const auto& g : generators_)
        if (g.in_service) p[bus_index(g.bus)] += g.p;
    return p;
}

std::vector<double> NetworkModel::specified_q() const {
    std::vector<double> q(n_buses(), 0.0);
    for (int i = 0; i < n_buses(); ++i) q[i] -= buses_[i].q_load;
    for (const auto& g : generators_)
        if (g.in_service) q[bus_index(g.bus)] += g.q;
    return q;
}

std::vector<std::vector<int>> NetworkModel::connected_components() const {
    const int n = n_buses();
    std::vector<std::vector<int>> adj(n);
    for (const auto& br : branches_) {
        if (!br.in_service) continue;
        adj[bus_index(br.from)].push_back(bus_index(br.to));
        adj[bus_index(br.to)].push_back(bus_index(br.from));
    }
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> out;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        out.emplace_back();
        std::vector<int> stack{s};
        comp[s] = static_cast<int>(out.size()) - 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            out.back().push_back(v);
            for (int w : adj[v]) {
                if (comp[w] < 0) {
                    comp[w] = comp[v];
                    stack.push_back(w);
                }
            }
        }
    }
    return out;
}

void NetworkModel::patch_branch_ac(int index, const BranchAdmittance& old_block) {
    if (!ac_) return;
    AcModel& m = *ac_;
    const BranchAdmittance& nb = m.blocks[index];
    const auto& s = m.slots[index];
    m.ybus.values[s[0]] += nb.yff - old_block.yff;
    m.ybus.values[s[1]] += nb.yft - old_block.yft;
    m.ybus.values[s[2]] += nb.ytf - old_block.ytf;
    m.ybus.values[s[3]] += nb.ytt - old_block.ytt;
    ++m.value_rev;
}

void NetworkModel::patch_branch_dc(int index, double old_b, double old_shift_f,
                                   double old_shift_t) {
    if (!dc_) return;
    DcModel& m = *dc_;
    const auto& br = branches_[index];
    const double nb = m.branch_susceptance[index];
    const auto& s = m.slots[index];
    m.b.values[s[0]] += nb - old_b;
    m.b.values[s[1]] -= nb - old_b;
    m.b.values[s[2]] -= nb - old_b;
    m.b.values[s[3]] += nb - old_b;
    const int f = bus_index(br.from), t = bus_index(br.to);
    m.shift_injection[f] += (-br.shift * nb) - old_shift_f;
    m.shift_injection[t] += (br.shift * nb) - old_shift_t;
    ++m.value_rev;
}

void NetworkModel::set_load(int bus_id, double p, double q) {
    Bus& b = buses_[bus_index(bus_id)];
    b.p_load = p;
    b.q_load = q;
    ++injection_rev_;
}

void NetworkModel::set_shunt(int bus_id, double g, double b) {
    Bus& bus = buses_[bus_index(bus_id)];
    const cdouble old(bus.g_shunt, bus.b_shunt);
    const double old_g = bus.g_shunt;
    bus.g_shunt = g;
    bus.b_shunt = b;
    if (ac_) {
        ac_->ybus.values[ac_->diag_slot[bus_index(bus_id)]] += cdouble(g, b) - old;
        ++ac_->value_rev;
    }
    if (dc_) {
        dc_->shunt_p[bus_index(bus_id)] += g - old_g;
        ++dc_->value_rev;
    }
}

void NetworkModel::set_branch_status(int branch, bool in_service) {
    if (branch < 0 || branch >= n_branches()) throw NetworkError("unknown branch index");
    Branch& br = branches_[branch];
    if (br.in_service == in_service) return;
    const BranchAdmittance old_ac = ac_ ? ac_->blocks[branch] : BranchAdmittance{};
    const double old_b = dc_ ? dc_->branch_susceptance[branch] : 0.0;
    const double old_sf = -br.shift * old_b, old_st = br.shift * old_b;
    br.in_service = in_service;
    if (in_service && br.x == 0.0 && dc_)
        throw NetworkError("dc model: zero reactance on in-service branch");
    if (ac_) {
        ac_->blocks[branch] = branch_block(br);
        patch_branch_ac(branch, old_ac);
    }
    if (dc_) {
        dc_->branch_susceptance[branch] = br.in_service ? 1.0 / (br.tap * br.x) : 0.0;
        patch_branch_dc(branch, old_b, old_sf, old_st);
    }
}

void NetworkModel::set_branch_params(int branch, const Branch& params) {
    if (branch < 0 || branch >= n_branches()) throw NetworkError("unknown branch index");
    Branch& br = branches_[branch];
    if (params.from != br.from || params.to != br.to)
        throw NetworkError("set_branch_params cannot move a branch; add a new one");
    if (params.tap == 0.0) throw NetworkError("branch: turns ratio must be nonzero");
    if (params.r == 0.0 && params.x == 0.0) throw NetworkError("branch: zero series impedance");
    const BranchAdmittance old_ac = ac_ ? ac_->blocks[branch] : BranchAdmittance{};
    const double old_b = dc_ ? dc_->branch_susceptance[branch] : 0.0;
    const double old_sf = -br.shift * old_b, old_st = br.shift * old_b;
    br = params;
    if (ac_) {
        ac_->blocks[branch] = branch_block(br);
        patch_branch_ac(branch, old_ac);
    }
    if (dc_) {
        dc_->branch_susceptance[branch] =
            br.in_service && br.x != 0.0 ? 1.0 / (br.tap * br.x) : 0.0;
        patch_branch_dc(branch, old_b, old_sf, old_st);
    }
}

void NetworkModel::set_generator_output(int generator, double p, double q) {
    if (generator < 0 || generator >= n_generators()) throw NetworkError("unknown generator");
    generators_[generator].p = p;
    generators_[generator].q = q;
    ++injection_rev_;
}

void NetworkModel::set_generator_status(int generator, bool in_service) {
    if (generator < 0 || generator >= n_generators()) throw NetworkError("unknown generator");
    generators_[generator].in_service = in_service;
    ++injection_rev_;
}

int NetworkModel::add_branch_live(const Branch& br) {
    if (br.tap == 0.0) throw NetworkError("branch: turns ratio must be nonzero");
    if (br.r == 0.0 && br.x == 0.0) throw NetworkError("branch: zero series impedance");
    const int f = bus_index(br.from), t = bus_index(br.to);
    branches_.push_back(br);
    const int index = n_branches() - 1;

    // A new branch between already-connected buses can reuse the existing
    // pattern slots; otherwise the pattern changes and the model is rebuilt.
    if (ac_) {
        AcModel& m = *ac_;
        const std::array<int, 4> s = {m.ybus.find_slot(f, f), m.ybus.find_slot(f, t),
                                      m.ybus.find_slot(t, f), m.ybus.find_slot(t, t)};
        if (s[0] >= 0 && s[1] >= 0 && s[2] >= 0 && s[3] >= 0) {
            m.blocks.push_back(branch_block(br));
            m.slots.push_back(s);
            const auto& blk = m.blocks.back();
            m.ybus.values[s[0]] += blk.yff;
            m.ybus.values[s[1]] += blk.yft;
            m.ybus.values[s[2]] += blk.ytf;
            m.ybus.values[s[3]] += blk.ytt;
            ++m.value_rev;
        } else {
            build_ac();
        }
    }
    if (dc_) {
        DcModel& m = *dc_;
        const std::array<int, 4> s = {m.b.find_slot(f, f), m.b.find_slot(f, t),
                                      m.b.find_slot(t, f), m.b.find_slot(t, t)};
        if (s[0] >= 0 && s[1] >= 0 && s[2] >= 0 && s[3] >= 0) {
            const double bb = br.in_service && br.x != 0.0 ? 1.0 / (br.tap * br.x) : 0.0;
            m.branch_susceptance.push_back(bb);
            m.slots.push_back(s);
            m.b.values[s[0]] += bb;
            m.b.values[s[1]] -= bb;
            m.b.values[s[2]] -= bb;
            m.b.values[s[3]] += bb;
            m.shift_injection[f] -= br.shift * bb;
            m.shift_injection[t] += br.shift * bb;
            ++m.value_rev;
        } else {
            build_dc();
        }
    }
    return index;
}

int NetworkModel::add_generator_live(const Generator& gen) {
    bus_index(gen.bus);
    generators_.push_back(gen);
    ++injection_rev_;
    return n_generators() - 1;
}

void NetworkModel::apply(const ComponentChange& change) {
    std::visit(
        [this](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, SetLoad>) {
                set_load(c.bus_id, c.p, c.q);
            } else if constexpr (std::is_same_v<T, ScaleLoad>) {
                const Bus& b = buses_[bus_index(c.bus_id)];
                set_load(c.bus_id, b.p_load * c.factor, b.q_load * c.factor);
            } else if constexpr (std::is_same_v<T, ScaleAllLoads>) {
                for (const auto& b : buses_) set_load(b.id, b.p_load * c.factor,
                                                      b.q_load * c.factor);
            } else if constexpr (std::is_same_v<T, SetShunt>) {
                set_shunt(c.bus_id, c.g, c.b);
            } else if constexpr (std::is_same_v<T, SetBranchStatus>) {
                set_branch_status(c.branch, c.in_service);
            } else if constexpr (std::is_same_v<T, SetBranchParams>) {
                set_branch_params(c.branch, c.params);
            } else if constexpr (std::is_same_v<T, SetTap>) {
                Branch p = branches_.at(c.branch);
                p.tap = c.tap;
                set_branch_params(c.branch, p);
            } else if constexpr (std::is_same_v<T, ScaleAllTaps>) {
                for (int b = 0; b < n_branches(); ++b) {
                    Branch p = branches_[b];
                    p.tap *= c.factor;
                    set_branch_params(b, p);
                }
            } else if constexpr (std::is_same_v<T, SetGeneratorOutput>) {
                set_generator_output(c.generator, c.p, c.q);
            } else if constexpr (std::is_same_v<T, SetGeneratorStatus>) {
                set_generator_status(c.generator, c.in_service);
            } else if constexpr (std::is_same_v<T, AddBranch>) {
                add_branch_live(c.branch);
            } else if constexpr (std::is_same_v<T, AddGenerator>) {
                add_generator_live(c.generator);
            }
        },
        change);
}

}  // namespace gridstate
