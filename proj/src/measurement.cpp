#include "gridstate/measurement.hpp"

#include "gridstate/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gridstate {

bool kind_is_phasor(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::VphasorMag:
        case MeasurementKind::VphasorAng:
        case MeasurementKind::IphasorMag:
        case MeasurementKind::IphasorAng:
            return true;
        default:
            return false;
    }
}

bool kind_is_branch(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::Pflow:
        case MeasurementKind::Qflow:
        case MeasurementKind::Imag:
        case MeasurementKind::IphasorMag:
        case MeasurementKind::IphasorAng:
            return true;
        default:
            return false;
    }
}

bool kind_is_angle(MeasurementKind k) {
    return k == MeasurementKind::VphasorAng || k == MeasurementKind::IphasorAng;
}

std::string kind_name(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::Vmag: return "vmag";
        case MeasurementKind::Pinj: return "pinj";
        case MeasurementKind::Qinj: return "qinj";
        case MeasurementKind::Pflow: return "pflow";
        case MeasurementKind::Qflow: return "qflow";
        case MeasurementKind::Imag: return "imag";
        case MeasurementKind::VphasorMag: return "vphasor_mag";
        case MeasurementKind::VphasorAng: return "vphasor_ang";
        case MeasurementKind::IphasorMag: return "iphasor_mag";
        case MeasurementKind::IphasorAng: return "iphasor_ang";
    }
    return "?";
}

std::optional<MeasurementKind> kind_from_name(const std::string& name) {
    static const std::unordered_map<std::string, MeasurementKind> table = {
        {"vmag", MeasurementKind::Vmag},
        {"pinj", MeasurementKind::Pinj},
        {"qinj", MeasurementKind::Qinj},
        {"pflow", MeasurementKind::Pflow},
        {"qflow", MeasurementKind::Qflow},
        {"imag", MeasurementKind::Imag},
        {"vphasor_mag", MeasurementKind::VphasorMag},
        {"vphasor_ang", MeasurementKind::VphasorAng},
        {"iphasor_mag", MeasurementKind::IphasorMag},
        {"iphasor_ang", MeasurementKind::IphasorAng},
    };
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

RectangularPhasor phasor_to_rectangular(double mag, double ang, double var_mag, double var_ang) {
    if (var_mag < 0.0 || var_ang < 0.0)
        throw MeasurementError("phasor variances must be nonnegative");
    RectangularPhasor r;
    const double c = std::cos(ang), s = std::sin(ang);
    r.re = mag * c;
    r.im = mag * s;
    // J = [c, -m s; s, m c], C = J diag(vm, va) J^T
    r.var_re = var_mag * c * c + var_ang * mag * mag * s * s;
    r.var_im = var_mag * s * s + var_ang * mag * mag * c * c;
    r.cov = (var_mag - var_ang * mag * mag) * s * c;
    return r;
}

int MeasurementSet::add(Measurement m) {
    if (m.variance <= 0.0) throw MeasurementError("measurement " + m.id + ": variance <= 0");
    if (by_id_.count(m.id)) throw MeasurementError("duplicate measurement id " + m.id);
    by_id_[m.id] = size();
    list_.push_back(std::move(m));
    ++structure_rev_;
    return size() - 1;
}

int MeasurementSet::index_of(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw MeasurementError("unknown measurement id " + id);
    return it->second;
}

std::vector<int> MeasurementSet::of_kind(MeasurementKind k) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (list_[i].kind == k) out.push_back(i);
    return out;
}

void MeasurementSet::update_value(const std::string& id, double value) {
    list_[index_of(id)].value = value;
    ++value_rev_;
}

void MeasurementSet::update_variance(const std::string& id, double variance) {
    if (variance <= 0.0) throw MeasurementError("variance must be positive");
    list_[index_of(id)].variance = variance;
    ++variance_rev_;
}

void MeasurementSet::set_status(const std::string& id, bool in_service) {
    set_status_index(index_of(id), in_service);
}

void MeasurementSet::set_status_index(int index, bool in_service) {
    if (index < 0 || index >= size()) throw MeasurementError("measurement index out of range");
    if (list_[index].in_service == in_service) return;
    list_[index].in_service = in_service;
    ++status_rev_;
}

void MeasurementSet::force_phasor_coordinates(PhasorCoords coords) {
    bool changed = false;
    for (auto& m : list_) {
        if (!kind_is_phasor(m.kind) || m.coordinates == coords) continue;
        m.coordinates = coords;
        changed = true;
    }
    if (changed) ++structure_rev_;
}

namespace {

class NoiseSource {
public:
    explicit NoiseSource(uint64_t seed) : rng_(seed) {}
    double gauss(double variance) {
        if (variance <= 0.0) return 0.0;
        return std::sqrt(variance) * normal_(rng_);
    }
    bool bernoulli(double p) {
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return uniform_(rng_) < p;
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace

MeasurementSet generate_from_solution(NetworkModel& network, const SolvedState& solution,
                                      const MeasurementTemplate& tmpl, uint64_t seed) {
    if (static_cast<int>(solution.vm.size()) != network.n_buses() ||
        static_cast<int>(solution.va.size()) != network.n_buses())
        throw MeasurementError("solution does not match the network size");

    const BranchFlowQuantities q = evaluate_branch_flows(network, solution.vm, solution.va);
    MeasurementSet set;
    set.generation_seed = seed;
    NoiseSource noise(seed);
    int counter = 0;

    auto emit = [&](MeasurementKind kind, int element, BranchSide side, double exact,
                    double variance, PhasorCoords coords) {
        Measurement m;
        m.id = "m" + std::to_string(++counter);
        m.kind = kind;
        m.element = element;
        m.side = side;
        m.variance = std::max(variance, 1e-12);
        m.value = tmpl.exact ? exact : exact + noise.gauss(variance);
        m.coordinates = coords;
        m.neglect_covariance = tmpl.neglect_covariance;
        set.add(std::move(m));
    };

    const auto none = PhasorCoords::None;
    if (tmpl.vmag_all)
        for (int i = 0; i < network.n_buses(); ++i)
            emit(MeasurementKind::Vmag, network.bus(i).id, BranchSide::None, solution.vm[i],
                 tmpl.var_legacy, none);

    for (int b = 0; b < network.n_branches(); ++b) {
        if (!network.branch(b).in_service) continue;
        if (tmpl.flow_from_all) {
            emit(MeasurementKind::Pflow, b + 1, BranchSide::From, q.p_from[b], tmpl.var_legacy,
                 none);
            emit(MeasurementKind::Qflow, b + 1, BranchSide::From, q.q_from[b], tmpl.var_legacy,
                 none);
        }
        if (noise.bernoulli(tmpl.p_flow_to)) {
            emit(MeasurementKind::Pflow, b + 1, BranchSide::To, q.p_to[b], tmpl.var_legacy, none);
            emit(MeasurementKind::Qflow, b + 1, BranchSide::To, q.q_to[b], tmpl.var_legacy, none);
        }
        if (noise.bernoulli(tmpl.p_imag))
            emit(MeasurementKind::Imag, b + 1, BranchSide::From, std::abs(q.i_from[b]),
                 tmpl.var_legacy, none);
        if (noise.bernoulli(tmpl.p_iphasor)) {
            emit(MeasurementKind::IphasorMag, b + 1, BranchSide::From, std::abs(q.i_from[b]),
                 tmpl.var_phasor, tmpl.phasor_coords);
            emit(MeasurementKind::IphasorAng, b + 1, BranchSide::From, std::arg(q.i_from[b]),
                 tmpl.var_phasor, tmpl.phasor_coords);
        }
    }
    for (int i = 0; i < network.n_buses(); ++i) {
        if (noise.bernoulli(tmpl.p_injection)) {
            emit(MeasurementKind::Pinj, network.bus(i).id, BranchSide::None, q.p_injection[i],
                 tmpl.var_legacy, none);
            emit(MeasurementKind::Qinj, network.bus(i).id, BranchSide::None, q.q_injection[i],
                 tmpl.var_legacy, none);
        }
        if (noise.bernoulli(tmpl.p_vphasor)) {
            emit(MeasurementKind::VphasorMag, network.bus(i).id, BranchSide::None, solution.vm[i],
                 tmpl.var_phasor, tmpl.phasor_coords);
            emit(MeasurementKind::VphasorAng, network.bus(i).id, BranchSide::None, solution.va[i],
                 tmpl.var_phasor, tmpl.phasor_coords);
        }
    }
    return set;
}

MeasurementSet generate_from_dc_solution(NetworkModel& network, const std::vector<double>& theta,
                                         const DcMeasurementTemplate& tmpl, uint64_t seed) {
    if (static_cast<int>(theta.size()) != network.n_buses())
        throw MeasurementError("solution does not match the network size");
    const DcModel& dc = network.dc();
    MeasurementSet set;
    set.generation_seed = seed;
    NoiseSource noise(seed);
    int counter = 0;

    auto emit = [&](MeasurementKind kind, int element, BranchSide side, double exact,
                    double variance, PhasorCoords coords) {
        Measurement m;
        m.id = "m" + std::to_string(++counter);
        m.kind = kind;
        m.element = element;
        m.side = side;
        m.variance = std::max(variance, 1e-12);
        m.value = tmpl.exact ? exact : exact + noise.gauss(variance);
        m.coordinates = coords;
        set.add(std::move(m));
    };

    for (int b = 0; b < network.n_branches(); ++b) {
        const auto& br = network.branch(b);
        if (!br.in_service) continue;
        const int f = network.bus_index(br.from), t = network.bus_index(br.to);
        const double bb = dc.branch_susceptance[b];
        const double pf = bb * (theta[f] - theta[t]) - br.shift * bb;
        if (tmpl.flow_from_all)
            emit(MeasurementKind::Pflow, b + 1, BranchSide::From, pf, tmpl.var_flow,
                 PhasorCoords::None);
        if (tmpl.flow_to_all)
            emit(MeasurementKind::Pflow, b + 1, BranchSide::To, -pf, tmpl.var_flow,
                 PhasorCoords::None);
    }
    const auto binj = dc.b.multiply(theta);
    for (int i = 0; i < network.n_buses(); ++i) {
        if (noise.bernoulli(tmpl.p_injection)) {
            const double p = binj[i] + dc.shift_injection[i] + dc.shunt_p[i];
            emit(MeasurementKind::Pinj, network.bus(i).id, BranchSide::None, p, tmpl.var_flow,
                 PhasorCoords::None);
        }
        if (noise.bernoulli(tmpl.p_angle_phasor))
            emit(MeasurementKind::VphasorAng, network.bus(i).id, BranchSide::None, theta[i],
                 tmpl.var_angle, PhasorCoords::Polar);
    }
    return set;
}

void randomize_availability(MeasurementSet& set, const AvailabilityPolicy& policy, uint64_t seed) {
    std::vector<int> subset;
    for (int i = 0; i < set.size(); ++i) {
        if (policy.kinds.empty() ||
            std::find(policy.kinds.begin(), policy.kinds.end(), set.at(i).kind) !=
                policy.kinds.end())
            subset.push_back(i);
    }
    if (policy.in_service_count < 0 ||
        policy.in_service_count > static_cast<int>(subset.size()))
        throw MeasurementError("availability count exceeds the subset size");

    std::mt19937_64 rng(seed);
    // Fisher-Yates prefix of the requested size.
    for (int k = 0; k < policy.in_service_count; ++k) {
        std::uniform_int_distribution<int> pick(k, static_cast<int>(subset.size()) - 1);
        std::swap(subset[k], subset[pick(rng)]);
    }
    for (size_t k = 0; k < subset.size(); ++k)
        set.set_status_index(subset[k], k < static_cast<size_t>(policy.in_service_count));
}

}  // namespace gridstate
