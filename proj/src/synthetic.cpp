#include "gridstate/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace gridstate {

NetworkModel make_synthetic_network(const SyntheticSpec& spec) {
    const int n = spec.n_buses;
    if (n < 2) throw NetworkError("synthetic network needs at least 2 buses");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    NetworkModel net;
    net.base_mva = 100.0;

    const int backbone = std::max(3, std::min(n, n / 20 + 4));
    const int gen_every = std::max(2, spec.gen_every);

    std::vector<int> gen_buses;
    for (int i = 0; i < n; ++i) {
        Bus b;
        b.id = i + 1;
        b.kind = i == 0 ? BusKind::Slack : BusKind::Pq;
        b.base_kv = i < backbone ? 345.0 : 138.0;
        b.vm_init = 1.0;
        const bool has_gen = i == 0 || i % gen_every == 0;
        if (has_gen && i != 0) b.kind = BusKind::Pv;
        if (!has_gen) {
            b.p_load = spec.load_scale * (0.2 + 0.6 * uni(rng));
            b.q_load = b.p_load * (0.2 + 0.2 * uni(rng));
        }
        if (has_gen) gen_buses.push_back(i + 1);
        net.add_bus(b);
    }

    auto line = [&](int from, int to, double x_scale) {
        Branch br;
        br.from = from;
        br.to = to;
        br.x = x_scale * (0.05 + 0.10 * uni(rng));
        br.r = br.x / 10.0;
        br.b_charging = 0.02 * uni(rng);
        return br;
    };

    // Meshed backbone ring.
    for (int i = 0; i < backbone; ++i)
        net.add_branch(line(i + 1, (i + 1) % backbone + 1, 0.5));
    // Feeder chains: remaining buses attach to the backbone round-robin.
    int anchor = 0;
    int prev = -1;
    int chain_len = 0;
    for (int i = backbone; i < n; ++i) {
        const int attach = (chain_len == 0 || prev < 0) ? anchor % backbone + 1 : prev;
        net.add_branch(line(attach, i + 1, 1.0));
        prev = i + 1;
        if (++chain_len >= 8) {
            chain_len = 0;
            prev = -1;
            ++anchor;
        }
    }
    // Chords up to the requested branch count; occasional transformer taps.
    const int target = spec.n_branches > 0 ? spec.n_branches : n + n / 10;
    std::uniform_int_distribution<int> pick(1, n);
    int guard = 0;
    while (net.n_branches() < target && ++guard < 100 * target) {
        const int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        Branch br = line(a, b, 1.5);
        if (uni(rng) < 0.15) br.tap = 0.95 + 0.1 * uni(rng);
        if (uni(rng) < 0.05) br.shift = 0.02 * (uni(rng) - 0.5);
        net.add_branch(br);
    }

    // Generators sized to cover the total load with margin, spread evenly.
    double total_load = 0.0;
    for (const auto& b : net.buses()) total_load += b.p_load;
    const double per_gen = total_load * 1.05 / static_cast<double>(gen_buses.size());
    for (int id : gen_buses) {
        Generator g;
        g.bus = id;
        g.p = id == 1 ? 0.0 : per_gen;  // slack picks up the remainder
        g.q = 0.0;
        g.p_min = 0.0;
        g.p_max = per_gen * 3.0 + 1.0;
        g.q_min = -2.0;
        g.q_max = 2.0;
        g.cost.poly = {0.0, 10.0 + 30.0 * uni(rng)};
        net.add_generator(g);
    }
    return net;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string to_matpower_text(const NetworkModel& net, const std::string& name) {
    std::ostringstream out;
    out << "function mpc = " << name << "\n";
    out << "% synthetic case written by gridstate\n\n";
    out << "mpc.version = '2';\n\n";
    out << "mpc.baseMVA = " << fmt(net.base_mva) << ";\n\n";
    const double s = net.base_mva;
    const double rad2deg = 180.0 / 3.14159265358979323846;

    out << "mpc.bus = [\n";
    for (const auto& b : net.buses()) {
        const int type = b.kind == BusKind::Slack ? 3 : (b.kind == BusKind::Pv ? 2 : 1);
        out << "\t" << b.id << "\t" << type << "\t" << fmt(b.p_load * s) << "\t"
            << fmt(b.q_load * s) << "\t" << fmt(b.g_shunt * s) << "\t" << fmt(b.b_shunt * s)
            << "\t1\t" << fmt(b.vm_init) << "\t" << fmt(b.va_init * rad2deg) << "\t"
            << fmt(b.base_kv) << "\t1\t1.1\t0.9;\n";
    }
    out << "];\n\n";

    out << "mpc.gen = [\n";
    for (const auto& g : net.generators()) {
        out << "\t" << g.bus << "\t" << fmt(g.p * s) << "\t" << fmt(g.q * s) << "\t"
            << fmt(g.q_max * s) << "\t" << fmt(g.q_min * s) << "\t1\t" << fmt(s) << "\t"
            << (g.in_service ? 1 : 0) << "\t" << fmt(g.p_max * s) << "\t" << fmt(g.p_min * s)
            << ";\n";
    }
    out << "];\n\n";

    out << "mpc.branch = [\n";
    for (const auto& br : net.branches()) {
        out << "\t" << br.from << "\t" << br.to << "\t" << fmt(br.r) << "\t" << fmt(br.x)
            << "\t" << fmt(br.b_charging) << "\t" << fmt(br.rate_a * s) << "\t0\t0\t"
            << fmt(br.tap == 1.0 ? 0.0 : br.tap) << "\t" << fmt(br.shift * rad2deg) << "\t"
            << (br.in_service ? 1 : 0) << "\t-360\t360;\n";
    }
    out << "];\n\n";

    out << "mpc.gencost = [\n";
    for (const auto& g : net.generators()) {
        const double c1 = g.cost.poly.size() > 1 ? g.cost.poly[1] / s : 0.0;
        const double c0 = g.cost.poly.empty() ? 0.0 : g.cost.poly[0];
        out << "\t2\t0\t0\t3\t0\t" << fmt(c1) << "\t" << fmt(c0) << ";\n";
    }
    out << "];\n";
    return out.str();
}

}  // namespace gridstate
