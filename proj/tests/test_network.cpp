#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gridstate/network.hpp"
#include "oracles.hpp"

using namespace gridstate;

namespace {

NetworkModel two_bus(double r, double x, double tap, double shift) {
    NetworkModel net;
    net.add_bus({.id = 1, .kind = BusKind::Slack, .base_kv = 100.0});
    net.add_bus({.id = 2, .kind = BusKind::Pq, .base_kv = 100.0});
    net.add_branch({.from = 1, .to = 2, .r = r, .x = x, .tap = tap, .shift = shift});
    return net;
}

NetworkModel triangle(std::array<double, 3> x) {
    NetworkModel net;
    for (int i = 1; i <= 3; ++i)
        net.add_bus({.id = i, .kind = i == 1 ? BusKind::Slack : BusKind::Pq, .base_kv = 100.0});
    net.add_branch({.from = 1, .to = 2, .r = 0.01, .x = x[0]});
    net.add_branch({.from = 2, .to = 3, .r = 0.01, .x = x[1]});
    net.add_branch({.from = 1, .to = 3, .r = 0.01, .x = x[2]});
    return net;
}

double cmax(const SparseMatrix<cdouble>& a, const SparseMatrix<cdouble>& b) {
    double m = 0;
    for (int k = 0; k < a.nnz(); ++k) m = std::max(m, std::abs(a.values[k] - b.values[k]));
    return m;
}

}  // namespace

TEST_CASE("ac model: tap branch block entries") {
    auto net = two_bus(0.1, 0.2, 2.0, 0.0);
    const auto& ac = net.ac();
    // y = 1/(0.1+0.2j) = 2-4j, alpha = 0.5
    CHECK(std::abs(ac.ybus.at(0, 0) - cdouble(0.5, -1.0)) < 1e-14);
    CHECK(std::abs(ac.ybus.at(0, 1) - cdouble(-1.0, 2.0)) < 1e-14);
    CHECK(std::abs(ac.ybus.at(1, 1) - cdouble(2.0, -4.0)) < 1e-14);
}

TEST_CASE("ac model: out-of-service branch contributes nothing") {
    auto net = two_bus(0.1, 0.2, 1.0, 0.0);
    net.set_branch_status(0, false);
    const auto& ac = net.ac();
    for (const auto& v : ac.ybus.values) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("ac model: phase shift produces conjugate asymmetry") {
    auto net = two_bus(0.1, 0.2, 1.0, 0.1);
    const auto& ac = net.ac();
    const cdouble y = 1.0 / cdouble(0.1, 0.2);
    CHECK(std::abs(ac.ybus.at(0, 1) - (-std::polar(1.0, 0.1) * y)) < 1e-14);
    CHECK(std::abs(ac.ybus.at(1, 0) - (-std::polar(1.0, -0.1) * y)) < 1e-14);
}

TEST_CASE("dc model: single-branch flow cases") {
    auto net = two_bus(0.0, 0.5, 1.0, 0.0);
    const auto& dc = net.dc();
    const double b = dc.branch_susceptance[0];
    // theta = (0, -0.5): P_12 = b*(th_f - th_t) - shift*b
    CHECK(b * (0.0 - -0.5) == doctest::Approx(1.0).epsilon(1e-14));

    auto net2 = two_bus(0.0, 0.5, 1.0, 0.1);
    const auto& dc2 = net2.dc();
    const double p12 = dc2.branch_susceptance[0] * (0.0 - 0.0) -
                       net2.branch(0).shift * dc2.branch_susceptance[0];
    CHECK(p12 == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("dc model: triangle matches dense assembly oracle") {
    auto net = triangle({0.1, 0.2, 0.25});
    const auto& dc = net.dc();
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(3, 3);
    auto stamp = [&](int f, int t, double x) {
        const double b = 1.0 / x;
        expect(f, f) += b;
        expect(t, t) += b;
        expect(f, t) -= b;
        expect(t, f) -= b;
    };
    stamp(0, 1, 0.1);
    stamp(1, 2, 0.2);
    stamp(0, 2, 0.25);
    Eigen::MatrixXd got = oracles::to_dense(dc.b);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-14);
    // Branch-term row sums vanish before slack handling.
    for (int i = 0; i < 3; ++i) CHECK(std::abs(got.row(i).sum()) < 1e-14);
}

TEST_CASE("update: status toggle patch equals rebuild") {
    auto net = triangle({0.1, 0.2, 0.25});
    net.ac();
    net.dc();
    net.set_branch_status(1, false);

    NetworkModel fresh = triangle({0.1, 0.2, 0.25});
    fresh.set_branch_status(1, false);
    // fresh models are built after the change
    CHECK(cmax(net.ac().ybus, fresh.ac().ybus) < 1e-14);

    net.set_branch_status(1, true);
    NetworkModel fresh2 = triangle({0.1, 0.2, 0.25});
    CHECK(cmax(net.ac().ybus, fresh2.ac().ybus) < 1e-14);
}

TEST_CASE("update: load change leaves matrices untouched") {
    auto net = triangle({0.1, 0.2, 0.25});
    const auto v_ac = net.ac().value_rev;
    const auto v_dc = net.dc().value_rev;
    const auto inj = net.injection_rev();
    net.set_load(2, 0.5, 0.1);
    CHECK(net.ac().value_rev == v_ac);
    CHECK(net.dc().value_rev == v_dc);
    CHECK(net.injection_rev() == inj + 1);
}

TEST_CASE("update: tap change patch matches rebuild within 1e-14") {
    auto net = two_bus(0.1, 0.2, 1.0, 0.0);
    net.ac();
    net.dc();
    Branch p = net.branch(0);
    p.tap = 1.01;
    net.set_branch_params(0, p);

    auto fresh = two_bus(0.1, 0.2, 1.01, 0.0);
    CHECK(cmax(net.ac().ybus, fresh.ac().ybus) < 1e-14);
    Eigen::MatrixXd db = oracles::to_dense(net.dc().b) - oracles::to_dense(fresh.dc().b);
    CHECK(db.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("update: numeric changes never bump the pattern revision") {
    auto net = triangle({0.1, 0.2, 0.25});
    const auto pat_ac = net.ac().pattern_rev;
    const auto pat_dc = net.dc().pattern_rev;
    net.set_branch_status(0, false);
    net.set_branch_status(0, true);
    Branch p = net.branch(1);
    p.tap = 0.98;
    p.shift = 0.02;
    net.set_branch_params(1, p);
    net.set_shunt(1, 0.01, 0.05);
    net.set_load(3, 1.0, 0.3);
    // Parallel branch over an existing corridor keeps the pattern too.
    net.apply(AddBranch{{.from = 1, .to = 2, .r = 0.02, .x = 0.3}});
    CHECK(net.ac().pattern_rev == pat_ac);
    CHECK(net.dc().pattern_rev == pat_dc);

    // A genuinely new corridor must change the pattern.
    NetworkModel net2 = triangle({0.1, 0.2, 0.25});
    net2.add_bus({.id = 4, .kind = BusKind::Pq, .base_kv = 100.0});
    net2.ac();
    const auto pat2 = net2.ac().pattern_rev;
    net2.apply(AddBranch{{.from = 3, .to = 4, .r = 0.02, .x = 0.3}});
    CHECK(net2.ac().pattern_rev == pat2 + 1);
}

TEST_CASE("property: random update sequences equal from-scratch builds") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> uni(0.5, 1.5);
    auto make = [] {
        NetworkModel net;
        for (int i = 1; i <= 6; ++i)
            net.add_bus(
                {.id = i, .kind = i == 1 ? BusKind::Slack : BusKind::Pq, .base_kv = 100.0});
        for (int i = 1; i < 6; ++i)
            net.add_branch({.from = i, .to = i + 1, .r = 0.01 * i, .x = 0.1 * i});
        net.add_branch({.from = 1, .to = 4, .r = 0.02, .x = 0.25, .shift = 0.05});
        net.add_branch({.from = 2, .to = 6, .r = 0.03, .x = 0.3, .tap = 1.05});
        return net;
    };
    auto net = make();
    auto mirror = make();  // receives the same edits but never builds early
    net.ac();
    net.dc();

    for (int step = 0; step < 40; ++step) {
        const int kind = static_cast<int>(rng() % 4);
        if (kind == 0) {
            const int b = static_cast<int>(rng() % net.n_branches());
            const bool on = rng() % 2 == 0;
            if (!net.branch(b).in_service || net.branch(b).x != 0.0) {
                net.set_branch_status(b, on);
                mirror.set_branch_status(b, on);
            }
        } else if (kind == 1) {
            const int b = static_cast<int>(rng() % net.n_branches());
            Branch p = net.branch(b);
            p.x *= uni(rng);
            p.tap *= uni(rng);
            p.shift += 0.01;
            net.set_branch_params(b, p);
            mirror.set_branch_params(b, p);
        } else if (kind == 2) {
            const int id = 1 + static_cast<int>(rng() % 6);
            const double g = 0.01 * uni(rng), bb = 0.1 * uni(rng);
            net.set_shunt(id, g, bb);
            mirror.set_shunt(id, g, bb);
        } else {
            const int id = 1 + static_cast<int>(rng() % 6);
            net.set_load(id, uni(rng), 0.3 * uni(rng));
            mirror.set_load(id, uni(rng), 0.3 * uni(rng));
        }
    }

    Eigen::MatrixXd ya(6, 6), yb(6, 6);
    const auto& pa = net.ac().ybus;
    const auto& pb = mirror.ac().ybus;  // built cold at the end
    REQUIRE(pa.same_pattern(pb));
    double rel = 0.0;
    for (int k = 0; k < pa.nnz(); ++k)
        rel = std::max(rel, std::abs(pa.values[k] - pb.values[k]) /
                                std::max(1.0, std::abs(pb.values[k])));
    CHECK(rel < 1e-12);

    const auto& da = net.dc().b;
    const auto& db = mirror.dc().b;
    REQUIRE(da.same_pattern(db));
    for (int k = 0; k < da.nnz(); ++k)
        CHECK(std::abs(da.values[k] - db.values[k]) <=
              1e-12 * std::max(1.0, std::abs(db.values[k])));
}

TEST_CASE("property: branch blocks satisfy Kirchhoff sums against Y") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(0.9, 1.1);
    auto net = triangle({0.1, 0.2, 0.25});
    net.set_shunt(2, 0.01, 0.2);
    Branch p = net.branch(2);
    p.shift = 0.07;
    p.tap = 1.04;
    net.set_branch_params(2, p);
    const auto& ac = net.ac();

    for (int trial = 0; trial < 5; ++trial) {
        std::vector<cdouble> v(3);
        for (auto& vi : v) vi = std::polar(uni(rng), 0.2 * uni(rng));
        // Injection currents from Y.
        const auto iy = ac.ybus.multiply(v);
        // Per-branch block currents summed per bus plus shunt currents.
        std::vector<cdouble> ib(3, 0.0);
        for (int b = 0; b < net.n_branches(); ++b) {
            const auto& br = net.branch(b);
            const int f = net.bus_index(br.from), t = net.bus_index(br.to);
            const auto& blk = ac.blocks[b];
            ib[f] += blk.yff * v[f] + blk.yft * v[t];
            ib[t] += blk.ytf * v[f] + blk.ytt * v[t];
        }
        for (int i = 0; i < 3; ++i)
            ib[i] += cdouble(net.bus(i).g_shunt, net.bus(i).b_shunt) * v[i];
        for (int i = 0; i < 3; ++i) CHECK(std::abs(ib[i] - iy[i]) < 1e-12);
    }
}

TEST_CASE("property: dc flows are lossless without phase shift") {
    auto net = triangle({0.1, 0.2, 0.25});
    const auto& dc = net.dc();
    const std::vector<double> theta{0.0, -0.1, 0.07};
    for (int b = 0; b < net.n_branches(); ++b) {
        const auto& br = net.branch(b);
        const int f = net.bus_index(br.from), t = net.bus_index(br.to);
        const double bb = dc.branch_susceptance[b];
        const double pf = bb * (theta[f] - theta[t]);
        const double pt = bb * (theta[t] - theta[f]);
        CHECK(pf == -pt);  // exact antisymmetry
    }
}

TEST_CASE("per-unit conversion") {
    CHECK(impedance_to_per_unit(0.0, 10.0, 0.0, 0.0, 100.0, 100.0).r == 0.0);
    CHECK(impedance_to_per_unit(0.0, 10.0, 0.0, 0.0, 100.0, 100.0).x ==
          doctest::Approx(0.1).epsilon(1e-14));
    CHECK(impedance_to_per_unit(0.0, 0.0, 0.0, 1e-4, 100.0, 100.0).b ==
          doctest::Approx(0.01).epsilon(1e-14));
    CHECK_THROWS_AS(impedance_to_per_unit(1, 1, 0, 0, -5, 100), NetworkError);
}

TEST_CASE("errors: duplicate slack, zero tap, zero impedance") {
    NetworkModel net;
    net.add_bus({.id = 1, .kind = BusKind::Slack, .base_kv = 10.0});
    net.add_bus({.id = 2, .kind = BusKind::Slack, .base_kv = 10.0});
    CHECK_THROWS_AS(net.validate(), NetworkError);

    NetworkModel net2;
    net2.add_bus({.id = 1, .kind = BusKind::Slack, .base_kv = 10.0});
    net2.add_bus({.id = 2, .kind = BusKind::Pq, .base_kv = 10.0});
    CHECK_THROWS_AS(net2.add_branch({.from = 1, .to = 2, .r = 0.1, .x = 0.2, .tap = 0.0}),
                    NetworkError);
    CHECK_THROWS_AS(net2.add_branch({.from = 1, .to = 2, .r = 0.0, .x = 0.0}), NetworkError);
    CHECK_THROWS_AS(net2.add_branch({.from = 1, .to = 9, .r = 0.1, .x = 0.2}), NetworkError);
}
