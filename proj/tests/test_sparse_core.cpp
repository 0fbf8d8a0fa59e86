#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gridstate/lu.hpp"
#include "gridstate/qr.hpp"
#include "gridstate/selected_inverse.hpp"
#include "oracles.hpp"

using namespace gridstate;

namespace {

std::vector<double> random_vec(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = uni(rng);
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("lu: identity factors with zero fill") {
    SparseBuilder<double> b(4, 4);
    for (int i = 0; i < 4; ++i) b.add(i, i, 1.0);
    LuFactorization f;
    f.factor(b.compress());
    CHECK(f.l_idx().empty());
    CHECK(f.u_idx().size() == 4);
    for (double v : f.u_val()) CHECK(v == 1.0);
}

TEST_CASE("lu: 5x5 random sparse solve matches dense elimination") {
    std::mt19937 rng(42);
    auto a = oracles::random_square(5, 10, rng);
    auto bvec = random_vec(5, rng);
    LuFactorization f;
    f.factor(a);
    auto x = f.solve(bvec);
    auto xd = oracles::dense_solve(a, bvec);
    CHECK(max_abs_diff(x, xd) < 1e-10);

    auto y = f.solve_transpose(bvec);
    Eigen::VectorXd yd = oracles::to_dense(a).transpose().fullPivLu().solve(oracles::to_vec(bvec));
    CHECK(max_abs_diff(y, oracles::from_vec(yd)) < 1e-10);
}

TEST_CASE("lu: refactor with changed values equals cold factorization") {
    std::mt19937 rng(7);
    auto a = oracles::random_square(20, 50, rng);
    LuFactorization f;
    f.factor(a);
    const long allocs_after_factor = f.stats().pattern_allocations;

    // Same pattern, new values.
    auto a2 = a;
    std::uniform_real_distribution<double> uni(0.5, 1.5);
    for (size_t k = 0; k < a2.values.size(); ++k) a2.values[k] *= uni(rng);
    f.refactor(a2);
    CHECK(f.stats().pattern_allocations == allocs_after_factor);
    CHECK(f.stats().refactor_count == 1);

    auto bvec = random_vec(20, rng);
    LuFactorization cold;
    cold.factor(a2);
    CHECK(max_abs_diff(f.solve(bvec), cold.solve(bvec)) < 1e-12);
}

TEST_CASE("lu: refactor rejects a different pattern") {
    SparseBuilder<double> b1(3, 3), b2(3, 3);
    for (int i = 0; i < 3; ++i) {
        b1.add(i, i, 2.0);
        b2.add(i, i, 2.0);
    }
    b2.add(0, 2, 1.0);
    LuFactorization f;
    f.factor(b1.compress());
    CHECK_THROWS_AS(f.refactor(b2.compress()), SparseError);
}

TEST_CASE("lu: singular pivot reports the column") {
    SparseBuilder<double> b(3, 3);
    b.add(0, 0, 1.0);
    b.add(1, 1, 1.0);  // column 2 empty
    b.add(0, 2, 0.0);
    LuFactorization f;
    bool caught = false;
    try {
        f.factor(b.compress());
    } catch (const SingularMatrixError& e) {
        caught = true;
        CHECK(e.column == 2);
    }
    CHECK(caught);
}

TEST_CASE("lu: ordering independence of solutions") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        auto a = oracles::random_square(30, 90, rng);
        auto bvec = random_vec(30, rng);
        LuFactorization nat, amd;
        LuOptions on, om;
        on.ordering = Ordering::Natural;
        om.ordering = Ordering::MinDegree;
        nat.factor(a, on);
        amd.factor(a, om);
        CHECK(max_abs_diff(nat.solve(bvec), amd.solve(bvec)) < 1e-9);
    }
}

TEST_CASE("lu: residual property on well-conditioned probes") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 10 + trial * 7;
        auto a = oracles::random_square(n, 4 * n, rng);
        auto bvec = random_vec(n, rng);
        LuFactorization f;
        f.factor(a);
        auto x = f.solve(bvec);
        auto ax = a.multiply(x);
        double binf = 0, rinf = 0;
        for (int i = 0; i < n; ++i) {
            binf = std::max(binf, std::abs(bvec[i]));
            rinf = std::max(rinf, std::abs(ax[i] - bvec[i]));
        }
        CHECK(rinf / binf < 1e-9);
    }
}

TEST_CASE("lu: PAQ = LU on random probes") {
    std::mt19937 rng(19);
    auto a = oracles::random_square(12, 40, rng);
    LuFactorization f;
    f.factor(a);
    const int n = 12;
    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n), u = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        for (int p = f.l_ptr()[j]; p < f.l_ptr()[j + 1]; ++p)
            l(f.row_pinv()[f.l_idx()[p]], j) = f.l_val()[p];
        for (int p = f.u_ptr()[j]; p < f.u_ptr()[j + 1]; ++p) u(f.u_idx()[p], j) = f.u_val()[p];
    }
    Eigen::MatrixXd ad = oracles::to_dense(a);
    Eigen::MatrixXd paq(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) paq(i, j) = ad(f.row_perm()[i], f.col_perm()[j]);
    CHECK(((l * u) - paq).cwiseAbs().maxCoeff() < 1e-10 * paq.cwiseAbs().maxCoeff());
}

TEST_CASE("qr: overdetermined two-row mean") {
    SparseBuilder<double> b(2, 1);
    b.add(0, 0, 1.0);
    b.add(1, 0, 1.0);
    QrFactorization q;
    q.factor(b.compress());
    auto x = q.solve_least_squares({0.0, 10.0});
    CHECK(x[0] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("qr: orthogonal input gives column norms on the R diagonal") {
    // 2x2 rotation scaled by 3: columns orthogonal with norm 3.
    SparseBuilder<double> b(2, 2);
    const double c = 3.0 * std::cos(0.3), s = 3.0 * std::sin(0.3);
    b.add(0, 0, c);
    b.add(1, 0, s);
    b.add(0, 1, -s);
    b.add(1, 1, c);
    QrFactorization q;
    q.factor(b.compress());
    auto d = q.r_diagonal();
    CHECK(d[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("qr: random 20x8 least squares matches dense oracle") {
    std::mt19937 rng(5);
    SparseBuilder<double> b(20, 8);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int j = 0; j < 8; ++j) {
        b.add(j, j, 2.0 + uni(rng));
        for (int t = 0; t < 5; ++t) b.add(std::uniform_int_distribution<int>(0, 19)(rng), j, uni(rng));
    }
    auto a = b.compress();
    auto rhs = random_vec(20, rng);
    QrFactorization q;
    q.factor(a);
    auto x = q.solve_least_squares(rhs);

    Eigen::MatrixXd ad = oracles::to_dense(a);
    Eigen::VectorXd xd = (ad.transpose() * ad).ldlt().solve(ad.transpose() * oracles::to_vec(rhs));
    CHECK(max_abs_diff(x, oracles::from_vec(xd)) < 1e-8);
}

TEST_CASE("qr: orthogonality of Q on probes") {
    std::mt19937 rng(8);
    SparseBuilder<double> b(15, 15);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int j = 0; j < 15; ++j) {
        b.add(j, j, 2.0);
        b.add((j + 3) % 15, j, uni(rng));
    }
    QrFactorization q;
    q.factor(b.compress());
    for (int t = 0; t < 4; ++t) {
        auto v = random_vec(15, rng);
        auto qqt = q.apply_q(q.apply_qt(v));
        CHECK(max_abs_diff(v, qqt) < 1e-10);
    }
}

TEST_CASE("qr: rank deficiency reports column and |R_ii|") {
    SparseBuilder<double> b(3, 2);
    b.add(0, 0, 1.0);
    b.add(1, 0, 1.0);
    b.add(0, 1, 2.0);
    b.add(1, 1, 2.0);  // column 1 = 2 * column 0
    QrFactorization q;
    q.factor(b.compress());
    bool caught = false;
    try {
        q.solve_least_squares({1.0, 2.0, 3.0});
    } catch (const RankDeficientError& e) {
        caught = true;
        CHECK(e.column == 1);
        CHECK(e.r_diag < 1e-10);
    }
    CHECK(caught);
}

TEST_CASE("selected inverse: diag(2,4) quadform") {
    SparseBuilder<double> b(2, 2);
    b.add(0, 0, 2.0);
    b.add(1, 1, 4.0);
    LuFactorization f;
    LuOptions o;
    o.symmetric_pivot = true;
    f.factor(b.compress(), o);
    RowMatrix rows;
    rows.cols = 2;
    rows.add_row({0, 1}, {1.0, 1.0});
    auto q = selected_inverse_quadform(f, rows);
    CHECK(q.values[0] == doctest::Approx(0.75).epsilon(1e-14));
    // The (0,1) pair is outside the filled pattern of a diagonal matrix, so
    // this row goes through the solve fallback.
    CHECK(q.fallback_rows == std::vector<int>{0});

    // With the off-diagonal slot structurally present the Takahashi path
    // covers the row directly.
    SparseBuilder<double> b2(2, 2);
    b2.add(0, 0, 2.0);
    b2.add(1, 1, 4.0);
    b2.add(0, 1, 0.0);
    b2.add(1, 0, 0.0);
    LuFactorization f2;
    f2.factor(b2.compress(), o);
    auto q2 = selected_inverse_quadform(f2, rows);
    CHECK(q2.values[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(q2.fallback_rows.empty());
}

TEST_CASE("selected inverse: unit row returns inverse diagonal") {
    std::mt19937 rng(21);
    auto g = oracles::random_spd(12, 10, rng);
    LuFactorization f;
    LuOptions o;
    o.symmetric_pivot = true;
    f.factor(g, o);
    RowMatrix rows;
    rows.cols = 12;
    for (int i = 0; i < 12; ++i) rows.add_row({i}, {1.0});
    auto q = selected_inverse_quadform(f, rows);
    Eigen::MatrixXd ginv = oracles::dense_inverse(g);
    for (int i = 0; i < 12; ++i) CHECK(q.values[i] == doctest::Approx(ginv(i, i)).epsilon(1e-9));
}

TEST_CASE("selected inverse: random SPD with 120 rows matches dense oracle") {
    std::mt19937 rng(33);
    auto g = oracles::random_spd(50, 60, rng);
    LuFactorization f;
    LuOptions o;
    o.symmetric_pivot = true;
    f.factor(g, o);

    // Rows supported on graph neighborhoods (the gain-matrix case) plus a
    // few scattered rows that may leave the filled pattern.
    RowMatrix rows;
    rows.cols = 50;
    std::uniform_int_distribution<int> pick(0, 49);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int r = 0; r < 110; ++r) {
        const int center = pick(rng);
        std::vector<int> support{center};
        for (int p = g.col_ptr[center]; p < g.col_ptr[center + 1]; ++p)
            if (g.row_idx[p] != center) support.push_back(g.row_idx[p]);
        std::sort(support.begin(), support.end());
        std::vector<double> vals;
        for (size_t k = 0; k < support.size(); ++k) vals.push_back(uni(rng));
        rows.add_row(support, vals);
    }
    for (int r = 0; r < 10; ++r) {
        int a = pick(rng), b = pick(rng);
        if (a == b) b = (b + 17) % 50;
        if (a > b) std::swap(a, b);
        rows.add_row({a, b}, {uni(rng), uni(rng)});
    }

    auto q = selected_inverse_quadform(f, rows);
    Eigen::MatrixXd ginv = oracles::dense_inverse(g);
    Eigen::MatrixXd jd = oracles::to_dense(rows);
    Eigen::MatrixXd full = jd * ginv * jd.transpose();
    for (int r = 0; r < rows.rows(); ++r)
        CHECK(std::abs(q.values[r] - full(r, r)) < 1e-9 * std::max(1.0, std::abs(full(r, r))));
}

TEST_CASE("selected inverse: row mask skips inactive rows") {
    SparseBuilder<double> b(2, 2);
    b.add(0, 0, 2.0);
    b.add(1, 1, 4.0);
    LuFactorization f;
    LuOptions o;
    o.symmetric_pivot = true;
    f.factor(b.compress(), o);
    RowMatrix rows;
    rows.cols = 2;
    rows.add_row({0}, {1.0});
    rows.add_row({1}, {1.0});
    auto q = selected_inverse_quadform(f, rows, {0, 1});
    CHECK(q.values[0] == 0.0);
    CHECK(q.values[1] == doctest::Approx(0.25));
}
