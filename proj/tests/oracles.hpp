#pragma once

// Dense reference computations for the test suites. Everything here goes
// through Eigen so the expected values never share code with the sparse
// kernels under test.

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "gridstate/sparse.hpp"

namespace oracles {

inline Eigen::MatrixXd to_dense(const gridstate::SparseMatrix<double>& a) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows, a.cols);
    for (int j = 0; j < a.cols; ++j)
        for (int p = a.col_ptr[j]; p < a.col_ptr[j + 1]; ++p) m(a.row_idx[p], j) = a.values[p];
    return m;
}

inline Eigen::MatrixXd to_dense(const gridstate::RowMatrix& a) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.cols);
    for (int r = 0; r < a.rows(); ++r)
        for (size_t k = 0; k < a.idx[r].size(); ++k) m(r, a.idx[r][k]) = a.val[r][k];
    return m;
}

inline Eigen::VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

inline std::vector<double> from_vec(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline std::vector<double> dense_solve(const gridstate::SparseMatrix<double>& a,
                                       const std::vector<double>& b) {
    Eigen::VectorXd x = to_dense(a).fullPivLu().solve(to_vec(b));
    return from_vec(x);
}

inline Eigen::MatrixXd dense_inverse(const gridstate::SparseMatrix<double>& a) {
    return to_dense(a).inverse();
}

inline int dense_rank(const Eigen::MatrixXd& m, double tol = 1e-8) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(tol);
    return static_cast<int>(qr.rank());
}

/// Least-squares via dense normal equations with per-row weights.
inline std::vector<double> dense_weighted_ls(const Eigen::MatrixXd& h,
                                             const Eigen::VectorXd& z,
                                             const Eigen::VectorXd& w) {
    Eigen::MatrixXd g = h.transpose() * w.asDiagonal() * h;
    Eigen::VectorXd rhs = h.transpose() * w.asDiagonal() * z;
    return from_vec(g.ldlt().solve(rhs));
}

/// Sparse diagonally dominant SPD matrix on a random graph; pattern is
/// symmetric by construction.
inline gridstate::SparseMatrix<double> random_spd(int n, int extra_edges, std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(0.2, 1.0);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 1; i < n; ++i) edges.push_back({i - 1, i, uni(rng)});
    for (int e = 0; e < extra_edges; ++e) {
        int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        edges.push_back({std::min(a, b), std::max(a, b), uni(rng)});
    }
    std::vector<double> diag(n, 0.0);
    gridstate::SparseBuilder<double> b(n, n);
    for (auto& [i, j, w] : edges) {
        b.add(i, j, -w);
        b.add(j, i, -w);
        diag[i] += w;
        diag[j] += w;
    }
    for (int i = 0; i < n; ++i) b.add(i, i, diag[i] + 0.5 + uni(rng));
    return b.compress();
}

/// Random square sparse matrix with a guaranteed nonzero diagonal.
inline gridstate::SparseMatrix<double> random_square(int n, int extra, std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(0, n - 1);
    gridstate::SparseBuilder<double> b(n, n);
    for (int i = 0; i < n; ++i) b.add(i, i, 3.0 + uni(rng));
    for (int e = 0; e < extra; ++e) b.add(pick(rng), pick(rng), uni(rng));
    return b.compress();
}

}  // namespace oracles
